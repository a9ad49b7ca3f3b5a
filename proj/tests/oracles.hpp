/* Copyright 2026 The MIQA Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

// Reference implementations for tests. These deliberately take the slow,
// definitional route (pixel counting, pair enumeration, prefix enumeration)
// and share no code with the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "miqa/core/types.hpp"

namespace oracle {

using miqa::BBox;
using miqa::CategoryId;

// ---------------------------------------------------------------------------
// Matching and AP

struct Item {
  CategoryId category = 0;
  double confidence = 0;
  std::vector<std::uint8_t> pixels;  // rasterized support, row-major
};

inline std::vector<std::uint8_t> raster_box(const BBox& b, int w, int h) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h) out[static_cast<std::size_t>(y) * w + x] = 1;
    }
  }
  return out;
}

inline std::vector<std::uint8_t> raster_rle(const miqa::RunLengthMask& m) {
  std::vector<std::uint8_t> out;
  std::uint8_t v = 0;
  for (auto c : m.counts) {
    out.insert(out.end(), c, v);
    v ^= 1;
  }
  return out;
}

inline double iou(const Item& a, const Item& b) {
  long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    inter += a.pixels[i] && b.pixels[i];
    uni += a.pixels[i] || b.pixels[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct Match {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double precision = 0, recall = 0;
};

// Visits predictions by descending confidence, earlier index first on ties.
inline std::vector<std::size_t> visit_order(const std::vector<Item>& preds) {
  std::vector<std::size_t> order;
  std::vector<bool> used(preds.size(), false);
  for (std::size_t k = 0; k < preds.size(); ++k) {
    std::size_t pick = preds.size();
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (used[i]) continue;
      if (pick == preds.size() || preds[i].confidence > preds[pick].confidence) pick = i;
    }
    used[pick] = true;
    order.push_back(pick);
  }
  return order;
}

inline Match greedy(const std::vector<Item>& preds, const std::vector<Item>& refs, double tau) {
  Match m;
  std::vector<bool> taken(refs.size(), false);
  for (auto p : visit_order(preds)) {
    std::optional<std::size_t> best;
    double best_iou = 0;
    for (std::size_t r = 0; r < refs.size(); ++r) {
      if (taken[r] || refs[r].category != preds[p].category) continue;
      const double v = iou(preds[p], refs[r]);
      if (!best || v > best_iou) {
        best = r;
        best_iou = v;
      }
    }
    if (best && best_iou >= tau) {
      taken[*best] = true;
      m.pairs.emplace_back(p, *best);
    }
  }
  const double k = static_cast<double>(preds.size()), g = static_cast<double>(refs.size());
  m.precision = preds.empty() ? (refs.empty() ? 1.0 : 0.0) : static_cast<double>(m.pairs.size()) / k;
  m.recall = refs.empty() ? (preds.empty() ? 1.0 : 0.0) : static_cast<double>(m.pairs.size()) / g;
  return m;
}

// AP by prefix enumeration: for every prefix of the ranked list compute
// (recall, precision); the interpolated precision at recall r is the best
// precision over prefixes reaching recall >= r; integrate the resulting
// step function over the distinct recall levels.
inline double ap(const std::vector<Item>& preds, const std::vector<Item>& refs, CategoryId c, double tau) {
  std::vector<Item> p, r;
  for (const auto& it : preds)
    if (it.category == c) p.push_back(it);
  for (const auto& it : refs)
    if (it.category == c) r.push_back(it);
  if (p.empty() && r.empty()) return 1.0;
  if (p.empty() || r.empty()) return 0.0;
  const auto m = greedy(p, r, tau);
  std::set<std::size_t> tp_preds;
  for (auto [pi, ri] : m.pairs) tp_preds.insert(pi);
  const auto order = visit_order(p);
  std::vector<std::pair<double, double>> points;  // (recall, precision)
  for (std::size_t len = 1; len <= order.size(); ++len) {
    std::size_t tp = 0;
    for (std::size_t i = 0; i < len; ++i) tp += tp_preds.count(order[i]);
    points.emplace_back(static_cast<double>(tp) / r.size(), static_cast<double>(tp) / len);
  }
  std::set<double> levels;
  for (auto [rc, pr] : points) levels.insert(rc);
  double area = 0, prev = 0;
  for (double level : levels) {
    double best = 0;
    for (auto [rc, pr] : points)
      if (rc >= level) best = std::max(best, pr);
    area += (level - prev) * best;
    prev = level;
  }
  return area;
}

inline double map(const std::vector<Item>& preds, const std::vector<Item>& refs, const std::vector<double>& taus) {
  std::set<CategoryId> cats;
  for (const auto& it : preds) cats.insert(it.category);
  for (const auto& it : refs) cats.insert(it.category);
  if (cats.empty()) return 1.0;
  double total = 0;
  for (auto c : cats) {
    double s = 0;
    for (double t : taus) s += ap(preds, refs, c, t);
    total += s / taus.size();
  }
  return total / cats.size();
}

inline std::vector<Item> items(const miqa::DetectionSet& s, int w, int h) {
  std::vector<Item> out;
  for (const auto& d : s.items) out.push_back({d.category, d.confidence, raster_box(d.bbox, w, h)});
  return out;
}

inline std::vector<Item> items(const miqa::InstanceSet& s) {
  std::vector<Item> out;
  for (const auto& d : s.items) out.push_back({d.category, d.confidence, raster_rle(d.mask)});
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

inline std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  if (da == 0 || db == 0) return std::nullopt;
  return num / std::sqrt(da * db);
}

// Rank = 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double x : v) {
      less += x < v[i];
      equal += x == v[i];
    }
    out[i] = 1 + less + (equal - 1) / 2;
  }
  return out;
}

inline std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

// Kendall tau-b by enumerating all pairs.
inline std::optional<double> kendall(const std::vector<double>& a, const std::vector<double>& b) {
  double conc = 0, disc = 0, tie_a = 0, tie_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j], db = b[i] - b[j];
      if (da == 0 && db == 0) continue;
      if (da == 0) {
        tie_a += 1;
      } else if (db == 0) {
        tie_b += 1;
      } else if ((da > 0) == (db > 0)) {
        conc += 1;
      } else {
        disc += 1;
      }
    }
  }
  const double d1 = conc + disc + tie_a, d2 = conc + disc + tie_b;
  if (d1 == 0 || d2 == 0) return std::nullopt;
  return (conc - disc) / std::sqrt(d1 * d2);
}

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / a.size());
}

// ---------------------------------------------------------------------------
// SSIM, computed window by window in two dimensions.

inline double ssim(const miqa::ImageBuffer& x, const miqa::ImageBuffer& y) {
  auto gray = [](const miqa::ImageBuffer& im) {
    std::vector<double> g(static_cast<std::size_t>(im.width()) * im.height());
    for (int r = 0; r < im.height(); ++r)
      for (int c = 0; c < im.width(); ++c)
        g[static_cast<std::size_t>(r) * im.width() + c] =
            0.299 * im.at(c, r, 0) + 0.587 * im.at(c, r, 1) + 0.114 * im.at(c, r, 2);
    return g;
  };
  const auto gx = gray(x), gy = gray(y);
  const int w = x.width(), h = x.height();
  double win[11][11];
  double total = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) total += win[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double acc = 0;
  int count = 0;
  for (int r = 0; r + 11 <= h; ++r) {
    for (int c = 0; c + 11 <= w; ++c) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < 11; ++i) {
        for (int j = 0; j < 11; ++j) {
          const double wt = win[i][j] / total;
          const double a = gx[static_cast<std::size_t>(r + i) * w + c + j];
          const double b = gy[static_cast<std::size_t>(r + i) * w + c + j];
          mx += wt * a;
          my += wt * b;
          sxx += wt * a * a;
          syy += wt * b * b;
          sxy += wt * a * b;
        }
      }
      const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
      acc += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return acc / count;
}

// ---------------------------------------------------------------------------
// Random small matching instances on a 16x16 canvas: at most 6 items per
// side, at most 3 categories, integer boxes, confidences drawn from a short
// list so ties occur.

inline constexpr int kCanvas = 16;

inline miqa::BBox random_box(std::mt19937& rng) {
  std::uniform_int_distribution<int> pos(0, kCanvas - 2);
  const int x = pos(rng), y = pos(rng);
  std::uniform_int_distribution<int> wd(1, kCanvas - x), hd(1, kCanvas - y);
  return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(wd(rng)),
          static_cast<double>(hd(rng))};
}

inline double random_confidence(std::mt19937& rng) {
  static const double levels[] = {0.3, 0.5, 0.55, 0.7, 0.9, 1.0};
  return levels[std::uniform_int_distribution<int>(0, 5)(rng)];
}

inline miqa::DetectionSet random_detections(std::mt19937& rng) {
  miqa::DetectionSet s;
  const int n = std::uniform_int_distribution<int>(0, 6)(rng);
  for (int i = 0; i < n; ++i) {
    s.items.push_back({random_box(rng), std::uniform_int_distribution<CategoryId>(1, 3)(rng), random_confidence(rng)});
  }
  return s;
}

// A perturbed copy: boxes shifted by up to 2 px, some dropped, some added.
inline miqa::DetectionSet jitter(const miqa::DetectionSet& base, std::mt19937& rng) {
  miqa::DetectionSet s;
  std::uniform_int_distribution<int> d(-2, 2);
  for (auto it : base.items) {
    if (rng() % 5 == 0) continue;
    it.bbox.x = std::clamp(it.bbox.x + d(rng), 0.0, kCanvas - 1.0);
    it.bbox.y = std::clamp(it.bbox.y + d(rng), 0.0, kCanvas - 1.0);
    it.bbox.w = std::min(it.bbox.w, kCanvas - it.bbox.x);
    it.bbox.h = std::min(it.bbox.h, kCanvas - it.bbox.y);
    it.confidence = random_confidence(rng);
    s.items.push_back(it);
  }
  if (rng() % 3 == 0 && s.items.size() < 6) {
    s.items.push_back({random_box(rng), std::uniform_int_distribution<CategoryId>(1, 3)(rng), random_confidence(rng)});
  }
  return s;
}

inline miqa::RunLengthMask encode(const std::vector<std::uint8_t>& px, int w, int h) {
  miqa::RunLengthMask m{w, h, {}};
  std::uint8_t v = 0;
  std::uint32_t run = 0;
  for (auto b : px) {
    if (b != v) {
      m.counts.push_back(run);
      run = 0;
      v = b;
    }
    ++run;
  }
  m.counts.push_back(run);
  return m;
}

// Instances from random blobs: a box with random pixels knocked out.
inline miqa::InstanceSet to_instances(const miqa::DetectionSet& s, std::mt19937& rng) {
  miqa::InstanceSet out;
  for (const auto& d : s.items) {
    auto px = raster_box(d.bbox, kCanvas, kCanvas);
    for (auto& p : px) {
      if (p && rng() % 6 == 0) p = 0;
    }
    out.items.push_back({encode(px, kCanvas, kCanvas), d.category, d.confidence});
  }
  return out;
}

}  // namespace oracle
