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

// Task-specific agreement between a prediction and a reference: top-1
// indicator for classification, per-image mAP under confidence-ordered
// greedy IoU matching for detection and instance segmentation.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "miqa/core/rle.hpp"
#include "miqa/core/types.hpp"

namespace miqa {

enum class IouMode : std::uint8_t { kSingleTau, kCocoRange };

inline IouMode parse_iou_mode(std::string_view s) {
  if (s == "single" || s == "single_tau") return IouMode::kSingleTau;
  if (s == "coco" || s == "coco_range") return IouMode::kCocoRange;
  throw ParseError("unknown iou mode '" + std::string(s) + "'");
}

inline constexpr std::string_view to_string(IouMode m) noexcept {
  return m == IouMode::kSingleTau ? "single_tau" : "coco_range";
}

struct MatchConfig {
  double tau = 0.5;
  double ref_confidence = 0.5;  // filter for prediction-derived references
  IouMode iou_mode = IouMode::kSingleTau;

  void validate() const {
    if (!(tau > 0 && tau < 1)) throw ValidationError("tau must lie in (0, 1)");
    if (!(ref_confidence >= 0 && ref_confidence < 1)) throw ValidationError("ref confidence must lie in [0, 1)");
  }

  // 0.50:0.95:0.05 for the COCO range, otherwise {tau}.
  std::vector<double> thresholds() const {
    if (iou_mode == IouMode::kSingleTau) return {tau};
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
    return t;
  }
};

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pred index, ref index)
  double precision = 0;
  double recall = 0;
};

inline double classification_agreement(CategoryId pred, CategoryId ref) noexcept { return pred == ref ? 1.0 : 0.0; }

inline double box_iou(const BBox& a, const BBox& b) noexcept {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

inline double mask_iou(const RunLengthMask& a, const RunLengthMask& b) {
  if (a.width != b.width || a.height != b.height) throw ValidationError("mask_iou: dimension mismatch");
  const auto inter = rle_intersection(a, b);
  const auto uni = rle_area(a) + rle_area(b) - inter;
  if (uni == 0) return 1.0;  // two empty masks
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline double item_iou(const Detection& a, const Detection& b) { return box_iou(a.bbox, b.bbox); }
inline double item_iou(const Instance& a, const Instance& b) { return mask_iou(a.mask, b.mask); }

// Prediction indices by descending confidence; ties keep input order.
template <typename Item>
std::vector<std::size_t> confidence_order(std::span<const Item> items) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return items[a].confidence > items[b].confidence; });
  return order;
}

namespace detail {

inline double precision_of(std::size_t matches, std::size_t k_pred, std::size_t k_ref) {
  if (k_pred == 0) return k_ref == 0 ? 1.0 : 0.0;
  return static_cast<double>(matches) / static_cast<double>(k_pred);
}

inline double recall_of(std::size_t matches, std::size_t k_pred, std::size_t k_ref) {
  if (k_ref == 0) return k_pred == 0 ? 1.0 : 0.0;
  return static_cast<double>(matches) / static_cast<double>(k_ref);
}

// Greedy assignment at one threshold. For each prediction in `order`, the
// unmatched same-category reference with the largest IoU (lowest index on
// ties) is taken iff that IoU >= tau. Returns ref index per prediction
// (npos when unmatched).
template <typename Item>
std::vector<std::size_t> greedy_assign(std::span<const Item> preds, std::span<const Item> refs,
                                       const std::vector<std::size_t>& order, double tau) {
  constexpr auto npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> assigned(preds.size(), npos);
  std::vector<bool> taken(refs.size(), false);
  for (auto p : order) {
    double best = -1;
    std::size_t best_ref = npos;
    for (std::size_t r = 0; r < refs.size(); ++r) {
      if (taken[r] || refs[r].category != preds[p].category) continue;
      const double iou = item_iou(preds[p], refs[r]);
      if (iou > best) {
        best = iou;
        best_ref = r;
      }
    }
    if (best_ref != npos && best >= tau) {
      taken[best_ref] = true;
      assigned[p] = best_ref;
    }
  }
  return assigned;
}

}  // namespace detail

template <typename Item>
MatchResult greedy_match(std::span<const Item> preds, std::span<const Item> refs, const MatchConfig& cfg) {
  const auto order = confidence_order(preds);
  const auto assigned = detail::greedy_assign(preds, refs, order, cfg.tau);
  MatchResult out;
  for (auto p : order) {
    if (assigned[p] != static_cast<std::size_t>(-1)) out.pairs.emplace_back(p, assigned[p]);
  }
  out.precision = detail::precision_of(out.pairs.size(), preds.size(), refs.size());
  out.recall = detail::recall_of(out.pairs.size(), preds.size(), refs.size());
  return out;
}

inline MatchResult greedy_match(const DetectionSet& preds, const DetectionSet& refs, const MatchConfig& cfg) {
  return greedy_match<Detection>(preds.items, refs.items, cfg);
}

inline MatchResult greedy_match(const InstanceSet& preds, const InstanceSet& refs, const MatchConfig& cfg) {
  return greedy_match<Instance>(preds.items, refs.items, cfg);
}

inline MatchResult greedy_match(const Payload& preds, const Payload& refs, const MatchConfig& cfg) {
  if (preds.index() != refs.index()) throw ValidationError("greedy_match: mixed payload kinds");
  if (const auto* d = std::get_if<DetectionSet>(&preds)) return greedy_match(*d, std::get<DetectionSet>(refs), cfg);
  if (const auto* s = std::get_if<InstanceSet>(&preds)) return greedy_match(*s, std::get<InstanceSet>(refs), cfg);
  throw ValidationError("greedy_match: classification payloads have no items");
}

// All-point interpolated AP for one category at one threshold: the exact
// area under the upper envelope of the cumulative precision/recall curve.
template <typename Item>
double average_precision(std::span<const Item> preds, std::span<const Item> refs, CategoryId category, double tau) {
  std::vector<Item> p, r;
  for (const auto& it : preds) {
    if (it.category == category) p.push_back(it);
  }
  for (const auto& it : refs) {
    if (it.category == category) r.push_back(it);
  }
  if (p.empty() && r.empty()) return 1.0;
  if (p.empty() || r.empty()) return 0.0;
  const auto order = confidence_order<Item>(p);
  const auto assigned = detail::greedy_assign<Item>(p, r, order, tau);

  // Precision is kept as an exact ratio tp/rank and accumulated in extended
  // precision, so e.g. (1 + 2/3) / 2 rounds to the double nearest 5/6.
  std::vector<std::size_t> tp_at(order.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (assigned[order[i]] != static_cast<std::size_t>(-1)) ++tp;
    tp_at[i] = tp;
  }
  // Envelope from the right: best precision at this rank or any later one.
  std::vector<long double> envelope(order.size());
  long double best = 0;
  for (std::size_t i = order.size(); i-- > 0;) {
    best = std::max(best, static_cast<long double>(tp_at[i]) / static_cast<long double>(i + 1));
    envelope[i] = best;
  }
  // Recall only increases at true positives, each by 1/|refs|.
  long double area = 0;
  std::size_t prev_tp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (tp_at[i] != prev_tp) area += envelope[i];
    prev_tp = tp_at[i];
  }
  return static_cast<double>(area / static_cast<long double>(r.size()));
}

template <typename Item>
double average_precision(std::span<const Item> preds, std::span<const Item> refs, CategoryId category,
                         const MatchConfig& cfg) {
  const auto ts = cfg.thresholds();
  double total = 0;
  for (double t : ts) total += average_precision(preds, refs, category, t);
  return total / static_cast<double>(ts.size());
}

// Mean AP over classes(refs) ∪ classes(preds); 1.0 when both are empty.
template <typename Item>
double map_score(std::span<const Item> preds, std::span<const Item> refs, const MatchConfig& cfg) {
  std::set<CategoryId> cats;
  for (const auto& it : preds) cats.insert(it.category);
  for (const auto& it : refs) cats.insert(it.category);
  if (cats.empty()) return 1.0;
  double total = 0;
  for (auto c : cats) total += average_precision(preds, refs, c, cfg);
  return total / static_cast<double>(cats.size());
}

inline double map_score(const DetectionSet& preds, const DetectionSet& refs, const MatchConfig& cfg) {
  return map_score<Detection>(preds.items, refs.items, cfg);
}

inline double map_score(const InstanceSet& preds, const InstanceSet& refs, const MatchConfig& cfg) {
  return map_score<Instance>(preds.items, refs.items, cfg);
}

// Drops reference items below the confidence floor. Applied only when the
// reference is itself a model prediction; ground truth is never filtered.
template <typename Set>
Set filter_by_confidence(const Set& s, double floor) {
  Set out;
  for (const auto& it : s.items) {
    if (it.confidence >= floor) out.items.push_back(it);
  }
  return out;
}

enum class ReferenceKind : std::uint8_t { kPrediction, kGroundTruth };

// Agreement of a degraded-image prediction with its reference, in [0, 1].
inline double agreement(TaskKind task, const Payload& pred, const Payload& reference, ReferenceKind ref_kind,
                        const MatchConfig& cfg) {
  if (payload_task(pred) != task || payload_task(reference) != task) {
    throw ValidationError("agreement: payload does not match task " + std::string(to_string(task)));
  }
  switch (task) {
    case TaskKind::kClassification:
      return classification_agreement(std::get<ClassPrediction>(pred).label,
                                      std::get<ClassPrediction>(reference).label);
    case TaskKind::kDetection: {
      const auto& ref = std::get<DetectionSet>(reference);
      if (ref_kind == ReferenceKind::kPrediction) {
        return map_score(std::get<DetectionSet>(pred), filter_by_confidence(ref, cfg.ref_confidence), cfg);
      }
      return map_score(std::get<DetectionSet>(pred), ref, cfg);
    }
    case TaskKind::kSegmentation: {
      const auto& ref = std::get<InstanceSet>(reference);
      if (ref_kind == ReferenceKind::kPrediction) {
        return map_score(std::get<InstanceSet>(pred), filter_by_confidence(ref, cfg.ref_confidence), cfg);
      }
      return map_score(std::get<InstanceSet>(pred), ref, cfg);
    }
  }
  throw ValidationError("agreement: unknown task");
}

}  // namespace miqa
