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

// Deterministic synthetic vision-model ensemble.
//
// A synthetic model reacts to a degradation cell only through its effective
// severity e in (0, 1]. Each response is a threshold on a fixed hash, so the
// resulting quality labels have a closed form (see closed_form_labels) that
// shares no code with the agreement/mAP pipeline.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "miqa/agreement.hpp"
#include "miqa/core/hash.hpp"
#include "miqa/core/rle.hpp"
#include "miqa/core/types.hpp"
#include "miqa/core/weights.hpp"
#include "miqa/labeling.hpp"

namespace miqa::synth {

struct SynthModel {
  std::string model_id;
  TaskKind task = TaskKind::kClassification;
  double skill = 0.8;       // (0, 1]
  double robustness = 1.0;  // (0, 2]
  // Hash key for the model's behaviour; defaults to model_id. Models sharing
  // a profile respond identically.
  std::string profile;

  const std::string& key() const { return profile.empty() ? model_id : profile; }
  double benchmark_perf() const { return 100.0 * skill; }
  ModelRecord record() const { return {model_id, task, benchmark_perf()}; }

  void validate() const {
    if (!(skill > 0 && skill <= 1)) throw ValidationError("synthetic skill must lie in (0, 1]");
    if (!(robustness > 0 && robustness <= 2)) throw ValidationError("synthetic robustness must lie in (0, 2]");
  }
};

inline constexpr double kDefaultRoiWeight = 2.0 / 3.0;
inline constexpr double kSynthConfidence = 0.9;
inline constexpr CategoryId kWrongLabelOffset = 1;
inline constexpr CategoryId kFlipLabelOffset = 1000;
inline constexpr int kLabelSpread = 500;

// hash01(parts...) = to_unit(mix64(FNV-1a of the parts joined by 0x1f)).
inline double hash01(std::initializer_list<std::string_view> parts) {
  std::uint64_t h = kFnvOffset;
  bool first = true;
  for (auto p : parts) {
    if (!first) h = fnv1a(std::string_view("\x1f", 1), h);
    h = fnv1a(p, h);
    first = false;
  }
  return to_unit(mix64(h));
}

inline double effective_severity(const DistortionSpec& spec, double w_roi = kDefaultRoiWeight) {
  return (w_roi * spec.roi_level + (1.0 - w_roi) * spec.bg_level) / 5.0;
}

inline int shift_pixels(double e) { return static_cast<int>(std::floor(4.0 * e)); }

// Pristine classification outcome.
inline bool pristine_correct(const SynthModel& m, std::string_view image_id) {
  return hash01({m.key(), image_id}) < m.skill;
}

inline bool class_flips(const SynthModel& m, std::string_view image_id, double e) {
  return e >= m.robustness * hash01({m.key(), image_id, "flip"});
}

inline bool item_drops(const SynthModel& m, std::string_view image_id, std::size_t j, double e) {
  return e >= m.robustness * hash01({m.key(), image_id, std::to_string(j)});
}

inline RunLengthMask shift_mask(const RunLengthMask& m, int d) {
  if (d == 0) return m;
  const auto src = rle_decode(m);
  BinaryRaster dst{m.width, m.height, std::vector<std::uint8_t>(src.bits.size(), 0)};
  for (int y = 0; y + d < m.height; ++y) {
    for (int x = 0; x + d < m.width; ++x) {
      dst.bits[static_cast<std::size_t>(y + d) * m.width + x + d] = src.bits[static_cast<std::size_t>(y) * m.width + x];
    }
  }
  return rle_encode(dst);
}

inline Payload synth_payload(const SynthModel& m, std::string_view image_id, const Payload& ground_truth,
                             const std::optional<DistortionSpec>& spec) {
  if (payload_task(ground_truth) != m.task) throw ValidationError("synthetic ground truth does not match task");
  const double e = spec ? effective_severity(*spec) : 0.0;
  switch (m.task) {
    case TaskKind::kClassification: {
      const CategoryId g = std::get<ClassPrediction>(ground_truth).label;
      CategoryId label = pristine_correct(m, image_id)
                             ? g
                             : g + kWrongLabelOffset +
                                   static_cast<CategoryId>(hash01({m.key(), image_id, "wrong"}) * kLabelSpread);
      if (spec && class_flips(m, image_id, e)) {
        label = g + kFlipLabelOffset + static_cast<CategoryId>(hash01({m.key(), image_id, "flip-to"}) * kLabelSpread);
      }
      return ClassPrediction{label, kSynthConfidence};
    }
    case TaskKind::kDetection: {
      DetectionSet out;
      const auto& gt = std::get<DetectionSet>(ground_truth).items;
      const int d = shift_pixels(e);
      for (std::size_t j = 0; j < gt.size(); ++j) {
        if (spec && item_drops(m, image_id, j, e)) continue;
        Detection it = gt[j];
        it.bbox.x += d;
        it.bbox.y += d;
        it.confidence = kSynthConfidence;
        out.items.push_back(it);
      }
      return out;
    }
    case TaskKind::kSegmentation: {
      InstanceSet out;
      const auto& gt = std::get<InstanceSet>(ground_truth).items;
      const int d = shift_pixels(e);
      for (std::size_t j = 0; j < gt.size(); ++j) {
        if (spec && item_drops(m, image_id, j, e)) continue;
        Instance it{shift_mask(gt[j].mask, d), gt[j].category, kSynthConfidence};
        out.items.push_back(std::move(it));
      }
      return out;
    }
  }
  throw ValidationError("unknown task");
}

inline PredictionRecord synth_predict(const SynthModel& m, const std::string& image_id, const Payload& ground_truth,
                                      const std::optional<DistortionSpec>& spec) {
  return {m.model_id, image_id, spec, synth_payload(m, image_id, ground_truth, spec)};
}

// Every record the ensemble emits for the manifest: one pristine record and
// one per grid cell for each (model, image).
inline std::vector<PredictionRecord> synth_predictions(const std::vector<SynthModel>& models,
                                                       const DatasetManifest& manifest) {
  std::vector<PredictionRecord> out;
  const auto specs = manifest.specs();
  for (const auto& m : models) {
    for (const auto& im : manifest.images) {
      out.push_back(synth_predict(m, im.image_id, im.ground_truth, std::nullopt));
      for (const auto& s : specs) out.push_back(synth_predict(m, im.image_id, im.ground_truth, s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form labels

namespace detail {

inline double shifted_box_iou(const BBox& b, int d) {
  const double iw = std::max(0.0, b.w - d), ih = std::max(0.0, b.h - d);
  const double inter = iw * ih;
  return inter / (2.0 * b.w * b.h - inter);
}

inline double shifted_mask_iou(const RunLengthMask& m, int d) {
  const auto a = rle_decode(m);
  const auto b = rle_decode(shift_mask(m, d));
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += a.bits[i] & b.bits[i];
    uni += a.bits[i] | b.bits[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Agreement of the degraded item set with the full item set when each kept
// item is a true positive: mean over categories of kept/total.
inline double kept_fraction_map(const std::vector<CategoryId>& categories, const std::vector<bool>& kept) {
  if (categories.empty()) return 1.0;
  std::map<CategoryId, std::pair<int, int>> per;  // kept, total
  for (std::size_t j = 0; j < categories.size(); ++j) {
    auto& [k, t] = per[categories[j]];
    t += 1;
    k += kept[j] ? 1 : 0;
  }
  double s = 0;
  for (const auto& [c, kt] : per) s += static_cast<double>(kt.first) / kt.second;
  return s / static_cast<double>(per.size());
}

}  // namespace detail

// Raw (consistency, accuracy) agreement of one model on one cell, from the
// response predicates alone. Throws when a kept detection/instance would not
// be a true positive under `cfg`, since the closed form assumes it is.
inline AgreementPair closed_form_agreement(const SynthModel& m, const ManifestImage& im, const DistortionSpec& spec,
                                           const MatchConfig& cfg) {
  const double e = effective_severity(spec);
  if (m.task == TaskKind::kClassification) {
    const bool flip = class_flips(m, im.image_id, e);
    return {flip ? 0.0 : 1.0, (!flip && pristine_correct(m, im.image_id)) ? 1.0 : 0.0};
  }
  std::vector<CategoryId> cats;
  std::vector<bool> kept;
  const int d = shift_pixels(e);
  auto check_iou = [&](double iou) {
    for (double t : cfg.thresholds()) {
      if (iou < t) throw ValidationError("synthetic corpus: shifted item falls below IoU threshold");
    }
  };
  if (m.task == TaskKind::kDetection) {
    const auto& gt = std::get<DetectionSet>(im.ground_truth).items;
    for (std::size_t j = 0; j < gt.size(); ++j) {
      cats.push_back(gt[j].category);
      kept.push_back(!item_drops(m, im.image_id, j, e));
      if (kept.back()) check_iou(detail::shifted_box_iou(gt[j].bbox, d));
    }
  } else {
    const auto& gt = std::get<InstanceSet>(im.ground_truth).items;
    for (std::size_t j = 0; j < gt.size(); ++j) {
      cats.push_back(gt[j].category);
      kept.push_back(!item_drops(m, im.image_id, j, e));
      if (kept.back()) check_iou(detail::shifted_mask_iou(gt[j].mask, d));
    }
  }
  const double acc = detail::kept_fraction_map(cats, kept);
  // Pristine items all carry kSynthConfidence; a stricter reference floor
  // leaves an empty reference set.
  double cons = acc;
  if (kSynthConfidence < cfg.ref_confidence) {
    bool any = false;
    for (bool k : kept) any = any || k;
    cons = any ? 0.0 : 1.0;
  }
  return {cons, acc};
}

inline LabelTable closed_form_labels(const std::vector<SynthModel>& models, const DatasetManifest& manifest,
                                     const MatchConfig& cfg, LabelWeights lw) {
  lw.validate();
  double total = 0;
  for (const auto& m : models) total += m.benchmark_perf();
  LabelTable out;
  for (const auto& im : manifest.images) {
    for (const auto& spec : manifest.specs()) {
      double c = 0, a = 0;
      for (const auto& m : models) {
        const auto v = closed_form_agreement(m, im, spec, cfg);
        const double w = m.benchmark_perf() / total;
        c += w * v.consistency;
        a += w * v.accuracy;
      }
      out[{im.image_id, spec}] = {c, a, lw.lambda1 * c + lw.lambda2 * a};
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Procedural corpus

// Deterministic RGB test image; `variant` selects one of three textures
// (smooth shapes, periodic texture, blocks with fine noise).
inline ImageBuffer make_test_image(int w, int h, int variant) {
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / w, v = static_cast<double>(y) / h;
      double r = 0, g = 0, b = 0;
      switch (variant % 3) {
        case 0: {
          r = 40 + 180 * u;
          g = 60 + 150 * v;
          b = 200 - 120 * u * v;
          const double dx = u - 0.5, dy = v - 0.5;
          if (dx * dx + dy * dy < 0.06) {
            r = 230 - 60 * v;
            g = 90;
            b = 60 + 80 * u;
          }
          break;
        }
        case 1: {
          r = 128 + 90 * std::sin(12.0 * u + 3.0 * v);
          g = 128 + 80 * std::cos(9.0 * v - 4.0 * u);
          b = 128 + 70 * std::sin(7.0 * (u + v)) * std::cos(5.0 * u);
          break;
        }
        default: {
          // Rotated so block edges never line up with a pixelation lattice.
          const int bx = static_cast<int>(std::floor((0.8 * x + 0.6 * y) / 13.0));
          const int by = static_cast<int>(std::floor((0.8 * y - 0.6 * x) / 13.0));
          const double base = (((bx + by) % 2 + 2) % 2 == 0) ? 70 : 185;
          const double n = 30.0 * (to_unit(mix64(static_cast<std::uint64_t>(y) * 7919 + x)) - 0.5);
          r = base + n;
          g = base * 0.8 + 40 * u + n;
          b = 255 - base + n;
          break;
        }
      }
      img.at(x, y, 0) = static_cast<std::uint8_t>(std::clamp(std::lround(r), 0L, 255L));
      img.at(x, y, 1) = static_cast<std::uint8_t>(std::clamp(std::lround(g), 0L, 255L));
      img.at(x, y, 2) = static_cast<std::uint8_t>(std::clamp(std::lround(b), 0L, 255L));
    }
  }
  return img;
}

// Central ellipse ROI.
inline RoiMask make_ellipse_mask(int w, int h) {
  RoiMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = (x + 0.5 - w / 2.0) / (w * 0.3), dy = (y + 0.5 - h / 2.0) / (h * 0.3);
      m.set(x, y, dx * dx + dy * dy <= 1.0);
    }
  }
  return m;
}

inline RoiMask boxes_mask(int w, int h, const std::vector<BBox>& boxes) {
  RoiMask m(w, h);
  for (const auto& b : boxes) {
    for (int y = static_cast<int>(b.y); y < static_cast<int>(b.y + b.h) && y < h; ++y) {
      for (int x = static_cast<int>(b.x); x < static_cast<int>(b.x + b.w) && x < w; ++x) m.set(x, y, true);
    }
  }
  return m;
}

inline RunLengthMask box_rle(int w, int h, const BBox& b) {
  BinaryRaster r{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
  for (int y = static_cast<int>(b.y); y < static_cast<int>(b.y + b.h); ++y) {
    for (int x = static_cast<int>(b.x); x < static_cast<int>(b.x + b.w); ++x) {
      r.bits[static_cast<std::size_t>(y) * w + x] = 1;
    }
  }
  return rle_encode(r);
}

inline constexpr int kCorpusSize = 96;

// Non-overlapping 32x32 objects placed at least 8 px from the border, so a
// shift of up to 4 px keeps every object inside the image with IoU > 0.6.
inline std::vector<BBox> corpus_boxes(std::size_t image_index) {
  std::vector<BBox> all = {{8, 8, 32, 32}, {52, 12, 32, 32}, {16, 54, 32, 32}, {56, 56, 32, 32}};
  const std::size_t count = 2 + image_index % 3;
  all.resize(count);
  return all;
}

struct Corpus {
  DatasetManifest manifest;
  std::vector<SynthModel> models;
};

// Writes `n_images` images + masks under `dir` and returns the manifest
// (also saved as dir/manifest.json).
inline DatasetManifest write_corpus(const fs::path& dir, TaskKind task, std::size_t n_images) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  json manifest_json{{"task", std::string(to_string(task))}, {"images", json::array()}};
  for (std::size_t i = 0; i < n_images; ++i) {
    const std::string id = "img" + std::to_string(i);
    const auto boxes = corpus_boxes(i);
    const auto img = make_test_image(kCorpusSize, kCorpusSize, static_cast<int>(i));
    const auto mask = task == TaskKind::kClassification ? make_ellipse_mask(kCorpusSize, kCorpusSize)
                                                        : boxes_mask(kCorpusSize, kCorpusSize, boxes);
    write_png(dir / "images" / (id + ".png"), img);
    write_png(dir / "masks" / (id + ".png"), mask);
    Payload gt;
    if (task == TaskKind::kClassification) {
      gt = ClassPrediction{static_cast<CategoryId>(7 * i + 3), 1.0};
    } else if (task == TaskKind::kDetection) {
      DetectionSet s;
      for (std::size_t j = 0; j < boxes.size(); ++j) s.items.push_back({boxes[j], static_cast<CategoryId>(1 + j % 2), 1.0});
      gt = s;
    } else {
      InstanceSet s;
      for (std::size_t j = 0; j < boxes.size(); ++j) {
        s.items.push_back({box_rle(kCorpusSize, kCorpusSize, boxes[j]), static_cast<CategoryId>(1 + j % 2), 1.0});
      }
      gt = s;
    }
    manifest_json["images"].push_back({{"image_id", id},
                                       {"image_path", "images/" + id + ".png"},
                                       {"mask_path", "masks/" + id + ".png"},
                                       {"ground_truth", ground_truth_to_json(gt)}});
  }
  write_file_atomic(dir / "manifest.json", manifest_json.dump(2) + "\n");
  return load_manifest(dir / "manifest.json");
}

// Four heterogeneous models.
inline std::vector<SynthModel> default_ensemble(TaskKind task) {
  const std::string prefix(to_string(task));
  return {
      {prefix + "-a", task, 0.92, 1.60, {}},
      {prefix + "-b", task, 0.81, 1.10, {}},
      {prefix + "-c", task, 0.74, 0.70, {}},
      {prefix + "-d", task, 0.66, 1.35, {}},
  };
}

// `n` models with identical behaviour (shared profile).
inline std::vector<SynthModel> homogeneous_ensemble(TaskKind task, std::size_t n) {
  std::vector<SynthModel> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"twin-" + std::to_string(i), task, 0.8, 1.2, "twin-profile"});
  }
  return out;
}

inline std::vector<ModelRecord> records(const std::vector<SynthModel>& models) {
  std::vector<ModelRecord> out;
  for (const auto& m : models) out.push_back(m.record());
  return out;
}

}  // namespace miqa::synth
