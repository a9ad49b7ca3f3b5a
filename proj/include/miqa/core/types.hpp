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

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace miqa {

// Thrown for malformed inputs and violated invariants. The message names the
// offending record where one exists.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Rasters

// 8-bit interleaved RGB raster, row-major.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer() = default;

  ImageBuffer(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
  }

  ImageBuffer(int width, int height, std::vector<std::uint8_t> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
      throw ValidationError("image data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(width) + "x" +
                            std::to_string(height) + "x3");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  std::uint8_t at(int x, int y, int c) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  std::uint8_t& at(int x, int y, int c) noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  bool same_shape(const ImageBuffer& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  static void check_dims(int w, int h) {
    if (w < 1 || h < 1) {
      throw ValidationError("image dimensions must be positive, got " + std::to_string(w) + "x" +
                            std::to_string(h));
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Binary region mask; 255 marks ROI pixels, 0 background.
class RoiMask {
 public:
  static constexpr std::uint8_t kRoi = 255;

  RoiMask() = default;

  RoiMask(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw ValidationError("mask dimensions must be positive");
    if (fill != 0 && fill != kRoi) throw ValidationError("mask fill must be 0 or 255");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  RoiMask(int width, int height, std::vector<std::uint8_t> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) throw ValidationError("mask dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(width) * height) {
      throw ValidationError("mask data length does not match dimensions");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (data_[i] != 0 && data_[i] != kRoi) {
        throw ValidationError("mask byte at index " + std::to_string(i) + " is " +
                              std::to_string(data_[i]) + ", expected 0 or 255");
      }
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> bytes() const noexcept { return data_; }

  bool in_roi(std::size_t pixel) const noexcept { return data_[pixel] == kRoi; }
  bool in_roi(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x] == kRoi;
  }
  void set(int x, int y, bool roi) noexcept {
    data_[static_cast<std::size_t>(y) * width_ + x] = roi ? kRoi : 0;
  }

  bool matches(const ImageBuffer& img) const noexcept {
    return width_ == img.width() && height_ == img.height();
  }

  friend bool operator==(const RoiMask&, const RoiMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// ---------------------------------------------------------------------------
// Distortion grid

enum class DistortionType : std::uint8_t {
  kContrast,
  kPixelate,
  kJpeg,
  kMotionBlur,
  kDefocusBlur,
  kGlassBlur,
  kFog,
  kSnow,
  kDarkness,
  kGaussianNoise,
};

inline constexpr std::array<DistortionType, 10> kAllDistortionTypes = {
    DistortionType::kContrast,   DistortionType::kPixelate,    DistortionType::kJpeg,
    DistortionType::kMotionBlur, DistortionType::kDefocusBlur, DistortionType::kGlassBlur,
    DistortionType::kFog,        DistortionType::kSnow,        DistortionType::kDarkness,
    DistortionType::kGaussianNoise,
};

inline constexpr std::string_view to_string(DistortionType t) noexcept {
  switch (t) {
    case DistortionType::kContrast: return "contrast";
    case DistortionType::kPixelate: return "pixelate";
    case DistortionType::kJpeg: return "jpeg";
    case DistortionType::kMotionBlur: return "motion_blur";
    case DistortionType::kDefocusBlur: return "defocus_blur";
    case DistortionType::kGlassBlur: return "glass_blur";
    case DistortionType::kFog: return "fog";
    case DistortionType::kSnow: return "snow";
    case DistortionType::kDarkness: return "darkness";
    case DistortionType::kGaussianNoise: return "gaussian_noise";
  }
  return "unknown";
}

inline DistortionType parse_distortion_type(std::string_view s) {
  for (auto t : kAllDistortionTypes) {
    if (to_string(t) == s) return t;
  }
  throw ParseError("unknown distortion type '" + std::string(s) + "'");
}

// True for operators that consume the seed.
inline constexpr bool is_stochastic(DistortionType t) noexcept {
  switch (t) {
    case DistortionType::kGaussianNoise:
    case DistortionType::kMotionBlur:
    case DistortionType::kGlassBlur:
    case DistortionType::kFog:
    case DistortionType::kSnow:
      return true;
    default:
      return false;
  }
}

enum class RegionMode : std::uint8_t { kUniform, kRoiDominated, kBackgroundDominated };

inline constexpr std::array<RegionMode, 3> kAllRegionModes = {
    RegionMode::kUniform, RegionMode::kRoiDominated, RegionMode::kBackgroundDominated};

inline constexpr std::string_view to_string(RegionMode m) noexcept {
  switch (m) {
    case RegionMode::kUniform: return "UD";
    case RegionMode::kRoiDominated: return "ROI-DD";
    case RegionMode::kBackgroundDominated: return "BG-DD";
  }
  return "unknown";
}

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 5;

inline void check_level(int level) {
  if (level < kMinLevel || level > kMaxLevel) {
    throw ValidationError("severity level " + std::to_string(level) + " outside 1..5");
  }
}

// One (roi_level, bg_level) cell of the severity grid.
struct SeverityCell {
  int roi_level = 1;
  int bg_level = 1;

  RegionMode region_mode() const noexcept {
    if (roi_level == bg_level) return RegionMode::kUniform;
    return roi_level > bg_level ? RegionMode::kRoiDominated : RegionMode::kBackgroundDominated;
  }

  std::string label() const { return std::to_string(roi_level) + "_" + std::to_string(bg_level); }

  friend auto operator<=>(const SeverityCell&, const SeverityCell&) = default;
};

// The 25 cells per distortion type, in table order: UD, then ROI-dominated,
// then background-dominated.
inline std::vector<SeverityCell> default_severity_grid() {
  std::vector<SeverityCell> grid;
  grid.reserve(25);
  for (int l = kMinLevel; l <= kMaxLevel; ++l) grid.push_back({l, l});
  for (int bg = kMinLevel; bg <= kMaxLevel; ++bg) {
    for (int roi = bg + 1; roi <= kMaxLevel; ++roi) grid.push_back({roi, bg});
  }
  for (int roi = kMinLevel; roi <= kMaxLevel; ++roi) {
    for (int bg = roi + 1; bg <= kMaxLevel; ++bg) grid.push_back({roi, bg});
  }
  return grid;
}

struct DistortionSpec {
  DistortionType type = DistortionType::kContrast;
  int roi_level = 1;
  int bg_level = 1;

  DistortionSpec() = default;
  DistortionSpec(DistortionType t, int roi, int bg) : type(t), roi_level(roi), bg_level(bg) {
    check_level(roi);
    check_level(bg);
  }
  DistortionSpec(DistortionType t, SeverityCell c) : DistortionSpec(t, c.roi_level, c.bg_level) {}

  SeverityCell cell() const noexcept { return {roi_level, bg_level}; }
  RegionMode region_mode() const noexcept { return cell().region_mode(); }

  friend auto operator<=>(const DistortionSpec&, const DistortionSpec&) = default;
};

inline std::string to_string(const DistortionSpec& s) {
  return std::string(to_string(s.type)) + "(" + std::to_string(s.roi_level) + "," +
         std::to_string(s.bg_level) + ")";
}

// ---------------------------------------------------------------------------
// Tasks, predictions, labels

enum class TaskKind : std::uint8_t { kClassification, kDetection, kSegmentation };

inline constexpr std::string_view to_string(TaskKind t) noexcept {
  switch (t) {
    case TaskKind::kClassification: return "classification";
    case TaskKind::kDetection: return "detection";
    case TaskKind::kSegmentation: return "segmentation";
  }
  return "unknown";
}

inline TaskKind parse_task_kind(std::string_view s) {
  if (s == "classification") return TaskKind::kClassification;
  if (s == "detection") return TaskKind::kDetection;
  if (s == "segmentation") return TaskKind::kSegmentation;
  throw ParseError("unknown task '" + std::string(s) + "'");
}

using CategoryId = std::int64_t;

// Row-major run lengths over a height x width grid, alternating zero-runs and
// one-runs, beginning with a (possibly empty) zero-run.
struct RunLengthMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> counts;

  std::size_t area() const noexcept { return static_cast<std::size_t>(width) * height; }
  friend bool operator==(const RunLengthMask&, const RunLengthMask&) = default;
};

// [x_min, y_min, width, height] in float pixels.
struct BBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double area() const noexcept { return w * h; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ClassPrediction {
  CategoryId label = 0;
  double confidence = 1.0;
  friend bool operator==(const ClassPrediction&, const ClassPrediction&) = default;
};

struct Detection {
  BBox bbox;
  CategoryId category = 0;
  double confidence = 1.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectionSet {
  std::vector<Detection> items;
  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

struct Instance {
  RunLengthMask mask;
  CategoryId category = 0;
  double confidence = 1.0;
  friend bool operator==(const Instance&, const Instance&) = default;
};

struct InstanceSet {
  std::vector<Instance> items;
  friend bool operator==(const InstanceSet&, const InstanceSet&) = default;
};

// Task-variant model output or reference annotation. Ground truth uses the
// same shape with confidence 1.
using Payload = std::variant<ClassPrediction, DetectionSet, InstanceSet>;

inline TaskKind payload_task(const Payload& p) noexcept {
  return static_cast<TaskKind>(p.index());
}

struct PredictionRecord {
  std::string model_id;
  std::string image_id;
  std::optional<DistortionSpec> distortion;  // nullopt = pristine
  Payload payload;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

struct ModelRecord {
  std::string model_id;
  TaskKind task = TaskKind::kClassification;
  double benchmark_perf = 0;

  friend bool operator==(const ModelRecord&, const ModelRecord&) = default;
};

struct QualityLabel {
  double consistency = 0;
  double accuracy = 0;
  double composite = 0;

  friend bool operator==(const QualityLabel&, const QualityLabel&) = default;
};

enum class LabelKind : std::uint8_t { kConsistency, kAccuracy, kComposite };

inline constexpr std::array<LabelKind, 3> kAllLabelKinds = {
    LabelKind::kConsistency, LabelKind::kAccuracy, LabelKind::kComposite};

inline constexpr std::string_view to_string(LabelKind k) noexcept {
  switch (k) {
    case LabelKind::kConsistency: return "consistency";
    case LabelKind::kAccuracy: return "accuracy";
    case LabelKind::kComposite: return "composite";
  }
  return "unknown";
}

inline LabelKind parse_label_kind(std::string_view s) {
  for (auto k : kAllLabelKinds) {
    if (to_string(k) == s) return k;
  }
  throw ParseError("unknown label kind '" + std::string(s) + "'");
}

inline double select(const QualityLabel& q, LabelKind k) noexcept {
  switch (k) {
    case LabelKind::kConsistency: return q.consistency;
    case LabelKind::kAccuracy: return q.accuracy;
    case LabelKind::kComposite: return q.composite;
  }
  return 0;
}

// Identifies one degraded image: a source image under one grid cell.
struct CellKey {
  std::string image_id;
  DistortionSpec spec;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

inline std::string to_string(const CellKey& k) { return k.image_id + "/" + to_string(k.spec); }

struct ManifestImage {
  std::string image_id;
  std::string image_path;  // as written in the manifest
  std::string mask_path;
  Payload ground_truth;
  // Resolved at load time from the image header.
  int width = 0;
  int height = 0;

  friend bool operator==(const ManifestImage&, const ManifestImage&) = default;
};

struct DatasetManifest {
  TaskKind task = TaskKind::kClassification;
  std::vector<ManifestImage> images;
  std::vector<SeverityCell> grid = default_severity_grid();
  std::vector<DistortionType> types{kAllDistortionTypes.begin(), kAllDistortionTypes.end()};
  std::string base_dir;  // directory relative paths resolve against

  std::vector<DistortionSpec> specs() const {
    std::vector<DistortionSpec> out;
    out.reserve(grid.size() * types.size());
    for (auto t : types) {
      for (auto c : grid) out.emplace_back(t, c);
    }
    return out;
  }

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

}  // namespace miqa
