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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "miqa/core/hash.hpp"
#include "miqa/core/parallel.hpp"
#include "miqa/core/types.hpp"
#include "miqa/degradation/operators.hpp"

namespace miqa {

// Hard binary compositing: ROI pixels from `roi_variant`, the rest from
// `bg_variant`.
inline ImageBuffer composite_regions(const ImageBuffer& roi_variant, const ImageBuffer& bg_variant,
                                     const RoiMask& mask) {
  if (!roi_variant.same_shape(bg_variant) || !mask.matches(roi_variant)) {
    throw ValidationError("composite_regions: dimension mismatch");
  }
  ImageBuffer out = bg_variant;
  auto roi = roi_variant.bytes();
  auto dst = out.bytes();
  for (std::size_t p = 0; p < roi_variant.pixel_count(); ++p) {
    if (mask.in_roi(p)) {
      for (int c = 0; c < 3; ++c) dst[p * 3 + c] = roi[p * 3 + c];
    }
  }
  return out;
}

struct GridCell {
  DistortionSpec spec;
  ImageBuffer image;
};

// Per-image seed derived from the run seed, so images with different ids
// get independent stochastic structure.
inline std::uint64_t image_seed(std::uint64_t run_seed, std::string_view image_id) {
  return mix64(run_seed, fnv1a(image_id));
}

// All cells of `cells` for one distortion type. Each severity level is
// rendered once with the shared seed; uniform cells are those renders
// directly, other cells composite two of them through the mask.
inline std::vector<GridCell> generate_grid(const ImageBuffer& image, const RoiMask& mask, DistortionType type,
                                           std::uint64_t seed, const std::vector<SeverityCell>& cells,
                                           unsigned threads = 1) {
  if (!mask.matches(image)) throw ValidationError("generate_grid: mask does not match image dimensions");
  std::array<bool, kMaxLevel> needed{};
  for (auto c : cells) {
    check_level(c.roi_level);
    check_level(c.bg_level);
    needed[c.roi_level - 1] = needed[c.bg_level - 1] = true;
  }
  std::array<std::optional<ImageBuffer>, kMaxLevel> levels;
  parallel_for(kMaxLevel, threads, [&](std::size_t i) {
    if (needed[i]) levels[i] = apply_distortion(image, type, static_cast<int>(i) + 1, seed);
  });
  std::vector<GridCell> out(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const auto c = cells[i];
    out[i].spec = DistortionSpec(type, c);
    out[i].image = c.roi_level == c.bg_level
                       ? *levels[c.roi_level - 1]
                       : composite_regions(*levels[c.roi_level - 1], *levels[c.bg_level - 1], mask);
  });
  return out;
}

inline std::vector<GridCell> generate_grid(const ImageBuffer& image, const RoiMask& mask, DistortionType type,
                                           std::uint64_t seed) {
  return generate_grid(image, mask, type, seed, default_severity_grid());
}

}  // namespace miqa
