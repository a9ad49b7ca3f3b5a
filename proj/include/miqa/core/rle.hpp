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

#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "miqa/core/types.hpp"

namespace miqa {

// Binary raster used by the RLE codec: one byte per pixel, nonzero = set.
struct BinaryRaster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // values 0 or 1

  friend bool operator==(const BinaryRaster&, const BinaryRaster&) = default;
};

inline RunLengthMask rle_encode(const BinaryRaster& raster) {
  if (raster.bits.size() != static_cast<std::size_t>(raster.width) * raster.height) {
    throw ValidationError("raster size does not match its dimensions");
  }
  RunLengthMask out{raster.width, raster.height, {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (auto b : raster.bits) {
    if (b > 1) throw ValidationError("raster is not binary");
    if (b != current) {
      out.counts.push_back(run);
      run = 0;
      current = b;
    }
    ++run;
  }
  out.counts.push_back(run);
  return out;
}

inline void check_rle(const RunLengthMask& rle) {
  if (rle.width < 0 || rle.height < 0) throw ValidationError("negative RLE dimensions");
  std::uint64_t total = std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  if (total != rle.area()) {
    throw ValidationError("RLE counts sum to " + std::to_string(total) + " but mask is " +
                          std::to_string(rle.width) + "x" + std::to_string(rle.height));
  }
}

inline BinaryRaster rle_decode(const RunLengthMask& rle) {
  check_rle(rle);
  BinaryRaster out{rle.width, rle.height, {}};
  out.bits.reserve(rle.area());
  std::uint8_t v = 0;
  for (auto c : rle.counts) {
    out.bits.insert(out.bits.end(), c, v);
    v ^= 1;
  }
  return out;
}

// Number of set pixels.
inline std::uint64_t rle_area(const RunLengthMask& rle) {
  std::uint64_t a = 0;
  for (std::size_t i = 1; i < rle.counts.size(); i += 2) a += rle.counts[i];
  return a;
}

// Set-pixel count of the intersection, computed by merging runs.
inline std::uint64_t rle_intersection(const RunLengthMask& a, const RunLengthMask& b) {
  std::size_t ia = 0, ib = 0;
  std::uint64_t ra = a.counts.empty() ? 0 : a.counts[0];
  std::uint64_t rb = b.counts.empty() ? 0 : b.counts[0];
  bool va = false, vb = false;
  std::uint64_t inter = 0;
  while (ia < a.counts.size() && ib < b.counts.size()) {
    if (ra == 0) {
      if (++ia < a.counts.size()) ra = a.counts[ia];
      va = !va;
      continue;
    }
    if (rb == 0) {
      if (++ib < b.counts.size()) rb = b.counts[ib];
      vb = !vb;
      continue;
    }
    std::uint64_t step = std::min(ra, rb);
    if (va && vb) inter += step;
    ra -= step;
    rb -= step;
  }
  return inter;
}

}  // namespace miqa
