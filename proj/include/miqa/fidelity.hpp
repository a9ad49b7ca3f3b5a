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

// Full-reference fidelity metrics used to characterise the degraded corpus.

#include <algorithm>
#include <cmath>
#include <vector>

#include "miqa/core/types.hpp"

namespace miqa {

inline constexpr double kPsnrCap = 100.0;

struct FidelityScore {
  double psnr = kPsnrCap;
  double ssim = 1.0;
};

// Peak signal-to-noise ratio over all channels, capped at 100 dB.
inline double psnr(const ImageBuffer& reference, const ImageBuffer& test) {
  if (!reference.same_shape(test)) throw ValidationError("psnr: dimension mismatch");
  auto a = reference.bytes();
  auto b = test.bytes();
  double sse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sse += d * d;
  }
  if (sse == 0) return kPsnrCap;
  const double mse = sse / static_cast<double>(a.size());
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace ssim_constants {
inline constexpr int kWindow = 11;
inline constexpr double kSigma = 1.5;
inline constexpr double kK1 = 0.01;
inline constexpr double kK2 = 0.03;
inline constexpr double kL = 255.0;
}  // namespace ssim_constants

// Rec. 601 luma, row-major.
inline std::vector<double> luma(const ImageBuffer& img) {
  std::vector<double> y(img.pixel_count());
  auto b = img.bytes();
  for (std::size_t p = 0; p < y.size(); ++p) {
    y[p] = 0.299 * b[3 * p] + 0.587 * b[3 * p + 1] + 0.114 * b[3 * p + 2];
  }
  return y;
}

inline std::vector<double> ssim_window_1d() {
  using namespace ssim_constants;
  std::vector<double> w(kWindow);
  const int r = kWindow / 2;
  double total = 0;
  for (int i = 0; i < kWindow; ++i) total += w[i] = std::exp(-0.5 * (i - r) * (i - r) / (kSigma * kSigma));
  for (auto& v : w) v /= total;
  return w;
}

// Mean SSIM over every position where the 11x11 Gaussian window fits
// entirely inside the image (no padding), computed on luma.
inline double ssim(const ImageBuffer& reference, const ImageBuffer& test) {
  using namespace ssim_constants;
  if (!reference.same_shape(test)) throw ValidationError("ssim: dimension mismatch");
  const int w = reference.width(), h = reference.height();
  if (std::min(w, h) < kWindow) throw ValidationError("ssim: image smaller than the 11x11 window");
  const auto x = luma(reference);
  const auto y = luma(test);
  const auto win = ssim_window_1d();
  const int ow = w - kWindow + 1, oh = h - kWindow + 1;

  // Separable filtering of the five moment planes: horizontal pass over all
  // rows, then vertical pass over valid positions.
  std::vector<double> src[5];
  for (auto& s : src) s.resize(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < x.size(); ++i) {
    src[0][i] = x[i];
    src[1][i] = y[i];
    src[2][i] = x[i] * x[i];
    src[3][i] = y[i] * y[i];
    src[4][i] = x[i] * y[i];
  }
  std::vector<double> horiz[5];
  for (int k = 0; k < 5; ++k) {
    horiz[k].assign(static_cast<std::size_t>(ow) * h, 0.0);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < ow; ++c) {
        double acc = 0;
        for (int i = 0; i < kWindow; ++i) acc += win[i] * src[k][static_cast<std::size_t>(r) * w + c + i];
        horiz[k][static_cast<std::size_t>(r) * ow + c] = acc;
      }
    }
  }
  const double c1 = (kK1 * kL) * (kK1 * kL);
  const double c2 = (kK2 * kL) * (kK2 * kL);
  double total = 0;
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double m[5];
      for (int k = 0; k < 5; ++k) {
        double acc = 0;
        for (int i = 0; i < kWindow; ++i) acc += win[i] * horiz[k][static_cast<std::size_t>(r + i) * ow + c];
        m[k] = acc;
      }
      const double mx = m[0], my = m[1];
      const double vx = m[2] - mx * mx, vy = m[3] - my * my, cov = m[4] - mx * my;
      total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / (static_cast<double>(ow) * oh);
}

inline FidelityScore fidelity(const ImageBuffer& reference, const ImageBuffer& test) {
  return {psnr(reference, test), ssim(reference, test)};
}

}  // namespace miqa
