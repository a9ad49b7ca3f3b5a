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

// The ten distortion operators at five severity levels.
//
// Every operator is a pure function of (image, level, seed). Stochastic
// operators draw from CounterRng keyed by (seed, operator stream, position),
// never from a sequential generator shared across pixels, except glass blur
// whose swap sweep is inherently ordered (it runs single-threaded).
//
// Severity tables are indexed by level - 1; each row is ordered so that a
// larger level is a stronger degradation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "miqa/core/types.hpp"
#include "miqa/degradation/jpeg_codec.hpp"
#include "miqa/degradation/random.hpp"

namespace miqa {

namespace params {

inline constexpr std::array<double, 5> kNoiseSigma = {0.04, 0.08, 0.12, 0.18, 0.26};  // fraction of 255
inline constexpr std::array<double, 5> kContrastFactor = {0.75, 0.60, 0.45, 0.30, 0.15};
inline constexpr std::array<double, 5> kDarknessScale = {0.70, 0.55, 0.40, 0.30, 0.20};
inline constexpr std::array<double, 5> kPixelateFactor = {0.6, 0.5, 0.4, 0.3, 0.25};
inline constexpr std::array<int, 5> kJpegQuality = {25, 18, 15, 10, 7};
inline constexpr std::array<int, 5> kMotionLength = {9, 13, 17, 21, 25};
inline constexpr std::array<int, 5> kDefocusRadius = {2, 3, 5, 7, 9};
inline constexpr std::array<double, 5> kGlassSigma = {0.7, 0.9, 1.1, 1.3, 1.5};
inline constexpr std::array<int, 5> kGlassIterations = {1, 1, 2, 2, 3};
inline constexpr std::array<int, 5> kGlassDelta = {1, 2, 2, 3, 3};
inline constexpr std::array<double, 5> kFogDecay = {2.0, 1.7, 1.5, 1.2, 1.0};
inline constexpr std::array<double, 5> kFogBlend = {0.15, 0.25, 0.35, 0.45, 0.60};
inline constexpr std::array<double, 5> kSnowDensity = {0.03, 0.05, 0.07, 0.10, 0.14};
inline constexpr std::array<int, 5> kSnowStreak = {5, 7, 9, 11, 13};
inline constexpr std::array<double, 5> kSnowLift = {0.04, 0.06, 0.08, 0.10, 0.12};

inline constexpr double kMotionAngleMaxDeg = 45.0;
inline constexpr double kSnowAngleMinDeg = 60.0;  // near-vertical fall
inline constexpr double kSnowAngleMaxDeg = 120.0;
inline constexpr double kFogInitialWibble = 100.0;

}  // namespace params

// RNG streams, one per consumer.
namespace stream {
inline constexpr std::uint64_t kNoise = 1;
inline constexpr std::uint64_t kMotionAngle = 2;
inline constexpr std::uint64_t kGlassSwap = 3;
inline constexpr std::uint64_t kFogPlasma = 4;
inline constexpr std::uint64_t kSnowField = 5;
inline constexpr std::uint64_t kSnowAngle = 6;
}  // namespace stream

// Float working copy, interleaved like ImageBuffer; `channels` is 3 for
// colour planes and 1 for the snow layer.
struct FloatImage {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<float> data;

  FloatImage() = default;
  FloatImage(int w, int h, int c = 3, float fill = 0.f)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

inline FloatImage to_float(const ImageBuffer& img) {
  FloatImage f(img.width(), img.height());
  auto b = img.bytes();
  for (std::size_t i = 0; i < b.size(); ++i) f.data[i] = b[i];
  return f;
}

inline std::uint8_t quantize(float v) noexcept {
  if (!(v > 0.f)) return 0;  // also maps NaN to 0
  if (v >= 255.f) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

inline ImageBuffer to_bytes(const FloatImage& f) {
  ImageBuffer img(f.width, f.height);
  auto b = img.bytes();
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = quantize(f.data[i]);
  return img;
}

// Whole-sample symmetric reflection (…2 1 | 0 1 2 … n-1 | n-2 …), valid for
// any offset.
inline int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

struct KernelTap {
  int dx;
  int dy;
  float weight;
};

inline FloatImage convolve(const FloatImage& src, const std::vector<KernelTap>& taps) {
  FloatImage out(src.width, src.height, src.channels);
  const int ch = src.channels;
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      for (int c = 0; c < ch; ++c) {
        float acc = 0.f;
        for (const auto& t : taps) {
          acc += t.weight * src.at(reflect_index(x + t.dx, src.width), reflect_index(y + t.dy, src.height), c);
        }
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

inline std::vector<float> gaussian_kernel_1d(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) total += std::exp(-0.5 * i * i / (sigma * sigma));
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)) / total);
  }
  return k;
}

inline FloatImage gaussian_blur(const FloatImage& src, double sigma) {
  const auto k = gaussian_kernel_1d(sigma);
  const int r = static_cast<int>(k.size() / 2);
  FloatImage tmp(src.width, src.height, src.channels);
  FloatImage out(src.width, src.height, src.channels);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      for (int c = 0; c < src.channels; ++c) {
        float acc = 0.f;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * src.at(reflect_index(x + i, src.width), y, c);
        tmp.at(x, y, c) = acc;
      }
    }
  }
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      for (int c = 0; c < src.channels; ++c) {
        float acc = 0.f;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.at(x, reflect_index(y + i, src.height), c);
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

// Normalized line kernel of `length` taps centred on the pixel.
inline std::vector<KernelTap> line_kernel(int length, double angle_rad) {
  std::vector<KernelTap> taps;
  taps.reserve(length);
  const double half = (length - 1) / 2.0;
  const float w = 1.0f / static_cast<float>(length);
  for (int i = 0; i < length; ++i) {
    const double t = i - half;
    taps.push_back({static_cast<int>(std::lround(t * std::cos(angle_rad))),
                    static_cast<int>(std::lround(t * std::sin(angle_rad))), w});
  }
  return taps;
}

inline std::vector<KernelTap> disk_kernel(int radius) {
  std::vector<KernelTap> taps;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) taps.push_back({dx, dy, 1.f});
    }
  }
  const float w = 1.0f / static_cast<float>(taps.size());
  for (auto& t : taps) t.weight = w;
  return taps;
}

// Diamond-square plasma on a toroidal power-of-two grid, cropped to
// width x height and rescaled to [0, 1].
inline std::vector<double> plasma_field(int width, int height, double decay, std::uint64_t seed) {
  int size = 2;
  while (size < std::max(width, height)) size *= 2;
  const CounterRng rng(seed, stream::kFogPlasma);
  std::vector<double> map(static_cast<std::size_t>(size) * size, 0.0);
  auto at = [&](int r, int c) -> double& {
    r = ((r % size) + size) % size;
    c = ((c % size) + size) % size;
    return map[static_cast<std::size_t>(r) * size + c];
  };
  double wibble = params::kFogInitialWibble;
  std::uint64_t counter = 0;
  for (int step = size; step >= 2; step /= 2) {
    const int half = step / 2;
    for (int r = 0; r < size; r += step) {
      for (int c = 0; c < size; c += step) {
        const double mean = (at(r, c) + at(r + step, c) + at(r, c + step) + at(r + step, c + step)) / 4.0;
        at(r + half, c + half) = mean + wibble * rng.uniform(counter++, -1.0, 1.0);
      }
    }
    for (int r = 0; r < size; r += step) {
      for (int c = 0; c < size; c += step) {
        // Diamond centres on the top and left edges of each square.
        const double top = (at(r - half, c + half) + at(r + half, c + half) + at(r, c) + at(r, c + step)) / 4.0;
        at(r, c + half) = top + wibble * rng.uniform(counter++, -1.0, 1.0);
        const double left = (at(r + half, c - half) + at(r + half, c + half) + at(r, c) + at(r + step, c)) / 4.0;
        at(r + half, c) = left + wibble * rng.uniform(counter++, -1.0, 1.0);
      }
    }
    wibble /= decay;
  }
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  double lo = map[0], hi = map[0];
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double v = map[static_cast<std::size_t>(r) * size + c];
      out[static_cast<std::size_t>(r) * width + c] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double range = hi - lo;
  for (auto& v : out) v = range > 0 ? (v - lo) / range : 0.0;
  return out;
}

// Standard normal quantile by bisection on erfc; only used for the snow
// threshold, so speed is irrelevant.
inline double normal_quantile(double p) {
  double lo = -10, hi = 10;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::numbers::sqrt2);
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace ops {

inline ImageBuffer gaussian_noise(const ImageBuffer& img, int level, std::uint64_t seed) {
  const double sigma = params::kNoiseSigma[level - 1] * 255.0;
  const CounterRng rng(seed, stream::kNoise);
  ImageBuffer out = img;
  auto src = img.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = quantize(static_cast<float>(src[i] + sigma * rng.normal(i)));
  }
  return out;
}

inline ImageBuffer contrast(const ImageBuffer& img, int level) {
  const double factor = params::kContrastFactor[level - 1];
  std::array<double, 3> mean{};
  auto src = img.bytes();
  for (std::size_t i = 0; i < src.size(); ++i) mean[i % 3] += src[i];
  for (auto& m : mean) m /= static_cast<double>(img.pixel_count());
  ImageBuffer out = img;
  auto dst = out.bytes();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = quantize(static_cast<float>((src[i] - mean[i % 3]) * factor + mean[i % 3]));
  }
  return out;
}

inline ImageBuffer darkness(const ImageBuffer& img, int level) {
  const double scale = params::kDarknessScale[level - 1];
  ImageBuffer out = img;
  auto src = img.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = quantize(static_cast<float>(src[i] * scale));
  return out;
}

// Box-average onto a coarse grid, then nearest-neighbour back up. Source
// pixel x belongs to coarse cell floor(x * small / full) in both directions,
// so every coarse cell is exactly the set of pixels it is expanded onto.
inline ImageBuffer pixelate(const ImageBuffer& img, int level) {
  const double f = params::kPixelateFactor[level - 1];
  const int w = img.width(), h = img.height();
  const int sw = std::max(1, static_cast<int>(std::lround(w * f)));
  const int sh = std::max(1, static_cast<int>(std::lround(h * f)));
  auto cell_x = [&](int x) { return static_cast<int>(static_cast<long long>(x) * sw / w); };
  auto cell_y = [&](int y) { return static_cast<int>(static_cast<long long>(y) * sh / h); };
  std::vector<double> sum(static_cast<std::size_t>(sw) * sh * 3, 0.0);
  std::vector<int> count(static_cast<std::size_t>(sw) * sh, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t cell = static_cast<std::size_t>(cell_y(y)) * sw + cell_x(x);
      ++count[cell];
      for (int c = 0; c < 3; ++c) sum[cell * 3 + c] += img.at(x, y, c);
    }
  }
  ImageBuffer out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t cell = static_cast<std::size_t>(cell_y(y)) * sw + cell_x(x);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = quantize(static_cast<float>(sum[cell * 3 + c] / count[cell]));
    }
  }
  return out;
}

inline ImageBuffer jpeg(const ImageBuffer& img, int level) {
  return jpeg::round_trip(img, params::kJpegQuality[level - 1]);
}

inline double motion_angle(std::uint64_t seed) {
  const CounterRng rng(seed, stream::kMotionAngle);
  return rng.uniform(0, -params::kMotionAngleMaxDeg, params::kMotionAngleMaxDeg) * std::numbers::pi / 180.0;
}

inline ImageBuffer motion_blur(const ImageBuffer& img, int level, std::uint64_t seed) {
  return to_bytes(convolve(to_float(img), line_kernel(params::kMotionLength[level - 1], motion_angle(seed))));
}

inline ImageBuffer defocus_blur(const ImageBuffer& img, int level) {
  return to_bytes(convolve(to_float(img), disk_kernel(params::kDefocusRadius[level - 1])));
}

inline ImageBuffer glass_blur(const ImageBuffer& img, int level, std::uint64_t seed) {
  const double sigma = params::kGlassSigma[level - 1];
  const int iterations = params::kGlassIterations[level - 1];
  const int delta = params::kGlassDelta[level - 1];
  FloatImage f = gaussian_blur(to_float(img), sigma);
  const CounterRng rng(seed, stream::kGlassSwap);
  const auto npix = static_cast<std::uint64_t>(f.width) * f.height;
  for (int it = 0; it < iterations; ++it) {
    for (int y = f.height - 1 - delta; y >= delta; --y) {
      for (int x = f.width - 1 - delta; x >= delta; --x) {
        const std::uint64_t key = (static_cast<std::uint64_t>(it) * npix + static_cast<std::uint64_t>(y) * f.width + x) * 2;
        const int dx = static_cast<int>(rng.integer(key, -delta, delta));
        const int dy = static_cast<int>(rng.integer(key + 1, -delta, delta));
        for (int c = 0; c < 3; ++c) std::swap(f.at(x, y, c), f.at(x + dx, y + dy, c));
      }
    }
  }
  return to_bytes(gaussian_blur(f, sigma));
}

inline ImageBuffer fog(const ImageBuffer& img, int level, std::uint64_t seed) {
  const double t = params::kFogBlend[level - 1];
  const auto field = plasma_field(img.width(), img.height(), params::kFogDecay[level - 1], seed);
  ImageBuffer out = img;
  auto src = img.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = quantize(static_cast<float>((1.0 - t) * src[i] + t * 255.0 * field[i / 3]));
  }
  return out;
}

inline ImageBuffer snow(const ImageBuffer& img, int level, std::uint64_t seed) {
  const double density = params::kSnowDensity[level - 1];
  const int streak = params::kSnowStreak[level - 1];
  const double lift = params::kSnowLift[level - 1];
  const double threshold = normal_quantile(1.0 - density);
  const CounterRng field(seed, stream::kSnowField);
  FloatImage layer(img.width(), img.height(), 1);
  for (std::size_t i = 0; i < layer.data.size(); ++i) layer.data[i] = field.normal(i) > threshold ? 1.f : 0.f;
  const CounterRng angle_rng(seed, stream::kSnowAngle);
  const double angle =
      angle_rng.uniform(0, params::kSnowAngleMinDeg, params::kSnowAngleMaxDeg) * std::numbers::pi / 180.0;
  FloatImage streaks = convolve(layer, line_kernel(streak, angle));
  const float gain = static_cast<float>(streak) / 2.f;
  ImageBuffer out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double s = 255.0 * std::min(1.f, streaks.at(x, y, 0) * gain);
      for (int c = 0; c < 3; ++c) {
        const double v = std::max<double>(img.at(x, y, c), s);
        out.at(x, y, c) = quantize(static_cast<float>(v + (255.0 - v) * lift));
      }
    }
  }
  return out;
}

}  // namespace ops

// Applies `type` at severity `level` (1..5) to the whole image.
inline ImageBuffer apply_distortion(const ImageBuffer& img, DistortionType type, int level, std::uint64_t seed) {
  check_level(level);
  switch (type) {
    case DistortionType::kContrast: return ops::contrast(img, level);
    case DistortionType::kPixelate: return ops::pixelate(img, level);
    case DistortionType::kJpeg: return ops::jpeg(img, level);
    case DistortionType::kMotionBlur: return ops::motion_blur(img, level, seed);
    case DistortionType::kDefocusBlur: return ops::defocus_blur(img, level);
    case DistortionType::kGlassBlur: return ops::glass_blur(img, level, seed);
    case DistortionType::kFog: return ops::fog(img, level, seed);
    case DistortionType::kSnow: return ops::snow(img, level, seed);
    case DistortionType::kDarkness: return ops::darkness(img, level);
    case DistortionType::kGaussianNoise: return ops::gaussian_noise(img, level, seed);
  }
  throw ValidationError("unknown distortion type");
}

}  // namespace miqa
