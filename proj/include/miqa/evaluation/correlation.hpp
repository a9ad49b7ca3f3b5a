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

// Correlation and error statistics. Correlations of a zero-variance input
// are undefined and come back as std::nullopt rather than a number.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "miqa/core/types.hpp"

namespace miqa {

using Correlation = std::optional<double>;

namespace detail {

inline void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw ValidationError(std::string(what) + ": length mismatch");
  if (a.size() < 2) throw ValidationError(std::string(what) + ": need at least 2 samples");
}

inline double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

}  // namespace detail

inline double mean(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population standard deviation.
inline double stddev(std::span<const double> v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

inline Correlation plcc(std::span<const double> a, std::span<const double> b) {
  detail::check_pair(a, b, "plcc");
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return detail::clamp_unit(sab / std::sqrt(saa * sbb));
}

// 1-based ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline Correlation srcc(std::span<const double> a, std::span<const double> b) {
  detail::check_pair(a, b, "srcc");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return plcc(ra, rb);
}

// Kendall tau-b in O(n log n) (Knight's algorithm): sort by (a, b), count
// tied pairs, then count discordant pairs as merge-sort swaps on b.
inline Correlation krcc(std::span<const double> a, std::span<const double> b) {
  detail::check_pair(a, b, "krcc");
  const std::size_t n = a.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return a[i] < a[j] || (a[i] == a[j] && b[i] < b[j]);
  });

  auto pairs = [](std::uint64_t run) { return run * (run - 1) / 2; };
  std::uint64_t ties_a = 0, ties_ab = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && a[idx[j]] == a[idx[i]]) ++j;
    ties_a += pairs(j - i);
    for (std::size_t k = i; k < j;) {
      std::size_t l = k + 1;
      while (l < j && b[idx[l]] == b[idx[k]]) ++l;
      ties_ab += pairs(l - k);
      k = l;
    }
    i = j;
  }

  std::vector<double> bv(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) bv[i] = b[idx[i]];
  std::uint64_t swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n), hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (bv[j] < bv[i]) {
          swaps += mid - i;
          buf[k++] = bv[j++];
        } else {
          buf[k++] = bv[i++];
        }
      }
      while (i < mid) buf[k++] = bv[i++];
      while (j < hi) buf[k++] = bv[j++];
    }
    std::swap(bv, buf);
  }

  std::uint64_t ties_b = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && bv[j] == bv[i]) ++j;
    ties_b += pairs(j - i);
    i = j;
  }

  const std::uint64_t total = pairs(n);
  if (ties_a == total || ties_b == total) return std::nullopt;
  // concordant - discordant = total - ties_a - ties_b + ties_ab - 2 * swaps
  const auto numer = static_cast<double>(static_cast<std::int64_t>(total - ties_a - ties_b + ties_ab) -
                                         2 * static_cast<std::int64_t>(swaps));
  const double denom = std::sqrt(static_cast<double>(total - ties_a) * static_cast<double>(total - ties_b));
  return detail::clamp_unit(numer / denom);
}

inline double rmse(std::span<const double> a, std::span<const double> b) {
  detail::check_pair(a, b, "rmse");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace miqa
