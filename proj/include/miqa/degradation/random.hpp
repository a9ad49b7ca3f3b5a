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

#include <cmath>
#include <cstdint>
#include <numbers>

#include "miqa/core/hash.hpp"

namespace miqa {

// Stateless generator: every draw is a pure function of (seed, stream,
// counter), so results do not depend on evaluation order.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept : key_(mix64(seed, stream)) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept { return mix64(key_, counter); }

  // [0, 1)
  constexpr double uniform(std::uint64_t counter) const noexcept { return to_unit(bits(counter)); }

  double uniform(std::uint64_t counter, double lo, double hi) const noexcept {
    return lo + (hi - lo) * uniform(counter);
  }

  // Integer in [lo, hi].
  std::int64_t integer(std::uint64_t counter, std::int64_t lo, std::int64_t hi) const noexcept {
    const auto span = static_cast<double>(hi - lo + 1);
    auto v = lo + static_cast<std::int64_t>(std::floor(uniform(counter) * span));
    return v > hi ? hi : v;
  }

  // Standard normal via Box-Muller over counters 2c and 2c+1.
  double normal(std::uint64_t counter) const noexcept {
    const double u1 = 1.0 - uniform(2 * counter);  // (0, 1]
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

}  // namespace miqa
