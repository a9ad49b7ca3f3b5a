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

// Five-parameter logistic remap used before PLCC/RMSE:
//
//   f(q) = a1 * (1/2 - 1 / (1 + exp(a2 * (q - a3)))) + a4 * q + a5
//
// fitted by Levenberg-Marquardt on the sum of squared residuals.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "miqa/core/types.hpp"
#include "miqa/evaluation/correlation.hpp"

namespace miqa {

struct LogisticParams {
  std::array<double, 5> a{};  // a1..a5

  double operator()(double q) const noexcept {
    const double z = std::clamp(a[1] * (q - a[2]), -kExpClamp, kExpClamp);
    return a[0] * (0.5 - 1.0 / (1.0 + std::exp(z))) + a[3] * q + a[4];
  }

  static constexpr double kExpClamp = 500.0;
};

struct LogisticFit {
  LogisticParams params;
  double sse = 0;          // at the returned parameters
  double initial_sse = 0;  // at the documented initialisation
  double linear_sse = 0;   // of the ordinary least-squares line
  int iterations = 0;
};

inline constexpr int kLogisticMaxIterations = 2000;
inline constexpr double kLogisticRelTol = 1e-10;
inline constexpr std::size_t kLogisticMinSamples = 5;

inline double logistic_sse(const LogisticParams& p, std::span<const double> q, std::span<const double> y) {
  double s = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double r = p(q[i]) - y[i];
    s += r * r;
  }
  return s;
}

namespace detail {

// Solves the 5x5 system A x = b by Gaussian elimination with partial
// pivoting. Returns false when A is numerically singular.
inline bool solve5(std::array<std::array<double, 5>, 5> A, std::array<double, 5> b, std::array<double, 5>& x) {
  constexpr int n = 5;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    }
    if (!(std::abs(A[piv][col]) > 1e-300)) return false;
    std::swap(A[piv], A[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < n; ++r) {
      const double f = A[r][col] / A[col][col];
      for (int c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= A[r][c] * x[c];
    x[r] = s / A[r][r];
  }
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Ordinary least-squares line y ~ slope * q + intercept.
inline std::pair<double, double> linear_fit(std::span<const double> q, std::span<const double> y) {
  const double mq = mean(q), my = mean(y);
  double sqq = 0, sqy = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    sqq += (q[i] - mq) * (q[i] - mq);
    sqy += (q[i] - mq) * (y[i] - my);
  }
  const double slope = sqq > 0 ? sqy / sqq : 0.0;
  return {slope, my - slope * mq};
}

inline std::array<double, 5> gradient_row(const LogisticParams& p, double q) {
  const double z = p.a[1] * (q - p.a[2]);
  const double zc = std::clamp(z, -LogisticParams::kExpClamp, LogisticParams::kExpClamp);
  const double s = 1.0 / (1.0 + std::exp(zc));  // 1 / (1 + e^z)
  const double ds_dz = (z == zc) ? -s * (1.0 - s) : 0.0;
  // f = a1 * (1/2 - s) + a4 q + a5
  return {0.5 - s, -p.a[0] * ds_dz * (q - p.a[2]), p.a[0] * ds_dz * p.a[1], q, 1.0};
}

// Damped Gauss-Newton from `start`; never returns parameters worse than the
// start.
inline LogisticParams levenberg_marquardt(LogisticParams start, std::span<const double> q, std::span<const double> y,
                                          int& iterations) {
  LogisticParams cur = start;
  double cur_sse = logistic_sse(cur, q, y);
  double lambda = 1e-3;
  iterations = 0;
  for (; iterations < kLogisticMaxIterations && cur_sse > 0; ++iterations) {
    std::array<std::array<double, 5>, 5> jtj{};
    std::array<double, 5> jtr{};
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto g = gradient_row(cur, q[i]);
      const double r = cur(q[i]) - y[i];
      for (int a = 0; a < 5; ++a) {
        jtr[a] -= g[a] * r;
        for (int b = 0; b < 5; ++b) jtj[a][b] += g[a] * g[b];
      }
    }
    bool accepted = false;
    double new_sse = cur_sse;
    while (lambda < 1e16) {
      auto damped = jtj;
      for (int a = 0; a < 5; ++a) damped[a][a] += lambda * std::max(jtj[a][a], 1e-12);
      std::array<double, 5> step{};
      if (solve5(damped, jtr, step)) {
        LogisticParams trial = cur;
        for (int a = 0; a < 5; ++a) trial.a[a] += step[a];
        const double trial_sse = logistic_sse(trial, q, y);
        if (std::isfinite(trial_sse) && trial_sse < cur_sse) {
          cur = trial;
          new_sse = trial_sse;
          lambda = std::max(lambda / 10.0, 1e-15);
          accepted = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
    const double rel = (cur_sse - new_sse) / std::max(cur_sse, std::numeric_limits<double>::min());
    cur_sse = new_sse;
    if (rel < kLogisticRelTol) break;
  }
  return cur;
}

}  // namespace detail

// Fits the five-parameter logistic. The documented start is
//   a1 = max(y) - min(y), a2 = 4 / (std(q) + eps), a3 = mean(q),
//   (a4, a5) = least-squares line of y on q.
// The optimiser also runs from the pure line (a1 = 0) and from centres at
// the deciles of q with either sign of a1, keeping the best result. An
// off-centre sigmoid otherwise tends to land in a mirrored local minimum.
inline LogisticFit fit_logistic(std::span<const double> q, std::span<const double> y) {
  if (q.size() != y.size()) throw ValidationError("fit_logistic: length mismatch");
  if (q.size() < kLogisticMinSamples) throw ValidationError("fit_logistic: need at least 5 samples");
  const auto [qlo, qhi] = std::minmax_element(q.begin(), q.end());
  if (*qlo == *qhi) throw ValidationError("fit_logistic: predicted scores are constant");

  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
  const auto [slope, intercept] = detail::linear_fit(q, y);
  const double range = *yhi - *ylo;
  LogisticParams init{{range, 4.0 / (stddev(q) + 1e-12), mean(q), slope, intercept}};
  LogisticParams linear{{0.0, init.a[1], init.a[2], slope, intercept}};

  LogisticFit out;
  out.initial_sse = logistic_sse(init, q, y);
  out.linear_sse = logistic_sse(linear, q, y);

  std::vector<LogisticParams> starts{init, linear};
  std::vector<double> sorted(q.begin(), q.end());
  std::sort(sorted.begin(), sorted.end());
  for (int d = 1; d <= 9; ++d) {
    const double centre = sorted[(sorted.size() - 1) * d / 10];
    for (double sign : {1.0, -1.0}) starts.push_back({{sign * range, init.a[1], centre, slope, intercept}});
  }

  out.sse = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    int it = 0;
    const auto p = detail::levenberg_marquardt(start, q, y, it);
    const double sse = logistic_sse(p, q, y);
    if (sse < out.sse) {
      out.params = p;
      out.sse = sse;
      out.iterations = it;
    }
  }
  return out;
}

inline std::vector<double> apply_logistic(const LogisticParams& p, std::span<const double> q) {
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = p(q[i]);
  return out;
}

}  // namespace miqa
