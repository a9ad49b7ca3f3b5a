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

// Mean machine opinion scores: weighted aggregation of per-model agreement
// into consistency / accuracy / composite labels, and the cross-model label
// stability protocol (random model splits, labels per split, agreement
// between the two label vectors).

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "miqa/core/hash.hpp"
#include "miqa/core/parallel.hpp"
#include "miqa/core/serialization.hpp"
#include "miqa/core/types.hpp"
#include "miqa/core/weights.hpp"
#include "miqa/degradation/random.hpp"
#include "miqa/evaluation/correlation.hpp"

namespace miqa {

struct AgreementPair {
  double consistency = 0;
  double accuracy = 0;
  friend bool operator==(const AgreementPair&, const AgreementPair&) = default;
};

// Dense (model x cell) table of agreement scores. Models and keys are fixed
// at construction; every slot must be filled before use.
class ScoreTensor {
 public:
  ScoreTensor(std::vector<std::string> models, std::vector<CellKey> keys)
      : models_(std::move(models)), keys_(std::move(keys)) {
    for (std::size_t i = 0; i < models_.size(); ++i) {
      if (!model_index_.emplace(models_[i], i).second) {
        throw ValidationError("duplicate model '" + models_[i] + "' in score tensor");
      }
    }
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      if (!key_index_.emplace(keys_[i], i).second) {
        throw ValidationError("duplicate cell " + to_string(keys_[i]) + " in score tensor");
      }
    }
    values_.resize(models_.size() * keys_.size());
    filled_.assign(values_.size(), false);
  }

  const std::vector<std::string>& models() const noexcept { return models_; }
  const std::vector<CellKey>& keys() const noexcept { return keys_; }

  std::optional<std::size_t> model_index(const std::string& id) const {
    auto it = model_index_.find(id);
    if (it == model_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> key_index(const CellKey& k) const {
    auto it = key_index_.find(k);
    if (it == key_index_.end()) return std::nullopt;
    return it->second;
  }

  bool filled(std::size_t m, std::size_t k) const { return filled_[m * keys_.size() + k]; }

  void set(std::size_t m, std::size_t k, AgreementPair v) {
    if (!(v.consistency >= 0 && v.consistency <= 1 && v.accuracy >= 0 && v.accuracy <= 1)) {
      throw ValidationError("agreement for " + models_[m] + " at " + to_string(keys_[k]) + " outside [0,1]");
    }
    values_[m * keys_.size() + k] = v;
    filled_[m * keys_.size() + k] = true;
  }

  const AgreementPair& at(std::size_t m, std::size_t k) const { return values_[m * keys_.size() + k]; }

  // Slots still empty, as (model, key) pairs in model-major order.
  std::vector<std::pair<std::size_t, std::size_t>> missing(std::size_t limit) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t m = 0; m < models_.size() && out.size() < limit; ++m) {
      for (std::size_t k = 0; k < keys_.size() && out.size() < limit; ++k) {
        if (!filled(m, k)) out.emplace_back(m, k);
      }
    }
    return out;
  }

  void require_dense() const {
    auto miss = missing(10);
    if (miss.empty()) return;
    std::string msg = "score tensor is missing entries:";
    for (auto [m, k] : miss) msg += " " + models_[m] + "@" + to_string(keys_[k]);
    throw ValidationError(msg);
  }

 private:
  std::vector<std::string> models_;
  std::vector<CellKey> keys_;
  std::map<std::string, std::size_t> model_index_;
  std::map<CellKey, std::size_t> key_index_;
  std::vector<AgreementPair> values_;
  std::vector<bool> filled_;
};

struct LabelWeights {
  double lambda1 = 0.5;  // consistency
  double lambda2 = 0.5;  // accuracy

  void validate() const {
    if (!(lambda1 >= 0 && lambda1 <= 1 && lambda2 >= 0 && lambda2 <= 1) || std::abs(lambda1 + lambda2 - 1) > 1e-12) {
      throw ValidationError("lambda1 and lambda2 must lie in [0,1] and sum to 1");
    }
  }
};

inline constexpr double kWeightSumTolerance = 1e-9;

// Labels over `models` (a subset of the tensor's model axis, given as
// indices) with weights aligned to that subset.
inline std::vector<QualityLabel> mmos_subset(const ScoreTensor& scores, const std::vector<std::size_t>& models,
                                             const std::vector<double>& weights, LabelWeights lw) {
  lw.validate();
  std::vector<QualityLabel> out(scores.keys().size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    double c = 0, a = 0;
    double cmin = 1, cmax = 0, amin = 1, amax = 0;
    for (std::size_t j = 0; j < models.size(); ++j) {
      const auto& v = scores.at(models[j], k);
      c += weights[j] * v.consistency;
      a += weights[j] * v.accuracy;
      cmin = std::min(cmin, v.consistency);
      cmax = std::max(cmax, v.consistency);
      amin = std::min(amin, v.accuracy);
      amax = std::max(amax, v.accuracy);
    }
    // A convex combination stays within the hull of its inputs; the clamps
    // only absorb rounding.
    c = std::clamp(c, cmin, cmax);
    a = std::clamp(a, amin, amax);
    const double s = std::clamp(lw.lambda1 * c + lw.lambda2 * a, std::min(c, a), std::max(c, a));
    out[k] = {c, a, s};
  }
  return out;
}

// Weighted labels over the whole model axis. `weights` must cover exactly
// the tensor's models and sum to 1.
inline LabelTable mmos(const ScoreTensor& scores, const WeightMap& weights, LabelWeights lw) {
  scores.require_dense();
  if (weights.size() != scores.models().size()) throw ValidationError("weights do not cover the model set");
  std::vector<std::size_t> idx;
  std::vector<double> w;
  double total = 0;
  for (std::size_t m = 0; m < scores.models().size(); ++m) {
    auto it = weights.find(scores.models()[m]);
    if (it == weights.end()) throw ValidationError("no weight for model '" + scores.models()[m] + "'");
    if (!(it->second >= 0 && it->second <= 1)) throw ValidationError("weight outside [0,1]");
    idx.push_back(m);
    w.push_back(it->second);
    total += it->second;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) throw ValidationError("weights do not sum to 1");
  const auto labels = mmos_subset(scores, idx, w, lw);
  LabelTable out;
  for (std::size_t k = 0; k < labels.size(); ++k) out.emplace(scores.keys()[k], labels[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Cross-model label validation

struct MetricSummary {
  double mean = 0;
  double std = 0;
  std::size_t defined = 0;  // trials where the metric was defined
};

struct LabelStability {
  MetricSummary srcc, plcc, rmse;
};

struct StabilityReport {
  LabelStability consistency, accuracy, composite;
  std::size_t n_trials = 0;
  double split_fraction = 0.8;
  std::uint64_t seed = 0;

  const LabelStability& of(LabelKind k) const {
    return k == LabelKind::kConsistency ? consistency : k == LabelKind::kAccuracy ? accuracy : composite;
  }
  LabelStability& of(LabelKind k) {
    return k == LabelKind::kConsistency ? consistency : k == LabelKind::kAccuracy ? accuracy : composite;
  }
};

inline constexpr std::uint64_t kSplitStream = 0x5eed5eedULL;

// Model order for one trial: Fisher-Yates driven by CounterRng keyed by
// (seed, trial), drawing j = floor(u * (i + 1)) for i = n-1 .. 1.
inline std::vector<std::size_t> trial_permutation(std::size_t n, std::uint64_t seed, std::size_t trial) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const CounterRng rng(mix64(seed, trial), kSplitStream);
  for (std::size_t i = n - 1; i >= 1; --i) {
    auto j = static_cast<std::size_t>(std::floor(rng.uniform(i) * static_cast<double>(i + 1)));
    std::swap(perm[i], perm[std::min(j, i)]);
  }
  return perm;
}

// Size of the larger subset: round(split * n), clamped so both sides are
// non-empty.
inline std::size_t split_size(std::size_t n, double split) {
  auto a = static_cast<std::size_t>(std::llround(split * static_cast<double>(n)));
  return std::clamp<std::size_t>(a, 1, n - 1);
}

struct TrialMetrics {
  std::array<Correlation, 3> srcc, plcc;
  std::array<double, 3> rmse{};
};

inline MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.defined = values.size();
  if (values.empty()) return s;
  s.mean = mean(values);
  s.std = stddev(values);
  return s;
}

inline StabilityReport validate_labels(const ScoreTensor& scores, const std::vector<ModelRecord>& models,
                                       std::size_t n_trials = 100, double split = 0.8, std::uint64_t seed = 0,
                                       LabelWeights lw = {}, unsigned threads = 1) {
  scores.require_dense();
  if (models.size() < 2) throw ValidationError("label validation needs at least 2 models");
  if (n_trials == 0) throw ValidationError("label validation needs at least one trial");
  if (!(split > 0 && split < 1)) throw ValidationError("split fraction must lie in (0,1)");
  std::vector<std::size_t> tensor_index;
  for (const auto& m : models) {
    auto idx = scores.model_index(m.model_id);
    if (!idx) throw ValidationError("model '" + m.model_id + "' not present in score tensor");
    tensor_index.push_back(*idx);
  }
  normalize_weights(models);  // validates tasks and performance values

  const std::size_t n = models.size();
  const std::size_t first = split_size(n, split);
  std::vector<TrialMetrics> trials(n_trials);
  parallel_for(n_trials, threads, [&](std::size_t t) {
    const auto perm = trial_permutation(n, seed, t);
    auto labels_for = [&](std::size_t lo, std::size_t hi) {
      std::vector<ModelRecord> subset;
      std::vector<std::size_t> idx;
      for (std::size_t i = lo; i < hi; ++i) {
        subset.push_back(models[perm[i]]);
        idx.push_back(tensor_index[perm[i]]);
      }
      const auto wmap = normalize_weights(subset);
      std::vector<double> w;
      for (const auto& m : subset) w.push_back(wmap.at(m.model_id));
      return mmos_subset(scores, idx, w, lw);
    };
    const auto a = labels_for(0, first);
    const auto b = labels_for(first, n);
    for (auto kind : kAllLabelKinds) {
      std::vector<double> va, vb;
      for (std::size_t k = 0; k < a.size(); ++k) {
        va.push_back(select(a[k], kind));
        vb.push_back(select(b[k], kind));
      }
      const auto ki = static_cast<std::size_t>(kind);
      trials[t].srcc[ki] = srcc(va, vb);
      trials[t].plcc[ki] = plcc(va, vb);
      trials[t].rmse[ki] = rmse(va, vb);
    }
  });

  StabilityReport report;
  report.n_trials = n_trials;
  report.split_fraction = split;
  report.seed = seed;
  for (auto kind : kAllLabelKinds) {
    const auto ki = static_cast<std::size_t>(kind);
    std::vector<double> s, p, r;
    for (const auto& tm : trials) {
      if (tm.srcc[ki]) s.push_back(*tm.srcc[ki]);
      if (tm.plcc[ki]) p.push_back(*tm.plcc[ki]);
      r.push_back(tm.rmse[ki]);
    }
    report.of(kind) = {summarize(s), summarize(p), summarize(r)};
  }
  return report;
}

inline json stability_to_json(const StabilityReport& r) {
  auto summary = [](const MetricSummary& m) -> json {
    if (m.defined == 0) return {{"mean", nullptr}, {"std", nullptr}, {"defined_trials", 0}};
    return {{"mean", m.mean}, {"std", m.std}, {"defined_trials", m.defined}};
  };
  json labels = json::object();
  for (auto k : kAllLabelKinds) {
    const auto& s = r.of(k);
    labels[std::string(to_string(k))] = {{"srcc", summary(s.srcc)}, {"plcc", summary(s.plcc)}, {"rmse", summary(s.rmse)}};
  }
  return {{"n_trials", r.n_trials}, {"split_fraction", r.split_fraction}, {"seed", r.seed}, {"labels", labels}};
}

}  // namespace miqa
