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

// End-to-end self check on the synthetic ensemble: corpus and predictions
// are written to disk, the real score / validate-labels / evaluate stages
// run on those files, and the results are compared against closed forms.

#include <cmath>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "miqa/degradation/random.hpp"
#include "miqa/pipeline/commands.hpp"
#include "miqa/synthetic.hpp"

namespace miqa {

inline constexpr double kSynthLabelTolerance = 1e-12;
inline constexpr double kSynthNoiseSigma = 0.05;
inline constexpr std::uint64_t kSynthNoiseStream = 0x6e6f697365ULL;
inline constexpr std::size_t kSynthImages = 3;

struct TaskCheck {
  TaskKind task = TaskKind::kClassification;
  double label_delta = 0;      // pipeline vs closed-form MMOS
  double singleton_delta = 0;  // one-model labels vs raw agreements
  bool labels_bounded = true;  // [0,1] and the composite bound
  bool homogeneous_stable = true;
  bool report_shape_ok = true;
  std::size_t cells = 0;
};

struct SynthCheckResult {
  std::vector<TaskCheck> tasks;

  double oracle_delta() const {
    double d = 0;
    for (const auto& t : tasks) d = std::max({d, t.label_delta, t.singleton_delta});
    return d;
  }
  bool passed() const {
    for (const auto& t : tasks) {
      if (!(t.label_delta <= kSynthLabelTolerance && t.singleton_delta <= kSynthLabelTolerance && t.labels_bounded &&
            t.homogeneous_stable && t.report_shape_ok)) {
        return false;
      }
    }
    return !tasks.empty();
  }
};

namespace detail {

inline double max_label_delta(const LabelTable& got, const LabelTable& want) {
  if (got.size() != want.size()) return std::numeric_limits<double>::infinity();
  double d = 0;
  for (const auto& [k, w] : want) {
    auto it = got.find(k);
    if (it == got.end()) return std::numeric_limits<double>::infinity();
    d = std::max({d, std::abs(it->second.consistency - w.consistency), std::abs(it->second.accuracy - w.accuracy),
                  std::abs(it->second.composite - w.composite)});
  }
  return d;
}

inline bool labels_bounded(const LabelTable& labels) {
  for (const auto& [k, q] : labels) {
    for (double v : {q.consistency, q.accuracy, q.composite}) {
      if (!(v >= 0 && v <= 1)) return false;
    }
    if (q.composite < std::min(q.consistency, q.accuracy) || q.composite > std::max(q.consistency, q.accuracy)) {
      return false;
    }
  }
  return true;
}

// Stratum axes must be exactly region x type x cell for the label kind and
// every breakdown must partition the overall sample count.
inline bool report_shape_ok(const EvalReport& r, const DatasetManifest& m) {
  std::set<StratumKey> expected;
  for (const auto& s : m.specs()) expected.insert({r.label_kind, s.region_mode(), s.type, s.cell()});
  std::set<StratumKey> got;
  for (const auto& [k, s] : r.strata) got.insert(k);
  if (got != expected) return false;
  auto total = [](const auto& groups) {
    std::size_t n = 0;
    for (const auto& [k, s] : groups) n += s.n;
    return n;
  };
  const auto n = r.overall.n;
  return total(r.strata) == n && total(r.by_region) == n && total(r.by_type) == n && total(r.by_cell) == n;
}

inline void write_ensemble(const fs::path& dir, const std::vector<synth::SynthModel>& models,
                           const DatasetManifest& manifest) {
  const auto recs = synth::records(models);
  write_file_atomic(dir / "models.csv", model_registry_to_text(recs));
  write_file_atomic(dir / "predictions.jsonl", predictions_to_text(synth::synth_predictions(models, manifest)));
}

}  // namespace detail

inline SynthCheckResult cmd_synth_check(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const fs::path root(cfg.out);
  const auto lw = cfg.label_weights();
  const auto match = cfg.match();
  SynthCheckResult result;

  for (auto task : {TaskKind::kClassification, TaskKind::kDetection, TaskKind::kSegmentation}) {
    TaskCheck check;
    check.task = task;
    const fs::path dir = root / std::string(to_string(task));
    const auto manifest = synth::write_corpus(dir / "corpus", task, kSynthImages);
    const auto manifest_path = (dir / "corpus" / "manifest.json").string();

    auto score_run = [&](const std::string& name, const std::vector<synth::SynthModel>& models) {
      const auto ens = dir / name;
      fs::create_directories(ens);
      detail::write_ensemble(ens, models, manifest);
      RunConfig sc = cfg;
      sc.subcommand = "score";
      sc.manifest = manifest_path;
      sc.models = (ens / "models.csv").string();
      sc.pred = (ens / "predictions.jsonl").string();
      sc.out = ens.string();
      sc.report.clear();
      cmd_score(sc);
      return sc;
    };

    // Heterogeneous ensemble against the closed form, read back from disk.
    const auto models = synth::default_ensemble(task);
    const auto full = score_run("ensemble", models);
    const auto labels = read_label_table(full.out_path("labels.csv"));
    check.cells = labels.size();
    check.label_delta = detail::max_label_delta(labels, synth::closed_form_labels(models, manifest, match, lw));
    check.labels_bounded = detail::labels_bounded(labels);

    // Singleton ensemble: labels are the model's raw agreements.
    const auto single = score_run("singleton", {models.front()});
    const auto single_labels = read_label_table(single.out_path("labels.csv"));
    check.labels_bounded = check.labels_bounded && detail::labels_bounded(single_labels);
    LabelTable raw;
    for (const auto& im : manifest.images) {
      for (const auto& s : manifest.specs()) {
        const auto a = synth::closed_form_agreement(models.front(), im, s, match);
        raw[{im.image_id, s}] = {a.consistency, a.accuracy, lw.lambda1 * a.consistency + lw.lambda2 * a.accuracy};
      }
    }
    check.singleton_delta = detail::max_label_delta(single_labels, raw);

    // Homogeneous ensemble: every split yields identical labels.
    const auto twins = score_run("homogeneous", synth::homogeneous_ensemble(task, 4));
    RunConfig vc = cfg;
    vc.subcommand = "validate-labels";
    vc.models = twins.models;
    vc.agreements = twins.out_path("agreements.csv").string();
    vc.out = twins.out;
    vc.report.clear();
    const auto stability = cmd_validate(vc);
    for (auto k : kAllLabelKinds) {
      const auto& s = stability.of(k);
      check.homogeneous_stable = check.homogeneous_stable && s.srcc.defined == vc.trials &&
                                 s.plcc.defined == vc.trials && std::abs(s.srcc.mean - 1) <= 1e-12 &&
                                 std::abs(s.plcc.mean - 1) <= 1e-12 && s.rmse.mean == 0;
    }

    // Evaluate seeded noisy predictions of the composite labels.
    const CounterRng noise(cfg.seed, kSynthNoiseStream);
    ScoreTable noisy;
    std::uint64_t i = 0;
    for (const auto& [k, q] : labels) noisy[k] = q.composite + kSynthNoiseSigma * noise.normal(i++);
    write_file_atomic(dir / "ensemble" / "predicted_scores.csv", score_table_to_text(noisy));
    RunConfig ec = cfg;
    ec.subcommand = "evaluate";
    ec.labels = full.out_path("labels.csv").string();
    ec.pred = (dir / "ensemble" / "predicted_scores.csv").string();
    ec.label_kind = "all";
    ec.out = full.out;
    ec.report.clear();
    ec.table = (dir / "ensemble" / "report_table.csv").string();
    for (const auto& r : cmd_evaluate(ec)) check.report_shape_ok = check.report_shape_ok && detail::report_shape_ok(r, manifest);

    log << to_string(task) << ": cells=" << check.cells << " label_delta=" << check.label_delta
        << " singleton_delta=" << check.singleton_delta << " bounded=" << (check.labels_bounded ? "yes" : "no")
        << " homogeneous_stable=" << (check.homogeneous_stable ? "yes" : "no")
        << " report_shape=" << (check.report_shape_ok ? "ok" : "bad") << "\n";
    result.tasks.push_back(check);
  }
  log << "oracle-delta: " << result.oracle_delta() << "\n";
  log << (result.passed() ? "synth-check: PASS" : "synth-check: FAIL") << "\n";
  return result;
}

}  // namespace miqa
