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

// Evaluation of an external quality predictor against MMOS labels.
//
// Rank statistics (SRCC, KRCC) use the raw predicted scores. PLCC and RMSE
// are computed after fitting the five-parameter logistic on the sample set
// being reported, so every stratum gets its own fit.
//
// Strata partition the samples by (region mode, distortion type, severity
// cell); the label type is fixed per report. Marginal breakdowns by region
// mode, distortion type and severity cell are partitions too.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "miqa/core/parallel.hpp"
#include "miqa/core/serialization.hpp"
#include "miqa/core/types.hpp"
#include "miqa/evaluation/correlation.hpp"
#include "miqa/evaluation/logistic.hpp"

namespace miqa {

inline constexpr std::size_t kMinStratumSamples = 5;

struct StratumStats {
  std::size_t n = 0;
  bool sufficient = false;  // n >= 5; metrics are only computed when true
  Correlation srcc, plcc, krcc;
  std::optional<double> rmse;
};

struct StratumKey {
  LabelKind label = LabelKind::kComposite;
  RegionMode region = RegionMode::kUniform;
  DistortionType type = DistortionType::kContrast;
  SeverityCell cell;

  friend auto operator<=>(const StratumKey&, const StratumKey&) = default;
};

inline std::string to_string(const StratumKey& k) {
  return std::string(to_string(k.label)) + "|" + std::string(to_string(k.region)) + "|" +
         std::string(to_string(k.type)) + "|" + k.cell.label();
}

struct EvalReport {
  LabelKind label_kind = LabelKind::kComposite;
  StratumStats overall;
  std::map<StratumKey, StratumStats> strata;
  std::map<RegionMode, StratumStats> by_region;
  std::map<DistortionType, StratumStats> by_type;
  std::map<SeverityCell, StratumStats> by_cell;
};

// Metrics for one sample set.
inline StratumStats stratum_stats(std::span<const double> predicted, std::span<const double> labels) {
  StratumStats s;
  s.n = predicted.size();
  s.sufficient = s.n >= kMinStratumSamples;
  if (!s.sufficient) return s;
  s.srcc = srcc(predicted, labels);
  s.krcc = krcc(predicted, labels);
  const auto [lo, hi] = std::minmax_element(predicted.begin(), predicted.end());
  if (*lo == *hi) return s;  // no remap possible; PLCC/RMSE undefined
  const auto fit = fit_logistic(predicted, labels);
  const auto mapped = apply_logistic(fit.params, predicted);
  s.plcc = plcc(mapped, labels);
  s.rmse = rmse(mapped, labels);
  return s;
}

inline EvalReport evaluate(const ScoreTable& predicted, const LabelTable& labels, LabelKind kind,
                           unsigned threads = 1) {
  if (predicted.empty() || labels.empty()) throw ValidationError("evaluate: empty input");
  if (predicted.size() != labels.size()) {
    throw ValidationError("evaluate: " + std::to_string(predicted.size()) + " predictions but " +
                          std::to_string(labels.size()) + " labels");
  }
  std::vector<double> q, y;
  std::vector<const CellKey*> keys;
  auto pit = predicted.begin();
  for (const auto& [k, lab] : labels) {
    if (pit->first != k) throw ValidationError("evaluate: key sets differ at " + to_string(k));
    q.push_back(pit->second);
    y.push_back(select(lab, kind));
    keys.push_back(&k);
    ++pit;
  }
  if (q.size() < kMinStratumSamples) throw ValidationError("evaluate: need at least 5 samples");

  EvalReport report;
  report.label_kind = kind;

  // Every group is a list of sample indices; groups are evaluated in
  // parallel and written back by position.
  struct Group {
    std::vector<std::size_t> idx;
    StratumStats* target = nullptr;
  };
  std::map<StratumKey, std::vector<std::size_t>> strata;
  std::map<RegionMode, std::vector<std::size_t>> by_region;
  std::map<DistortionType, std::vector<std::size_t>> by_type;
  std::map<SeverityCell, std::vector<std::size_t>> by_cell;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& s = keys[i]->spec;
    strata[{kind, s.region_mode(), s.type, s.cell()}].push_back(i);
    by_region[s.region_mode()].push_back(i);
    by_type[s.type].push_back(i);
    by_cell[s.cell()].push_back(i);
  }
  std::vector<Group> groups;
  std::vector<std::size_t> all(q.size());
  std::iota(all.begin(), all.end(), 0);
  groups.push_back({all, &report.overall});
  for (auto& [k, v] : strata) groups.push_back({std::move(v), &report.strata[k]});
  for (auto& [k, v] : by_region) groups.push_back({std::move(v), &report.by_region[k]});
  for (auto& [k, v] : by_type) groups.push_back({std::move(v), &report.by_type[k]});
  for (auto& [k, v] : by_cell) groups.push_back({std::move(v), &report.by_cell[k]});

  parallel_for(groups.size(), threads, [&](std::size_t g) {
    std::vector<double> gq, gy;
    for (auto i : groups[g].idx) {
      gq.push_back(q[i]);
      gy.push_back(y[i]);
    }
    *groups[g].target = stratum_stats(gq, gy);
  });
  return report;
}

inline json stratum_to_json(const StratumStats& s) {
  auto opt = [](const std::optional<double>& v) -> json { return v ? json(*v) : json(nullptr); };
  return {{"n", s.n},
          {"status", s.sufficient ? "ok" : "insufficient"},
          {"srcc", opt(s.srcc)},
          {"plcc", opt(s.plcc)},
          {"krcc", opt(s.krcc)},
          {"rmse", opt(s.rmse)}};
}

inline json report_to_json(const EvalReport& r) {
  json strata = json::array();
  for (const auto& [k, s] : r.strata) {
    json e = stratum_to_json(s);
    e["label"] = std::string(to_string(k.label));
    e["region"] = std::string(to_string(k.region));
    e["type"] = std::string(to_string(k.type));
    e["cell"] = k.cell.label();
    strata.push_back(std::move(e));
  }
  json region = json::object(), type = json::object(), cell = json::object();
  for (const auto& [k, s] : r.by_region) region[std::string(to_string(k))] = stratum_to_json(s);
  for (const auto& [k, s] : r.by_type) type[std::string(to_string(k))] = stratum_to_json(s);
  for (const auto& [k, s] : r.by_cell) cell[k.label()] = stratum_to_json(s);
  return {{"label_kind", std::string(to_string(r.label_kind))},
          {"overall", stratum_to_json(r.overall)},
          {"strata", strata},
          {"breakdowns", {{"region", region}, {"type", type}, {"cell", cell}}}};
}

inline constexpr std::string_view kReportTableHeader = "label,axis,region,type,cell,n,status,srcc,plcc,krcc,rmse";

// Flat CSV of every reported group, for external plotting.
inline std::string report_table(const std::vector<EvalReport>& reports) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  auto row = [&](const EvalReport& r, std::string_view axis, std::string_view region, std::string_view type,
                 const std::string& cell, const StratumStats& s) {
    return std::string(to_string(r.label_kind)) + "," + std::string(axis) + "," + std::string(region) + "," +
           std::string(type) + "," + cell + "," + std::to_string(s.n) + "," + (s.sufficient ? "ok" : "insufficient") +
           "," + opt(s.srcc) + "," + opt(s.plcc) + "," + opt(s.krcc) + "," + opt(s.rmse) + "\n";
  };
  std::string out(kReportTableHeader);
  out += '\n';
  for (const auto& r : reports) {
    out += row(r, "overall", "*", "*", "*", r.overall);
    for (const auto& [k, s] : r.by_region) out += row(r, "region", to_string(k), "*", "*", s);
    for (const auto& [k, s] : r.by_type) out += row(r, "type", "*", to_string(k), "*", s);
    for (const auto& [k, s] : r.by_cell) out += row(r, "cell", to_string(k.region_mode()), "*", k.label(), s);
    for (const auto& [k, s] : r.strata) out += row(r, "stratum", to_string(k.region), to_string(k.type), k.cell.label(), s);
  }
  return out;
}

}  // namespace miqa
