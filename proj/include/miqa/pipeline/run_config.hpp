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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "miqa/agreement.hpp"
#include "miqa/core/fs.hpp"
#include "miqa/core/serialization.hpp"
#include "miqa/labeling.hpp"

namespace miqa {

inline constexpr std::string_view kToolVersion = "1.0.0";

struct RunConfig {
  std::string subcommand;
  std::string manifest;
  std::uint64_t seed = 0;
  double tau = 0.5;
  double ref_conf = 0.5;
  std::string iou_mode = "single_tau";
  double lambda1 = 0.5;
  std::string out = "miqa_out";
  unsigned threads = 0;  // 0 = all hardware threads

  // Subcommand inputs.
  std::string models;      // model registry CSV
  std::string pred;        // predictions JSONL (score) or score table CSV (evaluate)
  std::string agreements;  // per-model agreement table (validate-labels)
  std::string labels;      // label table (evaluate)
  std::string degraded;    // degraded directory (characterize)
  std::string label_kind = "composite";
  std::string report;  // explicit report path
  std::string table;   // optional flat CSV export (evaluate)
  std::size_t trials = 100;
  double split = 0.8;

  MatchConfig match() const {
    MatchConfig m{tau, ref_conf, parse_iou_mode(iou_mode)};
    m.validate();
    return m;
  }

  LabelWeights label_weights() const {
    LabelWeights lw{lambda1, 1.0 - lambda1};
    lw.validate();
    return lw;
  }

  void validate() const {
    match();
    label_weights();
    if (!(split > 0 && split < 1)) throw ValidationError("--split must lie in (0, 1)");
  }

  fs::path out_path(std::string_view name) const { return fs::path(out) / name; }

  // Everything that can change an output's content. Thread count and the
  // output directory are excluded so hashes match across runs that differ
  // only in those.
  json to_json() const {
    return {{"subcommand", subcommand}, {"manifest", manifest},     {"seed", seed},
            {"tau", tau},               {"ref_conf", ref_conf},     {"iou_mode", iou_mode},
            {"lambda1", lambda1},       {"lambda2", 1.0 - lambda1}, {"models", models},
            {"pred", pred},             {"agreements", agreements}, {"labels", labels},
            {"degraded", degraded},     {"label_kind", label_kind}, {"trials", trials},
            {"split", split}};
  }
};

// Config plus content hashes of the named input files.
inline json provenance(const RunConfig& cfg, const std::map<std::string, fs::path>& inputs) {
  json hashes = json::object();
  for (const auto& [name, path] : inputs) hashes[name] = file_hash(path);
  return {{"tool", "miqa"}, {"version", std::string(kToolVersion)}, {"config", cfg.to_json()}, {"inputs", hashes}};
}

inline void require_file(const std::string& path, std::string_view flag) {
  if (path.empty()) throw ValidationError(std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) throw ValidationError(std::string(flag) + ": no such file '" + path + "'");
}

}  // namespace miqa
