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
#include <map>
#include <span>
#include <string>

#include "miqa/core/types.hpp"

namespace miqa {

using WeightMap = std::map<std::string, double>;

// Ensemble weights proportional to each model's benchmark performance.
inline WeightMap normalize_weights(std::span<const ModelRecord> models) {
  if (models.empty()) throw ValidationError("cannot normalize weights of an empty model list");
  const TaskKind task = models.front().task;
  double total = 0;
  for (const auto& m : models) {
    if (m.task != task) {
      throw ValidationError("model '" + m.model_id + "' has task " + std::string(to_string(m.task)) +
                            ", expected " + std::string(to_string(task)));
    }
    if (!(m.benchmark_perf > 0) || !std::isfinite(m.benchmark_perf)) {
      throw ValidationError("model '" + m.model_id + "' has non-positive benchmark performance");
    }
    total += m.benchmark_perf;
  }
  WeightMap out;
  for (const auto& m : models) {
    if (!out.emplace(m.model_id, m.benchmark_perf / total).second) {
      throw ValidationError("duplicate model_id '" + m.model_id + "'");
    }
  }
  return out;
}

}  // namespace miqa
