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

// Pipeline stages behind the CLI subcommands. Every stage reads files, writes
// files atomically, and embeds a provenance block in each output.

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "miqa/agreement.hpp"
#include "miqa/core/fs.hpp"
#include "miqa/core/parallel.hpp"
#include "miqa/core/png_io.hpp"
#include "miqa/core/serialization.hpp"
#include "miqa/core/weights.hpp"
#include "miqa/degradation/grid.hpp"
#include "miqa/evaluation/report.hpp"
#include "miqa/fidelity.hpp"
#include "miqa/labeling.hpp"
#include "miqa/pipeline/run_config.hpp"

namespace miqa {

inline constexpr std::string_view kGridIndexHeader = "image_id,distortion_type,roi_level,bg_level,file";
inline constexpr std::string_view kFidelityHeader = "image_id,distortion_type,roi_level,bg_level,psnr,ssim";
inline constexpr std::string_view kAgreementHeader =
    "model_id,image_id,distortion_type,roi_level,bg_level,consistency,accuracy";

inline std::string degraded_file_name(const CellKey& k) {
  return k.image_id + "__" + std::string(to_string(k.spec.type)) + "__" + std::to_string(k.spec.roi_level) + "_" +
         std::to_string(k.spec.bg_level) + ".png";
}

inline std::vector<CellKey> manifest_keys(const DatasetManifest& m) {
  std::vector<CellKey> keys;
  const auto specs = m.specs();
  for (const auto& im : m.images) {
    for (const auto& s : specs) keys.push_back({im.image_id, s});
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

inline std::map<std::string, fs::path> manifest_inputs(const DatasetManifest& m, const fs::path& manifest_path) {
  std::map<std::string, fs::path> in{{"manifest", manifest_path}};
  for (const auto& im : m.images) {
    in["image:" + im.image_id] = resolve(m, im.image_path);
    in["mask:" + im.image_id] = resolve(m, im.mask_path);
  }
  return in;
}

// ---------------------------------------------------------------------------
// degrade

struct DegradeSummary {
  std::size_t files = 0;
  fs::path index;
};

inline DegradeSummary cmd_degrade(const RunConfig& cfg) {
  cfg.validate();
  require_file(cfg.manifest, "--manifest");
  const auto manifest = load_manifest(cfg.manifest);
  const auto threads = resolve_threads(cfg.threads);
  const fs::path out(cfg.out);
  fs::create_directories(out);

  // One unit per (image, type); each unit renders and writes its cells.
  std::vector<std::pair<std::size_t, DistortionType>> units;
  for (std::size_t i = 0; i < manifest.images.size(); ++i) {
    for (auto t : manifest.types) units.emplace_back(i, t);
  }
  std::vector<std::vector<CellKey>> written(units.size());
  parallel_for(units.size(), threads, [&](std::size_t u) {
    const auto& im = manifest.images[units[u].first];
    const auto image = read_png(resolve(manifest, im.image_path));
    const auto mask = read_mask_png(resolve(manifest, im.mask_path));
    const auto cells = generate_grid(image, mask, units[u].second, image_seed(cfg.seed, im.image_id), manifest.grid);
    for (const auto& c : cells) {
      CellKey k{im.image_id, c.spec};
      write_png(out / degraded_file_name(k), c.image);
      written[u].push_back(std::move(k));
    }
  });

  std::vector<CellKey> keys;
  for (auto& w : written) keys.insert(keys.end(), w.begin(), w.end());
  std::sort(keys.begin(), keys.end());
  const auto prov = provenance(cfg, manifest_inputs(manifest, cfg.manifest));
  std::string index = "# provenance: " + prov.dump() + "\n";
  index += kGridIndexHeader;
  index += '\n';
  for (const auto& k : keys) index += cell_key_fields(k) + "," + degraded_file_name(k) + "\n";
  write_file_atomic(out / "grid_index.csv", index);
  return {keys.size(), out / "grid_index.csv"};
}

// ---------------------------------------------------------------------------
// characterize

struct FidelityRow {
  CellKey key;
  FidelityScore score;
};

inline std::string fidelity_table_to_text(const std::vector<FidelityRow>& rows, const json* prov) {
  std::string out = prov ? "# provenance: " + prov->dump() + "\n" : std::string();
  out += kFidelityHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += cell_key_fields(r.key) + "," + format_double(r.score.psnr) + "," + format_double(r.score.ssim) + "\n";
  }
  return out;
}

// PSNR/SSIM of every degraded cell against its source image. Reads the
// degraded files from --degraded when given, otherwise renders the grid in
// memory with --seed.
inline std::vector<FidelityRow> cmd_characterize(const RunConfig& cfg) {
  cfg.validate();
  require_file(cfg.manifest, "--manifest");
  const auto manifest = load_manifest(cfg.manifest);
  const auto threads = resolve_threads(cfg.threads);
  const auto keys = manifest_keys(manifest);
  std::map<std::string, const ManifestImage*> by_id;
  for (const auto& im : manifest.images) by_id[im.image_id] = &im;

  std::vector<FidelityRow> rows(keys.size());
  auto inputs = manifest_inputs(manifest, cfg.manifest);
  if (!cfg.degraded.empty()) {
    const fs::path dir(cfg.degraded);
    require_file((dir / "grid_index.csv").string(), "--degraded");
    inputs["grid_index"] = dir / "grid_index.csv";
    std::map<std::string, ImageBuffer> sources;
    for (const auto& im : manifest.images) sources[im.image_id] = read_png(resolve(manifest, im.image_path));
    parallel_for(keys.size(), threads, [&](std::size_t i) {
      const auto path = dir / degraded_file_name(keys[i]);
      if (!fs::is_regular_file(path)) throw ValidationError("missing degraded file '" + path.string() + "'");
      rows[i] = {keys[i], fidelity(sources.at(keys[i].image_id), read_png(path))};
    });
  } else {
    std::vector<std::pair<std::size_t, DistortionType>> units;
    for (std::size_t i = 0; i < manifest.images.size(); ++i) {
      for (auto t : manifest.types) units.emplace_back(i, t);
    }
    std::vector<std::vector<FidelityRow>> parts(units.size());
    parallel_for(units.size(), threads, [&](std::size_t u) {
      const auto& im = manifest.images[units[u].first];
      const auto image = read_png(resolve(manifest, im.image_path));
      const auto mask = read_mask_png(resolve(manifest, im.mask_path));
      for (const auto& c : generate_grid(image, mask, units[u].second, image_seed(cfg.seed, im.image_id),
                                         manifest.grid)) {
        parts[u].push_back({{im.image_id, c.spec}, fidelity(image, c.image)});
      }
    });
    rows.clear();
    for (auto& p : parts) rows.insert(rows.end(), p.begin(), p.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  }
  const auto prov = provenance(cfg, inputs);
  write_file_atomic(cfg.report.empty() ? cfg.out_path("fidelity.csv") : fs::path(cfg.report),
                    fidelity_table_to_text(rows, &prov));
  return rows;
}

// ---------------------------------------------------------------------------
// score

// Clips boxes to the image; boxes left with no area are dropped. Instance
// masks must already match the image dimensions.
inline void clamp_to_image(Payload& p, int width, int height) {
  if (auto* d = std::get_if<DetectionSet>(&p)) {
    std::vector<Detection> kept;
    for (auto it : d->items) {
      const double x0 = std::max(0.0, it.bbox.x), y0 = std::max(0.0, it.bbox.y);
      const double x1 = std::min<double>(width, it.bbox.x + it.bbox.w);
      const double y1 = std::min<double>(height, it.bbox.y + it.bbox.h);
      if (x1 <= x0 || y1 <= y0) continue;
      it.bbox = {x0, y0, x1 - x0, y1 - y0};
      kept.push_back(it);
    }
    d->items = std::move(kept);
  } else if (const auto* s = std::get_if<InstanceSet>(&p)) {
    for (const auto& it : s->items) {
      if (it.mask.width != width || it.mask.height != height) {
        throw ValidationError("instance mask dimensions do not match image");
      }
    }
  }
}

inline std::string agreements_to_text(const ScoreTensor& t, const json* prov) {
  std::string out = prov ? "# provenance: " + prov->dump() + "\n" : std::string();
  out += kAgreementHeader;
  out += '\n';
  for (std::size_t m = 0; m < t.models().size(); ++m) {
    for (std::size_t k = 0; k < t.keys().size(); ++k) {
      const auto& v = t.at(m, k);
      out += t.models()[m] + "," + cell_key_fields(t.keys()[k]) + "," + format_double(v.consistency) + "," +
             format_double(v.accuracy) + "\n";
    }
  }
  return out;
}

// Reads a per-model agreement table back into a dense tensor over the
// registry's models.
inline ScoreTensor read_agreements(const fs::path& path, const std::vector<ModelRecord>& registry) {
  std::vector<std::tuple<std::string, CellKey, AgreementPair>> rows;
  std::set<CellKey> keyset;
  detail::read_csv(path, kAgreementHeader, [&](const auto& f, std::size_t) {
    std::vector<std::string_view> kf(f.begin() + 1, f.begin() + 5);
    CellKey k = parse_cell_key(kf);
    keyset.insert(k);
    rows.emplace_back(std::string(f[0]), k,
                      AgreementPair{parse_double(f[5], "consistency"), parse_double(f[6], "accuracy")});
  });
  std::vector<std::string> ids;
  for (const auto& m : registry) ids.push_back(m.model_id);
  ScoreTensor t(ids, {keyset.begin(), keyset.end()});
  for (const auto& [model, key, v] : rows) {
    auto mi = t.model_index(model);
    if (!mi) continue;  // model outside the registry
    const auto ki = *t.key_index(key);
    if (t.filled(*mi, ki)) throw ValidationError("duplicate agreement row for " + model + "@" + to_string(key));
    t.set(*mi, ki, v);
  }
  t.require_dense();
  return t;
}

struct ScoreResult {
  ScoreTensor agreements;
  LabelTable labels;
};

inline constexpr std::size_t kScoreBatch = 4096;

// Streams prediction records into per-model agreement scores and MMOS
// labels. Pass one collects pristine predictions (the consistency
// references); pass two scores degraded records in batches.
inline ScoreResult cmd_score(const RunConfig& cfg) {
  cfg.validate();
  require_file(cfg.manifest, "--manifest");
  require_file(cfg.models, "--models");
  require_file(cfg.pred, "--pred");
  const auto manifest = load_manifest(cfg.manifest);
  const auto registry = read_model_registry(cfg.models);
  const auto weights = normalize_weights(registry);
  for (const auto& m : registry) {
    if (m.task != manifest.task) {
      throw ValidationError("model '" + m.model_id + "' task " + std::string(to_string(m.task)) +
                            " does not match manifest task " + std::string(to_string(manifest.task)));
    }
  }
  const auto match = cfg.match();
  const auto threads = resolve_threads(cfg.threads);

  std::vector<std::string> model_ids;
  for (const auto& m : registry) model_ids.push_back(m.model_id);
  ScoreTensor tensor(model_ids, manifest_keys(manifest));
  std::map<std::string, std::size_t> image_index;
  for (std::size_t i = 0; i < manifest.images.size(); ++i) image_index[manifest.images[i].image_id] = i;

  auto check_record = [&](PredictionRecord& r, std::size_t line) -> std::size_t {
    const auto where = "'" + cfg.pred + "' line " + std::to_string(line);
    if (!tensor.model_index(r.model_id)) throw ValidationError(where + ": model '" + r.model_id + "' not in registry");
    auto it = image_index.find(r.image_id);
    if (it == image_index.end()) throw ValidationError(where + ": image '" + r.image_id + "' not in manifest");
    if (payload_task(r.payload) != manifest.task) throw ValidationError(where + ": payload task mismatch");
    const auto& im = manifest.images[it->second];
    clamp_to_image(r.payload, im.width, im.height);
    return it->second;
  };

  auto for_each_line = [&](const std::function<void(std::string_view, std::size_t)>& fn) {
    std::ifstream in(cfg.pred);
    if (!in) throw Error("cannot open '" + cfg.pred + "'");
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      fn(line, n);
    }
  };

  // Pass 1: pristine references.
  std::map<std::pair<std::string, std::string>, Payload> pristine;
  for_each_line([&](std::string_view text, std::size_t n) {
    auto r = prediction_from_line(text, n);
    if (r.distortion) return;
    check_record(r, n);
    if (!pristine.emplace(std::pair{r.model_id, r.image_id}, std::move(r.payload)).second) {
      throw ValidationError("'" + cfg.pred + "' line " + std::to_string(n) + ": duplicate pristine prediction");
    }
  });
  std::vector<std::string> absent;
  for (const auto& m : model_ids) {
    for (const auto& im : manifest.images) {
      if (!pristine.count({m, im.image_id}) && absent.size() < 10) absent.push_back(m + "@" + im.image_id);
    }
  }
  if (!absent.empty()) {
    std::string msg = "missing pristine predictions:";
    for (const auto& a : absent) msg += " " + a;
    throw ValidationError(msg);
  }

  // Pass 2: degraded records.
  struct Pending {
    PredictionRecord record;
    std::size_t image = 0, model = 0, key = 0, line = 0;
    AgreementPair value;
  };
  std::vector<Pending> batch;
  auto flush = [&] {
    parallel_for(batch.size(), threads, [&](std::size_t i) {
      auto& p = batch[i];
      const auto& im = manifest.images[p.image];
      const auto& ref = pristine.at({p.record.model_id, p.record.image_id});
      p.value.consistency = agreement(manifest.task, p.record.payload, ref, ReferenceKind::kPrediction, match);
      p.value.accuracy =
          agreement(manifest.task, p.record.payload, im.ground_truth, ReferenceKind::kGroundTruth, match);
    });
    for (auto& p : batch) {
      if (tensor.filled(p.model, p.key)) {
        throw ValidationError("'" + cfg.pred + "' line " + std::to_string(p.line) + ": duplicate prediction for " +
                              p.record.model_id + "@" + to_string(tensor.keys()[p.key]));
      }
      tensor.set(p.model, p.key, p.value);
    }
    batch.clear();
  };
  for_each_line([&](std::string_view text, std::size_t n) {
    auto r = prediction_from_line(text, n);
    if (!r.distortion) return;
    const auto image = check_record(r, n);
    const auto key = tensor.key_index({r.image_id, *r.distortion});
    if (!key) {
      throw ValidationError("'" + cfg.pred + "' line " + std::to_string(n) + ": cell " + to_string(*r.distortion) +
                            " is not in the manifest grid");
    }
    const auto model = *tensor.model_index(r.model_id);
    batch.push_back({std::move(r), image, model, *key, n, {}});
    if (batch.size() >= kScoreBatch) flush();
  });
  flush();
  tensor.require_dense();

  auto labels = mmos(tensor, weights, cfg.label_weights());
  auto inputs = manifest_inputs(manifest, cfg.manifest);
  inputs["models"] = cfg.models;
  inputs["pred"] = cfg.pred;
  const auto prov = provenance(cfg, inputs);
  fs::create_directories(cfg.out);
  write_file_atomic(cfg.out_path("agreements.csv"), agreements_to_text(tensor, &prov));
  write_file_atomic(cfg.report.empty() ? cfg.out_path("labels.csv") : fs::path(cfg.report),
                    label_table_to_text(labels, &prov));
  return {std::move(tensor), std::move(labels)};
}

// ---------------------------------------------------------------------------
// validate-labels

inline StabilityReport cmd_validate(const RunConfig& cfg) {
  cfg.validate();
  require_file(cfg.models, "--models");
  require_file(cfg.agreements, "--agreements");
  const auto registry = read_model_registry(cfg.models);
  const auto tensor = read_agreements(cfg.agreements, registry);
  auto report = validate_labels(tensor, registry, cfg.trials, cfg.split, cfg.seed, cfg.label_weights(),
                                resolve_threads(cfg.threads));
  json doc{{"provenance", provenance(cfg, {{"models", cfg.models}, {"agreements", cfg.agreements}})},
           {"stability", stability_to_json(report)}};
  write_file_atomic(cfg.report.empty() ? cfg.out_path("stability.json") : fs::path(cfg.report), doc.dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------------------
// evaluate

inline std::vector<LabelKind> label_kinds(std::string_view s) {
  if (s == "all") return {kAllLabelKinds.begin(), kAllLabelKinds.end()};
  return {parse_label_kind(s)};
}

inline std::vector<EvalReport> cmd_evaluate(const RunConfig& cfg) {
  cfg.validate();
  require_file(cfg.labels, "--labels");
  require_file(cfg.pred, "--pred");
  const auto labels = read_label_table(cfg.labels);
  const auto scores = read_score_table(cfg.pred);
  const auto threads = resolve_threads(cfg.threads);
  std::vector<EvalReport> reports;
  json docs = json::array();
  for (auto kind : label_kinds(cfg.label_kind)) {
    reports.push_back(evaluate(scores, labels, kind, threads));
    docs.push_back(report_to_json(reports.back()));
  }
  const auto prov = provenance(cfg, {{"labels", cfg.labels}, {"pred", cfg.pred}});
  json doc{{"provenance", prov}, {"reports", docs}};
  write_file_atomic(cfg.report.empty() ? cfg.out_path("report.json") : fs::path(cfg.report), doc.dump(2) + "\n");
  if (!cfg.table.empty()) write_file_atomic(cfg.table, "# provenance: " + prov.dump() + "\n" + report_table(reports));
  return reports;
}

}  // namespace miqa
