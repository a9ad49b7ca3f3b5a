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

// File formats:
//   manifest        single JSON document
//   predictions     JSON lines, one PredictionRecord per line
//   model registry  CSV  model_id,task,benchmark_perf
//   label table     CSV  image_id,distortion_type,roi_level,bg_level,consistency,accuracy,composite
//   score table     CSV  image_id,distortion_type,roi_level,bg_level,score
// CSV files may begin with '#' comment lines (provenance); they are skipped on read.

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "miqa/core/fs.hpp"
#include "miqa/core/png_io.hpp"
#include "miqa/core/rle.hpp"
#include "miqa/core/types.hpp"

namespace miqa {

using json = nlohmann::json;

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("bad number '" + std::string(s) + "' for " + std::string(what));
  }
  return v;
}

inline int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("bad integer '" + std::string(s) + "' for " + std::string(what));
  }
  return v;
}

// ---------------------------------------------------------------------------
// JSON payloads

inline void check_confidence(double c, std::string_view where) {
  if (!(c >= 0.0 && c <= 1.0)) {
    throw ValidationError(std::string(where) + ": confidence " + format_double(c) + " outside [0,1]");
  }
}

inline json rle_to_json(const RunLengthMask& m) {
  return json{{"width", m.width}, {"height", m.height}, {"counts", m.counts}};
}

inline RunLengthMask rle_from_json(const json& j) {
  RunLengthMask m;
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  m.counts = j.at("counts").get<std::vector<std::uint32_t>>();
  check_rle(m);
  return m;
}

inline json bbox_to_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

inline BBox bbox_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("bbox must be [x, y, w, h]");
  BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!(b.w > 0 && b.h > 0)) throw ValidationError("bbox width and height must be positive");
  return b;
}

inline json payload_to_json(const Payload& p) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ClassPrediction>) {
          return {{"kind", "classification"}, {"label", v.label}, {"confidence", v.confidence}};
        } else if constexpr (std::is_same_v<T, DetectionSet>) {
          json items = json::array();
          for (const auto& d : v.items) {
            items.push_back({{"bbox", bbox_to_json(d.bbox)}, {"category", d.category}, {"confidence", d.confidence}});
          }
          return {{"kind", "detection"}, {"items", std::move(items)}};
        } else {
          json items = json::array();
          for (const auto& d : v.items) {
            items.push_back({{"mask", rle_to_json(d.mask)}, {"category", d.category}, {"confidence", d.confidence}});
          }
          return {{"kind", "segmentation"}, {"items", std::move(items)}};
        }
      },
      p);
}

inline Payload payload_from_json(const json& j) {
  const TaskKind kind = parse_task_kind(j.at("kind").get<std::string>());
  switch (kind) {
    case TaskKind::kClassification: {
      ClassPrediction c{j.at("label").get<CategoryId>(), j.value("confidence", 1.0)};
      check_confidence(c.confidence, "classification");
      return c;
    }
    case TaskKind::kDetection: {
      DetectionSet s;
      for (const auto& it : j.at("items")) {
        Detection d{bbox_from_json(it.at("bbox")), it.at("category").get<CategoryId>(), it.value("confidence", 1.0)};
        check_confidence(d.confidence, "detection");
        s.items.push_back(d);
      }
      return s;
    }
    case TaskKind::kSegmentation: {
      InstanceSet s;
      for (const auto& it : j.at("items")) {
        Instance d{rle_from_json(it.at("mask")), it.at("category").get<CategoryId>(), it.value("confidence", 1.0)};
        check_confidence(d.confidence, "segmentation");
        s.items.push_back(std::move(d));
      }
      return s;
    }
  }
  throw ParseError("unreachable payload kind");
}

inline json spec_to_json(const DistortionSpec& s) {
  return {{"type", std::string(to_string(s.type))}, {"roi_level", s.roi_level}, {"bg_level", s.bg_level}};
}

inline DistortionSpec spec_from_json(const json& j) {
  return DistortionSpec(parse_distortion_type(j.at("type").get<std::string>()), j.at("roi_level").get<int>(),
                        j.at("bg_level").get<int>());
}

// ---------------------------------------------------------------------------
// Prediction records (JSON lines)

inline json prediction_to_json(const PredictionRecord& r) {
  return {{"model_id", r.model_id},
          {"image_id", r.image_id},
          {"distortion", r.distortion ? spec_to_json(*r.distortion) : json("pristine")},
          {"payload", payload_to_json(r.payload)}};
}

inline PredictionRecord prediction_from_json(const json& j) {
  PredictionRecord r;
  r.model_id = j.at("model_id").get<std::string>();
  r.image_id = j.at("image_id").get<std::string>();
  const auto& d = j.at("distortion");
  if (d.is_string()) {
    if (d.get<std::string>() != "pristine") throw ParseError("distortion must be an object or \"pristine\"");
  } else {
    r.distortion = spec_from_json(d);
  }
  r.payload = payload_from_json(j.at("payload"));
  return r;
}

inline std::string prediction_to_line(const PredictionRecord& r) { return prediction_to_json(r).dump(); }

inline PredictionRecord prediction_from_line(std::string_view line, std::size_t line_no) {
  try {
    return prediction_from_json(json::parse(line));
  } catch (const json::exception& e) {
    throw ParseError("prediction line " + std::to_string(line_no) + ": " + e.what());
  } catch (const Error& e) {
    throw ParseError("prediction line " + std::to_string(line_no) + ": " + e.what());
  }
}

// Streams records to `sink` one line at a time; blank lines are skipped.
inline void for_each_prediction(std::istream& in, const std::function<void(PredictionRecord&&)>& sink) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    sink(prediction_from_line(line, n));
  }
}

inline std::vector<PredictionRecord> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<PredictionRecord> out;
  for_each_prediction(in, [&](PredictionRecord&& r) { out.push_back(std::move(r)); });
  return out;
}

inline std::string predictions_to_text(std::span<const PredictionRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += prediction_to_line(r);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

inline void check_ground_truth(const ManifestImage& im, TaskKind task) {
  if (payload_task(im.ground_truth) != task) {
    throw ValidationError("image '" + im.image_id + "': ground truth kind does not match task " +
                          std::string(to_string(task)));
  }
  if (const auto* inst = std::get_if<InstanceSet>(&im.ground_truth)) {
    for (const auto& it : inst->items) {
      if (it.mask.width != im.width || it.mask.height != im.height) {
        throw ValidationError("image '" + im.image_id + "': ground-truth mask dimensions differ from image");
      }
    }
  }
}

inline json ground_truth_to_json(const Payload& p) {
  json j = payload_to_json(p);
  if (std::holds_alternative<ClassPrediction>(p)) return j.at("label");
  for (auto& it : j.at("items")) it.erase("confidence");
  return j.at("items");
}

inline Payload ground_truth_from_json(const json& j, TaskKind task) {
  if (task == TaskKind::kClassification) return ClassPrediction{j.get<CategoryId>(), 1.0};
  return payload_from_json(json{{"kind", std::string(to_string(task))}, {"items", j}});
}

inline json manifest_to_json(const DatasetManifest& m) {
  json images = json::array();
  for (const auto& im : m.images) {
    images.push_back({{"image_id", im.image_id},
                      {"image_path", im.image_path},
                      {"mask_path", im.mask_path},
                      {"ground_truth", ground_truth_to_json(im.ground_truth)}});
  }
  json grid = json::array();
  for (auto c : m.grid) grid.push_back({c.roi_level, c.bg_level});
  json types = json::array();
  for (auto t : m.types) types.push_back(std::string(to_string(t)));
  return {{"task", std::string(to_string(m.task))}, {"types", types}, {"grid", grid}, {"images", images}};
}

// Parses and validates a manifest. Image and mask paths resolve relative to
// `base_dir`; both files must exist and share dimensions.
inline DatasetManifest manifest_from_json(const json& j, const fs::path& base_dir) {
  DatasetManifest m;
  m.base_dir = base_dir.string();
  try {
    m.task = parse_task_kind(j.at("task").get<std::string>());
    if (j.contains("types")) {
      m.types.clear();
      for (const auto& t : j.at("types")) m.types.push_back(parse_distortion_type(t.get<std::string>()));
    }
    if (j.contains("grid")) {
      m.grid.clear();
      for (const auto& c : j.at("grid")) {
        SeverityCell cell{c.at(0).get<int>(), c.at(1).get<int>()};
        check_level(cell.roi_level);
        check_level(cell.bg_level);
        m.grid.push_back(cell);
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (std::set<SeverityCell>(m.grid.begin(), m.grid.end()).size() != m.grid.size()) {
    throw ValidationError("manifest grid contains duplicate cells");
  }
  if (std::set<DistortionType>(m.types.begin(), m.types.end()).size() != m.types.size()) {
    throw ValidationError("manifest types contain duplicates");
  }
  std::set<std::string> seen;
  std::size_t idx = 0;
  for (const auto& ji : j.at("images")) {
    ManifestImage im;
    try {
      im.image_id = ji.at("image_id").get<std::string>();
      im.image_path = ji.at("image_path").get<std::string>();
      im.mask_path = ji.at("mask_path").get<std::string>();
      im.ground_truth = ground_truth_from_json(ji.at("ground_truth"), m.task);
    } catch (const json::exception& e) {
      throw ParseError("manifest image #" + std::to_string(idx) + ": " + e.what());
    }
    ++idx;
    if (im.image_id.empty() || im.image_id.find_first_of(",\n/\\") != std::string::npos) {
      throw ValidationError("image_id '" + im.image_id + "' is empty or contains ',', '/', '\\' or newline");
    }
    if (!seen.insert(im.image_id).second) {
      throw ValidationError("duplicate image_id '" + im.image_id + "'");
    }
    const fs::path ip = base_dir / im.image_path;
    const fs::path mp = base_dir / im.mask_path;
    if (!fs::exists(ip)) throw ValidationError("image '" + im.image_id + "': missing image file " + ip.string());
    if (!fs::exists(mp)) throw ValidationError("image '" + im.image_id + "': missing mask file " + mp.string());
    auto [iw, ih] = png_dimensions(ip);
    auto [mw, mh] = png_dimensions(mp);
    if (iw != mw || ih != mh) {
      throw ValidationError("image '" + im.image_id + "': mask is " + std::to_string(mw) + "x" + std::to_string(mh) +
                            " but image is " + std::to_string(iw) + "x" + std::to_string(ih));
    }
    im.width = iw;
    im.height = ih;
    check_ground_truth(im, m.task);
    m.images.push_back(std::move(im));
  }
  return m;
}

inline DatasetManifest load_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file_text(path));
  } catch (const json::exception& e) {
    throw ParseError("manifest '" + path.string() + "': " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

inline void save_manifest(const fs::path& path, const DatasetManifest& m) {
  write_file_atomic(path, manifest_to_json(m).dump(2) + "\n");
}

inline fs::path resolve(const DatasetManifest& m, const std::string& rel) { return fs::path(m.base_dir) / rel; }

// ---------------------------------------------------------------------------
// CSV tables

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Calls `row` for each data line after checking the header matches.
inline void read_csv(const fs::path& path, std::string_view header,
                     const std::function<void(const std::vector<std::string_view>&, std::size_t)>& row) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t n = 0;
  bool saw_header = false;
  const std::size_t width = split_csv(header).size();
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != header) {
        throw ParseError("'" + path.string() + "': expected header '" + std::string(header) + "', got '" + line + "'");
      }
      saw_header = true;
      continue;
    }
    auto fields = split_csv(line);
    if (fields.size() != width) {
      throw ParseError("'" + path.string() + "' line " + std::to_string(n) + ": expected " + std::to_string(width) +
                       " fields");
    }
    row(fields, n);
  }
  if (!saw_header) throw ParseError("'" + path.string() + "': missing header");
}

inline std::string comment_block(const json* provenance) {
  if (!provenance) return {};
  return "# provenance: " + provenance->dump() + "\n";
}

}  // namespace detail

inline constexpr std::string_view kRegistryHeader = "model_id,task,benchmark_perf";
inline constexpr std::string_view kLabelHeader =
    "image_id,distortion_type,roi_level,bg_level,consistency,accuracy,composite";
inline constexpr std::string_view kScoreHeader = "image_id,distortion_type,roi_level,bg_level,score";

inline std::vector<ModelRecord> read_model_registry(const fs::path& path) {
  std::vector<ModelRecord> out;
  detail::read_csv(path, kRegistryHeader, [&](const auto& f, std::size_t) {
    ModelRecord m{std::string(f[0]), parse_task_kind(f[1]), parse_double(f[2], "benchmark_perf")};
    if (!(m.benchmark_perf > 0)) throw ValidationError("model '" + m.model_id + "': benchmark_perf must be > 0");
    out.push_back(std::move(m));
  });
  return out;
}

inline std::string model_registry_to_text(std::span<const ModelRecord> models) {
  std::string out(kRegistryHeader);
  out += '\n';
  for (const auto& m : models) {
    out += m.model_id + "," + std::string(to_string(m.task)) + "," + format_double(m.benchmark_perf) + "\n";
  }
  return out;
}

inline CellKey parse_cell_key(const std::vector<std::string_view>& f) {
  return CellKey{std::string(f[0]), DistortionSpec(parse_distortion_type(f[1]), parse_int(f[2], "roi_level"),
                                                    parse_int(f[3], "bg_level"))};
}

inline std::string cell_key_fields(const CellKey& k) {
  return k.image_id + "," + std::string(to_string(k.spec.type)) + "," + std::to_string(k.spec.roi_level) + "," +
         std::to_string(k.spec.bg_level);
}

using LabelTable = std::map<CellKey, QualityLabel>;
using ScoreTable = std::map<CellKey, double>;

inline std::string label_table_to_text(const LabelTable& labels, const json* provenance = nullptr) {
  std::string out = detail::comment_block(provenance);
  out += kLabelHeader;
  out += '\n';
  for (const auto& [k, q] : labels) {
    out += cell_key_fields(k) + "," + format_double(q.consistency) + "," + format_double(q.accuracy) + "," +
           format_double(q.composite) + "\n";
  }
  return out;
}

inline LabelTable read_label_table(const fs::path& path) {
  LabelTable out;
  detail::read_csv(path, kLabelHeader, [&](const auto& f, std::size_t line) {
    QualityLabel q{parse_double(f[4], "consistency"), parse_double(f[5], "accuracy"),
                   parse_double(f[6], "composite")};
    if (!out.emplace(parse_cell_key(f), q).second) {
      throw ValidationError("'" + path.string() + "' line " + std::to_string(line) + ": duplicate key");
    }
  });
  return out;
}

inline std::string score_table_to_text(const ScoreTable& scores, const json* provenance = nullptr) {
  std::string out = detail::comment_block(provenance);
  out += kScoreHeader;
  out += '\n';
  for (const auto& [k, s] : scores) out += cell_key_fields(k) + "," + format_double(s) + "\n";
  return out;
}

inline ScoreTable read_score_table(const fs::path& path) {
  ScoreTable out;
  detail::read_csv(path, kScoreHeader, [&](const auto& f, std::size_t line) {
    if (!out.emplace(parse_cell_key(f), parse_double(f[4], "score")).second) {
      throw ValidationError("'" + path.string() + "' line " + std::to_string(line) + ": duplicate key");
    }
  });
  return out;
}

}  // namespace miqa
