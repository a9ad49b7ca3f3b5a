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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Stages that correspond to CLI
// subcommands are run through the built `miqa` binary.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "miqa/agreement.hpp"
#include "miqa/core/fs.hpp"
#include "miqa/core/png_io.hpp"
#include "miqa/degradation/grid.hpp"
#include "miqa/evaluation/logistic.hpp"
#include "miqa/evaluation/report.hpp"
#include "miqa/fidelity.hpp"
#include "miqa/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using namespace miqa;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs the CLI and captures stdout; returns the exit status.
int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = std::string(MIQA_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::string text;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) text.append(buf, n);
  const int status = pclose(pipe);
  if (out) *out = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

constexpr int kImageSize = 256;
constexpr std::uint64_t kSeed = 2026;

struct Corpus {
  fs::path manifest;
  std::vector<std::string> ids;
  std::vector<ImageBuffer> images;
};

Corpus make_corpus(const fs::path& dir) {
  Corpus c;
  fs::create_directories(dir);
  json images = json::array();
  for (int v = 0; v < 3; ++v) {
    const std::string id = "test" + std::to_string(v);
    c.ids.push_back(id);
    c.images.push_back(synth::make_test_image(kImageSize, kImageSize, v));
    write_png(dir / (id + ".png"), c.images.back());
    write_png(dir / (id + "_mask.png"), synth::make_ellipse_mask(kImageSize, kImageSize));
    images.push_back({{"image_id", id}, {"image_path", id + ".png"}, {"mask_path", id + "_mask.png"}, {"ground_truth", v}});
  }
  c.manifest = dir / "manifest.json";
  write_file_atomic(c.manifest, json{{"task", "classification"}, {"images", images}}.dump(2));
  return c;
}

// The severity table written out literally.
std::set<std::pair<int, int>> table_cells() {
  std::set<std::pair<int, int>> s;
  for (int l = 1; l <= 5; ++l) s.insert({l, l});
  for (auto c : {std::pair{2, 1}, {3, 1}, {4, 1}, {5, 1}, {3, 2}, {4, 2}, {5, 2}, {4, 3}, {5, 3}, {5, 4}}) {
    s.insert(c);
    s.insert({c.second, c.first});
  }
  return s;
}

struct Context {
  testing_util::TempDir dir{"acceptance"};
  Corpus corpus;
  fs::path run_a, run_b, run_threads;
  double degrade_seconds = 0;
  int degrade_status = -1;
  fs::path synth_out;
  int synth_status = -1;
  double synth_seconds = 0;
  std::string synth_log;
};

std::string degrade_args(const Context& c, const fs::path& out, int threads) {
  return "degrade --manifest " + c.corpus.manifest.string() + " --seed " + std::to_string(kSeed) + " --threads " +
         std::to_string(threads) + " --out " + out.string();
}

Outcome grid_structure(Context& c) {
  c.run_a = c.dir / "run_a";
  const auto t0 = Clock::now();
  c.degrade_status = run_cli(degrade_args(c, c.run_a, 1));
  c.degrade_seconds = seconds_since(t0);
  if (c.degrade_status != 0) return {false, "degrade exited with " + std::to_string(c.degrade_status)};

  std::map<std::pair<std::string, std::string>, std::set<std::pair<int, int>>> cells;
  std::size_t rows = 0;
  std::istringstream index(read_file_text(c.run_a / "grid_index.csv"));
  std::string line;
  bool header = false;
  while (std::getline(index, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string part; std::getline(ss, part, ',');) f.push_back(part);
    if (!fs::exists(c.run_a / f[4])) return {false, "index lists missing file " + f[4]};
    cells[{f[0], f[1]}].insert({std::stoi(f[2]), std::stoi(f[3])});
    ++rows;
  }
  std::size_t pngs = 0;
  for (const auto& e : fs::directory_iterator(c.run_a)) pngs += e.path().extension() == ".png";
  const auto expected = table_cells();
  bool shape = cells.size() == 30;
  for (const auto& [k, s] : cells) shape = shape && s == expected;
  std::ostringstream d;
  d << pngs << " files, " << rows << " index rows, " << cells.size() << " (image,type) groups of 25, "
    << c.degrade_seconds << " s";
  return {shape && rows == 750 && pngs == 750 && expected.size() == 25 && c.degrade_seconds < 60.0, d.str()};
}

Outcome compositing_identity(Context& c) {
  if (c.degrade_status != 0) return {false, "degrade did not run"};
  int checks = 0, equal = 0;
  for (std::size_t i = 0; i < c.corpus.ids.size(); ++i) {
    const auto seed = image_seed(kSeed, c.corpus.ids[i]);
    for (auto t : kAllDistortionTypes) {
      for (int l = 1; l <= 5; ++l) {
        const auto name = c.corpus.ids[i] + "__" + std::string(to_string(t)) + "__" + std::to_string(l) + "_" +
                          std::to_string(l) + ".png";
        ++checks;
        equal += read_png(c.run_a / name) == apply_distortion(c.corpus.images[i], t, l, seed);
      }
    }
  }
  return {checks == 150 && equal == 150, std::to_string(equal) + "/" + std::to_string(checks) + " byte-equal"};
}

Outcome determinism(Context& c) {
  if (c.degrade_status != 0) return {false, "degrade did not run"};
  c.run_b = c.dir / "run_b";
  c.run_threads = c.dir / "run_threads";
  const int sb = run_cli(degrade_args(c, c.run_b, 1));
  const int st = run_cli(degrade_args(c, c.run_threads, 4));
  if (sb != 0 || st != 0) return {false, "repeat runs failed"};
  const auto ha = directory_hash(c.run_a), hb = directory_hash(c.run_b), ht = directory_hash(c.run_threads);
  return {ha == hb && ha == ht, "hash " + ha + " (repeat " + hb + ", 4 threads " + ht + ")"};
}

Outcome monotonicity(Context& c) {
  int psnr_violations = 0, ssim_failures = 0;
  std::string worst;
  for (auto t : kAllDistortionTypes) {
    std::array<std::vector<double>, 5> ssims;
    for (std::size_t i = 0; i < c.corpus.images.size(); ++i) {
      const auto& img = c.corpus.images[i];
      const auto seed = image_seed(kSeed, c.corpus.ids[i]);
      double prev = kPsnrCap;
      for (int l = 1; l <= 5; ++l) {
        const auto out = apply_distortion(img, t, l, seed);
        const double p = psnr(img, out);
        if (p > prev + 0.5) {
          ++psnr_violations;
          worst = std::string(to_string(t)) + " level " + std::to_string(l);
        }
        prev = p;
        ssims[l - 1].push_back(ssim(img, out));
      }
    }
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      return v[v.size() / 2];
    };
    if (!(median(ssims[4]) < median(ssims[0]))) {
      ++ssim_failures;
      worst = std::string(to_string(t)) + " ssim";
    }
  }
  std::string d = std::to_string(psnr_violations) + " PSNR violations, " + std::to_string(ssim_failures) +
                  " SSIM median failures over 10 operators x 3 images";
  if (!worst.empty()) d += " (last: " + worst + ")";
  return {psnr_violations == 0 && ssim_failures == 0, d};
}

Outcome matching_oracle(Context&) {
  std::mt19937 rng(5150);
  int mismatches = 0;
  double worst = 0;
  const MatchConfig cfg;
  for (int t = 0; t < 1000; ++t) {
    const auto rd = oracle::random_detections(rng);
    const auto pd = t % 2 ? oracle::jitter(rd, rng) : oracle::random_detections(rng);
    if (t % 4 < 2) {
      const auto op = oracle::items(pd, oracle::kCanvas, oracle::kCanvas);
      const auto orf = oracle::items(rd, oracle::kCanvas, oracle::kCanvas);
      const auto m = greedy_match(pd, rd, cfg);
      const auto o = oracle::greedy(op, orf, cfg.tau);
      const double d = std::abs(map_score(pd, rd, cfg) - oracle::map(op, orf, {cfg.tau}));
      worst = std::max(worst, d);
      mismatches += m.pairs != o.pairs || std::abs(m.precision - o.precision) > 1e-12 ||
                    std::abs(m.recall - o.recall) > 1e-12 || d > 1e-12;
    } else {
      const auto ri = oracle::to_instances(rd, rng), pi = oracle::to_instances(pd, rng);
      const auto op = oracle::items(pi), orf = oracle::items(ri);
      const auto m = greedy_match(pi, ri, cfg);
      const auto o = oracle::greedy(op, orf, cfg.tau);
      const double d = std::abs(map_score(pi, ri, cfg) - oracle::map(op, orf, {cfg.tau}));
      worst = std::max(worst, d);
      mismatches += m.pairs != o.pairs || std::abs(m.precision - o.precision) > 1e-12 ||
                    std::abs(m.recall - o.recall) > 1e-12 || d > 1e-12;
    }
  }
  DetectionSet refs{{{{0, 0, 4, 4}, 1, 1.0}, {{8, 8, 4, 4}, 1, 1.0}}};
  DetectionSet preds{{{{0, 0, 4, 4}, 1, 0.9}, {{0, 12, 2, 2}, 1, 0.8}, {{8, 8, 4, 4}, 1, 0.7}}};
  const double ap = average_precision<Detection>(preds.items, refs.items, 1, 0.5);
  std::ostringstream d;
  d << mismatches << "/1000 mismatches, max |dAP| " << worst << ", worked example AP == 5/6: "
    << (ap == 5.0 / 6.0 ? "yes" : "no");
  return {mismatches == 0 && ap == 5.0 / 6.0, d.str()};
}

Outcome correlation_oracles(Context&) {
  std::mt19937 rng(808);
  int mismatches = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<double> a(n), b(n);
    std::uniform_int_distribution<int> few(0, t % 2 ? 3 : 1000000);
    std::uniform_int_distribution<int> fewer(0, t % 3 ? 2 : 1000000);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = few(rng);
      b[i] = fewer(rng);
    }
    auto same = [](Correlation x, std::optional<double> y) {
      return x.has_value() == y.has_value() && (!x || std::abs(*x - *y) <= 1e-12);
    };
    mismatches += !same(srcc(a, b), oracle::spearman(a, b)) || !same(plcc(a, b), oracle::pearson(a, b)) ||
                  !same(krcc(a, b), oracle::kendall(a, b)) || std::abs(rmse(a, b) - oracle::rmse(a, b)) > 1e-12;
  }
  const auto k = krcc(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2});
  const bool exact = k && *k == 1.0 / 3.0;
  return {mismatches == 0 && exact, std::to_string(mismatches) + "/500 mismatches, KRCC([1,2,3],[1,3,2]) == 1/3: " +
                                        (exact ? "yes" : "no")};
}

Outcome logistic_properties(Context&) {
  std::mt19937 rng(31337);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0, 1);
  int regressions = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 5 + rng() % 100;
    std::vector<double> q(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = g(rng);
      y[i] = std::sin(q[i] * (1 + t % 3)) + 0.2 * g(rng);
    }
    const auto fit = fit_logistic(q, y);
    regressions += fit.sse > fit.initial_sse;
  }
  double planted_worst = 0;
  for (int t = 0; t < 20; ++t) {
    const LogisticParams p{{0.3 + u(rng), 2 + 12 * u(rng), 0.2 + 0.6 * u(rng), 0.3 * u(rng) - 0.15, u(rng)}};
    std::vector<double> q(200), y(200);
    for (int i = 0; i < 200; ++i) {
      q[i] = u(rng);
      y[i] = p(q[i]);
    }
    planted_worst = std::max(planted_worst, rmse(apply_logistic(fit_logistic(q, y).params, q), y));
  }
  std::vector<double> q(200), y(200);
  for (int i = 0; i < 200; ++i) {
    q[i] = g(rng);
    y[i] = -0.4 * q[i] + 1.7;
  }
  const double linear = rmse(apply_logistic(fit_logistic(q, y).params, q), y);
  std::ostringstream d;
  d << regressions << "/200 SSE regressions, planted RMSE max " << planted_worst << ", linear RMSE " << linear;
  return {regressions == 0 && planted_worst <= 1e-6 && linear <= 1e-8, d.str()};
}

Outcome synthetic_oracle(Context& c) {
  c.synth_out = c.dir / "synth";
  const auto t0 = Clock::now();
  c.synth_status = run_cli("synth-check --threads 1 --out " + c.synth_out.string(), &c.synth_log);
  c.synth_seconds = seconds_since(t0);
  double delta = std::numeric_limits<double>::infinity();
  const auto pos = c.synth_log.find("oracle-delta: ");
  if (pos != std::string::npos) delta = std::stod(c.synth_log.substr(pos + 14));

  bool stable = true;
  int reports = 0;
  for (auto task : {"classification", "detection", "segmentation"}) {
    const auto path = c.synth_out / task / "homogeneous" / "stability.json";
    if (!fs::exists(path)) {
      stable = false;
      continue;
    }
    const auto doc = json::parse(read_file_text(path));
    for (const auto& [kind, m] : doc["stability"]["labels"].items()) {
      ++reports;
      stable = stable && !m["srcc"]["mean"].is_null() && m["srcc"]["mean"].get<double>() == 1.0 &&
               m["plcc"]["mean"].get<double>() == 1.0 && m["rmse"]["mean"].get<double>() == 0.0;
    }
  }
  std::ostringstream d;
  d << "exit " << c.synth_status << ", oracle-delta " << delta << ", homogeneous SRCC=PLCC=1/RMSE=0 in " << reports
    << "/9 label reports: " << (stable ? "yes" : "no") << ", " << c.synth_seconds << " s";
  return {c.synth_status == 0 && delta <= 1e-12 && stable && reports == 9 && c.synth_seconds < 30.0, d.str()};
}

Outcome label_invariants(Context& c) {
  if (c.synth_status < 0) return {false, "synth-check did not run"};
  std::size_t labels = 0, violations = 0, singleton_mismatch = 0;
  for (auto task : {"classification", "detection", "segmentation"}) {
    for (auto ens : {"ensemble", "singleton", "homogeneous"}) {
      const auto table = read_label_table(c.synth_out / task / ens / "labels.csv");
      for (const auto& [k, q] : table) {
        ++labels;
        const bool ok = q.consistency >= 0 && q.consistency <= 1 && q.accuracy >= 0 && q.accuracy <= 1 &&
                        q.composite >= std::min(q.consistency, q.accuracy) &&
                        q.composite <= std::max(q.consistency, q.accuracy);
        violations += !ok;
      }
    }
    const auto dir = c.synth_out / task / "singleton";
    const auto registry = read_model_registry(dir / "models.csv");
    const auto table = read_label_table(dir / "labels.csv");
    std::istringstream in(read_file_text(dir / "agreements.csv"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("model_id", 0) == 0) continue;
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string part; std::getline(ss, part, ',');) f.push_back(part);
      const CellKey key{f[1], DistortionSpec(parse_distortion_type(f[2]), std::stoi(f[3]), std::stoi(f[4]))};
      const auto& q = table.at(key);
      singleton_mismatch += q.consistency != std::stod(f[5]) || q.accuracy != std::stod(f[6]);
    }
    if (registry.size() != 1) ++singleton_mismatch;
  }
  std::ostringstream d;
  d << labels << " labels checked, " << violations << " range/convexity violations, " << singleton_mismatch
    << " singleton mismatches";
  return {labels == 6750 && violations == 0 && singleton_mismatch == 0, d.str()};
}

Outcome evaluation_shape(Context& c) {
  if (c.synth_status < 0) return {false, "synth-check did not run"};
  std::set<std::tuple<std::string, std::string, std::string>> expected;
  for (auto t : kAllDistortionTypes) {
    for (auto cell : table_cells()) {
      const std::string region = cell.first == cell.second ? "UD" : cell.first > cell.second ? "ROI-DD" : "BG-DD";
      expected.insert({region, std::string(to_string(t)), std::to_string(cell.first) + "_" + std::to_string(cell.second)});
    }
  }
  std::size_t reports = 0;
  bool ok = true;
  for (auto task : {"classification", "detection", "segmentation"}) {
    const auto doc = json::parse(read_file_text(c.synth_out / task / "ensemble" / "report.json"));
    std::set<std::string> kinds;
    for (const auto& r : doc["reports"]) {
      ++reports;
      kinds.insert(r["label_kind"].get<std::string>());
      std::set<std::tuple<std::string, std::string, std::string>> got;
      std::size_t total = 0;
      for (const auto& s : r["strata"]) {
        ok = ok && s["label"] == r["label_kind"];
        got.insert({s["region"].get<std::string>(), s["type"].get<std::string>(), s["cell"].get<std::string>()});
        total += s["n"].get<std::size_t>();
      }
      const std::size_t n = r["overall"]["n"].get<std::size_t>();
      ok = ok && got == expected && total == n && r["strata"].size() == expected.size();
      for (auto axis : {"region", "type", "cell"}) {
        std::size_t t = 0;
        for (const auto& [k, s] : r["breakdowns"][axis].items()) t += s["n"].get<std::size_t>();
        ok = ok && t == n;
      }
    }
    ok = ok && kinds == std::set<std::string>{"consistency", "accuracy", "composite"};
  }
  std::ostringstream d;
  d << reports << " reports, strata axes label x {UD,ROI-DD,BG-DD} x 10 types x 25 cells, counts partition: "
    << (ok ? "yes" : "no");
  return {ok && reports == 9, d.str()};
}

}  // namespace

int main() {
  Context ctx;
  ctx.corpus = make_corpus(ctx.dir / "corpus");
  const std::vector<std::pair<std::string, std::function<Outcome(Context&)>>> criteria = {
      {"grid structure (25 cells/type, 250/image, <60 s for 3 images)", grid_structure},
      {"compositing identity (UD cell == whole-image distortion)", compositing_identity},
      {"determinism (same seed; 1 vs 4 threads)", determinism},
      {"severity monotonicity (PSNR slack 0.5 dB; median SSIM)", monotonicity},
      {"matching/AP oracle equivalence", matching_oracle},
      {"correlation oracles", correlation_oracles},
      {"logistic fit properties", logistic_properties},
      {"end-to-end synthetic oracle", synthetic_oracle},
      {"label-space invariants", label_invariants},
      {"evaluation protocol shape", evaluation_shape},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (i + 1) << ": " << criteria[i].first << " -- "
              << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
