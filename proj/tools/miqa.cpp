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

// miqa: command-line front end. Every flag can also be set through an
// environment variable named MIQA_<FLAG> (upper case, dashes as
// underscores); the command line wins.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "miqa/pipeline/commands.hpp"
#include "miqa/pipeline/synth_check.hpp"

namespace {

std::string env_name(std::string flag) {
  for (auto& c : flag) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return "MIQA_" + flag;
}

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& value, const std::string& help) {
  return app->add_option("--" + name, value, help)->envname(env_name(name))->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Machine-centric image quality assessment toolkit"};
  app.require_subcommand(1);
  miqa::RunConfig cfg;

  // Global flags live on every subcommand so they may follow it.
  auto add_globals = [&](CLI::App* sub) {
    flag(sub, "seed", cfg.seed, "Run seed");
    flag(sub, "threads", cfg.threads, "Worker threads (0 = all cores)");
    flag(sub, "out", cfg.out, "Output directory");
  };
  auto add_match = [&](CLI::App* sub) {
    flag(sub, "tau", cfg.tau, "IoU threshold for matching");
    flag(sub, "ref-conf", cfg.ref_conf, "Confidence floor for prediction references");
    flag(sub, "iou-mode", cfg.iou_mode, "single_tau or coco_range")
        ->check(CLI::IsMember({"single_tau", "coco_range"}));
  };
  auto add_lambda = [&](CLI::App* sub) {
    flag(sub, "lambda1", cfg.lambda1, "Consistency weight of the composite label (lambda2 = 1 - lambda1)")
        ->check(CLI::Range(0.0, 1.0));
  };

  auto* degrade = app.add_subcommand("degrade", "Render the degraded grid for every manifest image");
  add_globals(degrade);
  flag(degrade, "manifest", cfg.manifest, "Dataset manifest (JSON)")->required();

  auto* score = app.add_subcommand("score", "Score model predictions into MMOS labels");
  add_globals(score);
  add_match(score);
  add_lambda(score);
  flag(score, "manifest", cfg.manifest, "Dataset manifest (JSON)")->required();
  flag(score, "models", cfg.models, "Model registry (CSV)")->required();
  flag(score, "pred", cfg.pred, "Prediction records (JSONL)")->required();
  flag(score, "report", cfg.report, "Label table path (default <out>/labels.csv)");

  auto* validate = app.add_subcommand("validate-labels", "Cross-model label stability over random splits");
  add_globals(validate);
  add_lambda(validate);
  flag(validate, "models", cfg.models, "Model registry (CSV)")->required();
  flag(validate, "agreements", cfg.agreements, "Per-model agreement table written by score")->required();
  flag(validate, "trials", cfg.trials, "Number of random splits");
  flag(validate, "split", cfg.split, "Fraction of models in the first subset");
  flag(validate, "report", cfg.report, "Report path (default <out>/stability.json)");

  auto* characterize = app.add_subcommand("characterize", "PSNR/SSIM of every degraded cell");
  add_globals(characterize);
  flag(characterize, "manifest", cfg.manifest, "Dataset manifest (JSON)")->required();
  flag(characterize, "degraded", cfg.degraded, "Directory written by degrade (default: render in memory)");
  flag(characterize, "report", cfg.report, "Table path (default <out>/fidelity.csv)");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate predicted quality scores against labels");
  add_globals(evaluate);
  flag(evaluate, "labels", cfg.labels, "Label table (CSV)")->required();
  flag(evaluate, "pred", cfg.pred, "Predicted score table (CSV)")->required();
  flag(evaluate, "label-kind", cfg.label_kind, "consistency, accuracy, composite or all")
      ->check(CLI::IsMember({"consistency", "accuracy", "composite", "all"}));
  flag(evaluate, "report", cfg.report, "Report path (default <out>/report.json)");
  flag(evaluate, "table", cfg.table, "Optional flat CSV export");

  auto* synth = app.add_subcommand("synth-check", "End-to-end check against the synthetic ensemble");
  add_globals(synth);
  add_match(synth);
  add_lambda(synth);
  flag(synth, "trials", cfg.trials, "Splits for the stability check");
  flag(synth, "split", cfg.split, "Fraction of models in the first subset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (degrade->parsed()) {
      cfg.subcommand = "degrade";
      const auto s = miqa::cmd_degrade(cfg);
      std::cout << "wrote " << s.files << " degraded images and " << s.index.string() << "\n";
    } else if (score->parsed()) {
      cfg.subcommand = "score";
      const auto r = miqa::cmd_score(cfg);
      std::cout << "scored " << r.agreements.models().size() << " models over " << r.labels.size() << " cells\n";
    } else if (validate->parsed()) {
      cfg.subcommand = "validate-labels";
      const auto r = miqa::cmd_validate(cfg);
      std::cout << miqa::stability_to_json(r).dump(2) << "\n";
    } else if (characterize->parsed()) {
      cfg.subcommand = "characterize";
      const auto rows = miqa::cmd_characterize(cfg);
      std::cout << "characterized " << rows.size() << " cells\n";
    } else if (evaluate->parsed()) {
      cfg.subcommand = "evaluate";
      for (const auto& r : miqa::cmd_evaluate(cfg)) {
        std::cout << miqa::to_string(r.label_kind) << ": " << miqa::stratum_to_json(r.overall).dump() << "\n";
      }
    } else if (synth->parsed()) {
      cfg.subcommand = "synth-check";
      const auto r = miqa::cmd_synth_check(cfg, std::cout);
      return r.passed() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
