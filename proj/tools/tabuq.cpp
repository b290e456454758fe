// Copyright 2026 The tabuq Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// tabuq: uncertainty-aware table extraction from TSR and OCR detections.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "tabuq/error.hpp"
#include "tabuq/io.hpp"
#include "tabuq/pipeline.hpp"
#include "tabuq/review.hpp"

namespace {

using namespace tabuq;

constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;

struct Flags {
  std::string score_fn = "aps";
  double alpha = kDefaultAlpha;
  std::string tau = "0.03";
  double ioa_threshold = kDefaultIoaThreshold;
  double calib_fraction = kDefaultCalibFraction;
  double similarity_threshold = 1.0;
  std::uint64_t seed = 0;
  std::string hss_weights = "auto";
  double hss_grid_step = kDefaultHssGridStep;
  bool per_domain = false;
  std::string out_dir = "out";
};

std::vector<double> parse_triple(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InputError("--hss-weights expects 'auto' or three comma-separated numbers");
    }
  }
  if (v.size() != 3) throw InputError("--hss-weights expects 'auto' or three comma-separated numbers");
  return v;
}

RunConfig to_config(const Flags& f) {
  RunConfig cfg;
  cfg.score_kind = parse_score_kind(f.score_fn);
  cfg.alpha = f.alpha;
  if (f.tau == "auto") {
    cfg.tau.reset();
  } else {
    try {
      cfg.tau = std::stod(f.tau);
    } catch (const std::exception&) {
      throw InputError("--tau expects a number or 'auto'");
    }
  }
  cfg.ioa_threshold = f.ioa_threshold;
  cfg.calib_fraction = f.calib_fraction;
  cfg.similarity_threshold = f.similarity_threshold;
  cfg.seed = f.seed;
  if (f.hss_weights != "auto") {
    const auto w = parse_triple(f.hss_weights);
    cfg.hss_weights = HssWeights{w[0], w[1], w[2]};
  }
  cfg.hss_grid_step = f.hss_grid_step;
  cfg.per_domain_calibration = f.per_domain;
  cfg.validate();
  return cfg;
}

CLI::Option* add_tau(CLI::App* cmd, Flags& f) {
  return cmd->add_option("--tau", f.tau, "flag threshold on the uncertainty score, or 'auto'");
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--score-fn", f.score_fn, "score function")
      ->check(CLI::IsMember({"aps", "lac", "hss", "ocr", "tsr"}));
  cmd->add_option("--alpha", f.alpha, "conformal error rate in (0,1)");
  cmd->add_option("--ioa-threshold", f.ioa_threshold, "span-to-cell IoA threshold");
  cmd->add_option("--calib-fraction", f.calib_fraction, "share of cells used for calibration");
  cmd->add_option("--similarity-threshold", f.similarity_threshold,
                  "Levenshtein accuracy counted as correct (1 = exact match)");
  cmd->add_option("--seed", f.seed, "calibration split seed");
  cmd->add_option("--hss-weights", f.hss_weights, "'auto' or w_row,w_col,w_text");
  cmd->add_option("--hss-grid-step", f.hss_grid_step, "HSS weight grid step");
  cmd->add_flag("--per-domain-calibration", f.per_domain, "one q_hat per domain");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
}

std::vector<TableJob> jobs_from(const std::string& manifest, const std::string& tsr,
                                const std::string& ocr, const std::string& table_id,
                                const std::string& domain, const std::string& gt) {
  if (!manifest.empty()) return load_manifest(manifest);
  if (tsr.empty() || ocr.empty()) throw InputError("give --jobs or both --tsr and --ocr");
  TableJob job;
  job.table_id = table_id;
  job.domain = domain;
  job.tsr_input = tsr;
  job.ocr_input = ocr;
  if (!gt.empty()) job.gt_input = gt;
  return {job};
}

void print_report(const char* label, const EvaluationReport& r) {
  std::printf("%-20s cells=%-5zu acc=%.3f err=%.3f P=%.3f R=%.3f F1=%.3f savings=%.3f err_after=%.3f\n",
              label, r.counts.total, r.accuracy_before, r.error_rate_before, r.precision_uq,
              r.recall_uq, r.f1_uq, r.labor_savings, r.error_rate_after_hc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabuq: uncertainty-aware table data extraction"};
  app.require_subcommand(1);
  Flags f;

  std::string manifest, tsr, ocr, gt, table_id = "table", domain = "default", model_path;
  std::string state_dir = "out", bind = "127.0.0.1:8080";

  auto* extract = app.add_subcommand("extract", "build grid cells, align OCR spans, score cells");
  add_common(extract, f);
  add_tau(extract, f);
  extract->add_option("--jobs", manifest, "table manifest");
  extract->add_option("--tsr", tsr, "TSR detections of a single table");
  extract->add_option("--ocr", ocr, "OCR spans of a single table");
  extract->add_option("--table-id", table_id, "table id for --tsr/--ocr");
  extract->add_option("--domain", domain, "domain for --tsr/--ocr");
  extract->add_option("--model", model_path, "calibration model; adds uncertainty and flags");

  auto* calibrate = app.add_subcommand("calibrate", "compute q_hat (and tune tau / HSS weights)");
  add_common(calibrate, f);
  add_tau(calibrate, f);
  calibrate->add_option("--jobs", manifest, "table manifest")->required();

  auto* evaluate = app.add_subcommand("evaluate", "before-UQ / after-UQ / after-correction metrics");
  add_common(evaluate, f);
  auto* eval_tau = add_tau(evaluate, f);
  evaluate->add_option("--jobs", manifest, "table manifest")->required();
  evaluate->add_option("--model", model_path, "calibration model")->required();

  std::vector<std::string> tune_fns;
  auto* tune = app.add_subcommand("tune", "sweep tau for each score function and pick by F1");
  add_common(tune, f);
  tune->add_option("--jobs", manifest, "table manifest")->required();
  tune->add_option("--functions", tune_fns, "score functions to compare (default: all)")
      ->check(CLI::IsMember({"aps", "lac", "hss", "ocr", "tsr"}));

  auto* serve = app.add_subcommand("serve", "serve the review API over an evaluate output directory");
  serve->add_option("--state-dir", state_dir, "directory written by evaluate");
  serve->add_option("--bind", bind, "host:port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    const std::filesystem::path out_dir = f.out_dir;
    if (*serve) {
      std::printf("serving %s on http://%s%s\n", state_dir.c_str(), bind.c_str(), kApiPrefix);
      std::fflush(stdout);
      serve_review(state_dir, bind);
      return 0;
    }

    const RunConfig cfg = to_config(f);

    if (*extract) {
      std::optional<CalibrationArtifact> model;
      if (!model_path.empty()) model = calibration_from_json(read_json_file(model_path));
      for (const auto& job : jobs_from(manifest, tsr, ocr, table_id, domain, gt)) {
        const auto table = run_extract(job, cfg, model ? &*model : nullptr);
        std::optional<double> q_hat;
        ScoreFunction fn = ScoreFunction::make(cfg.score_kind);
        if (model) {
          fn = model->model.score_function;
          q_hat = model->q_hat_for(table.domain);
        } else if (cfg.score_kind == ScoreKind::kHss) {
          fn = ScoreFunction::hss(cfg.hss_weights.value_or(HssWeights{}));
        }
        const auto path = out_dir / "cells" / (table.table_id + ".json");
        write_json_file(path, cells_artifact(table, fn, q_hat));
        for (const auto& w : table.warnings) std::fprintf(stderr, "%s: %s\n", table.table_id.c_str(), w.c_str());
        std::printf("%s: %zu cells, %zu unmatched spans -> %s\n", table.table_id.c_str(),
                    table.cells.size(), table.unmatched.size(), path.c_str());
      }
      return 0;
    }

    if (*calibrate) {
      const auto artifact = run_calibrate(load_manifest(manifest), cfg);
      write_json_file(out_dir / "model.json", to_json(artifact));
      std::printf("score_fn=%s alpha=%g q_hat=%.6f tau=%g calibration_size=%zu\n",
                  std::string(to_string(artifact.model.score_function.kind())).c_str(),
                  artifact.model.alpha, artifact.model.q_hat, artifact.model.flag_threshold_tau,
                  artifact.model.calibration_size);
      if (artifact.hss_tune && artifact.hss_tune->warning) {
        std::fprintf(stderr, "warning: %s\n", artifact.hss_tune->warning->c_str());
      }
      return 0;
    }

    if (*evaluate) {
      auto model = calibration_from_json(read_json_file(model_path));
      if (eval_tau->count() > 0) {
        if (!cfg.tau) throw InputError("evaluate needs a numeric --tau; tune it with calibrate");
        model.model.flag_threshold_tau = *cfg.tau;
      }
      const auto out = run_evaluate(load_manifest(manifest), model, cfg);
      write_evaluation(out_dir, out, model, cfg);
      for (const auto& [d, r] : out.domains) print_report(d.c_str(), r);
      print_report("ALL", out.all);
      return 0;
    }

    if (*tune) {
      std::vector<ScoreKind> kinds;
      for (const auto& s : tune_fns) kinds.push_back(parse_score_kind(s));
      if (kinds.empty()) {
        kinds = {ScoreKind::kAps, ScoreKind::kHss, ScoreKind::kLac, ScoreKind::kOcrOnly,
                 ScoreKind::kTsrOnly};
      }
      const auto out = run_tune(load_manifest(manifest), cfg, kinds, default_tau_grid());
      write_json_file(out_dir / "tune.json", to_json(out));
      for (const auto& fn : out.functions) {
        std::printf("%-4s q_hat=%.4f best_tau=%.2f best_f1=%.4f\n",
                    std::string(to_string(fn.kind)).c_str(), fn.q_hat, fn.sweep.best_tau,
                    fn.sweep.best_f1);
      }
      std::printf("best score function: %s\n", std::string(to_string(out.best)).c_str());
      return 0;
    }
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const DegenerateDataError& e) {
    std::fprintf(stderr, "degenerate data: %s\n", e.what());
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
