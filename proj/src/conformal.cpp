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

#include "tabuq/conformal.hpp"

#include <algorithm>
#include <cmath>

#include "tabuq/error.hpp"

namespace tabuq {

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kLac: return "lac";
    case ScoreKind::kAps: return "aps";
    case ScoreKind::kHss: return "hss";
    case ScoreKind::kOcrOnly: return "ocr";
    case ScoreKind::kTsrOnly: return "tsr";
  }
  return "aps";
}

ScoreKind parse_score_kind(std::string_view name) {
  for (auto k : {ScoreKind::kLac, ScoreKind::kAps, ScoreKind::kHss, ScoreKind::kOcrOnly,
                 ScoreKind::kTsrOnly}) {
    if (to_string(k) == name) return k;
  }
  throw InputError("unknown score function '" + std::string(name) + "'");
}

ScoreFunction ScoreFunction::make(ScoreKind kind) {
  if (kind == ScoreKind::kHss) return hss(HssWeights{});
  return ScoreFunction(kind, std::nullopt);
}

ScoreFunction ScoreFunction::hss(const HssWeights& w) {
  for (double v : {w.w_row, w.w_col, w.w_text}) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("HSS weights must lie in [0,1]");
  }
  return ScoreFunction(ScoreKind::kHss, w);
}

ConformalRecord to_record(const ExtractedCell& cell, std::optional<bool> correct) {
  return {cell.cell.location_confidence, cell.ocr_confidence, cell.cell.row_confidence,
          cell.cell.col_confidence, correct};
}

double score_lac(const ConformalRecord& r) {
  return 1.0 - std::min(r.tsr_confidence, r.ocr_confidence);
}

double score_aps(const ConformalRecord& r) {
  return 1.0 - 0.5 * (r.tsr_confidence + r.ocr_confidence);
}

double score_hss(const ConformalRecord& r, const HssWeights& w) {
  const double structural = std::sqrt((1.0 - w.w_row * (1.0 - r.row_confidence)) *
                                      (1.0 - w.w_col * (1.0 - r.col_confidence)));
  const double content = w.w_text * r.ocr_confidence;
  return 1.0 - std::sqrt(structural * content);
}

double score_single(const ConformalRecord& r, ScoreKind source) {
  switch (source) {
    case ScoreKind::kOcrOnly: return 1.0 - r.ocr_confidence;
    case ScoreKind::kTsrOnly: return 1.0 - r.tsr_confidence;
    default: throw InputError("score_single expects the ocr or tsr source");
  }
}

double score(const ScoreFunction& fn, const ConformalRecord& r) {
  switch (fn.kind()) {
    case ScoreKind::kLac: return score_lac(r);
    case ScoreKind::kAps: return score_aps(r);
    case ScoreKind::kHss: return score_hss(r, *fn.hss_weights());
    case ScoreKind::kOcrOnly:
    case ScoreKind::kTsrOnly: return score_single(r, fn.kind());
  }
  return score_aps(r);
}

std::size_t quantile_rank(std::size_t n, double alpha) {
  const double level = static_cast<double>(n + 1) * (1.0 - alpha);
  // 1e-9 slack before the ceiling.
  const double k = std::ceil(level - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 1, n);
}

double calibrate(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw DegenerateDataError("empty calibration set");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
  std::vector<double> work(scores.begin(), scores.end());
  const std::size_t k = quantile_rank(work.size(), alpha);
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k - 1), work.end());
  return work[k - 1];
}

std::vector<double> default_tau_grid() {
  std::vector<double> taus;
  taus.reserve(100);
  for (int k = 1; k <= 100; ++k) taus.push_back(k / 100.0);
  return taus;
}

SweepResult sweep_flag_threshold(std::span<const LabeledUncertainty> labeled,
                                 std::span<const double> taus) {
  if (taus.empty()) throw InputError("threshold sweep needs at least one tau");
  const auto incorrect = static_cast<std::size_t>(std::count_if(
      labeled.begin(), labeled.end(), [](const LabeledUncertainty& l) { return !l.correct; }));
  if (incorrect == 0) throw DegenerateDataError("degenerate tuning set");

  SweepResult result;
  result.points.reserve(taus.size());
  bool have_best = false;
  for (double tau : taus) {
    SweepPoint p;
    p.tau = tau;
    for (const auto& l : labeled) {
      if (!flag(l.uncertainty, tau)) continue;
      ++p.flagged;
      if (!l.correct) ++p.true_positive;
    }
    p.precision = p.flagged ? static_cast<double>(p.true_positive) / p.flagged : 0.0;
    p.recall = static_cast<double>(p.true_positive) / incorrect;
    const double denom = p.precision + p.recall;
    p.f1 = denom > 0.0 ? 2.0 * p.precision * p.recall / denom : 0.0;
    if (!have_best || p.f1 > result.best_f1 ||
        (p.f1 == result.best_f1 && tau < result.best_tau)) {
      result.best_tau = tau;
      result.best_f1 = p.f1;
      have_best = true;
    }
    result.points.push_back(p);
  }
  return result;
}

std::vector<double> weight_grid(double grid_step) {
  if (!(grid_step > 0.0 && grid_step < 1.0)) throw InputError("grid_step must lie in (0,1)");
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double w = i * grid_step;
    if (w >= 1.0 - 1e-12) break;
    grid.push_back(w);
  }
  grid.push_back(1.0);
  return grid;
}

HssTuneResult tune_hss_weights(std::span<const ConformalRecord> calib, double alpha,
                               double grid_step) {
  if (calib.empty()) throw DegenerateDataError("empty calibration set");
  std::size_t incorrect = 0;
  for (const auto& r : calib) {
    if (!r.correct) throw InputError("tune_hss_weights needs a correctness label on every record");
    if (!*r.correct) ++incorrect;
  }
  const auto grid = weight_grid(grid_step);
  const double n = static_cast<double>(calib.size());
  const double target_recall = 1.0 - alpha;

  std::optional<HssTuneResult> best_feasible;
  std::optional<HssTuneResult> best_recall;
  std::vector<double> scores(calib.size());

  // Lexicographic visiting order; strict comparisons keep the first of equals.
  for (double wr : grid) {
    for (double wc : grid) {
      for (double wt : grid) {
        const HssWeights w{wr, wc, wt};
        for (std::size_t i = 0; i < calib.size(); ++i) scores[i] = score_hss(calib[i], w);
        const double q_hat = calibrate(scores, alpha);
        std::size_t flagged = 0;
        std::size_t caught = 0;
        for (std::size_t i = 0; i < calib.size(); ++i) {
          if (!flag(uncertainty(scores[i], q_hat), 0.0)) continue;
          ++flagged;
          if (!*calib[i].correct) ++caught;
        }
        HssTuneResult cand;
        cand.weights = w;
        cand.flagged_fraction = flagged / n;
        cand.error_recall = incorrect ? static_cast<double>(caught) / incorrect : 1.0;
        cand.feasible = incorrect == 0 || cand.error_recall >= target_recall - 1e-12;

        if (cand.feasible &&
            (!best_feasible || cand.flagged_fraction < best_feasible->flagged_fraction)) {
          best_feasible = cand;
        }
        if (!best_recall || cand.error_recall > best_recall->error_recall) best_recall = cand;
      }
    }
  }

  if (best_feasible) return *best_feasible;
  HssTuneResult out = *best_recall;
  out.feasible = false;
  out.warning = "no weight triple reaches error recall " + std::to_string(target_recall) +
                "; returning the recall maximizer";
  return out;
}

}  // namespace tabuq
