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

#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabuq/alignment.hpp"

namespace tabuq {

inline constexpr double kDefaultAlpha = 0.1;
inline constexpr double kDefaultHssGridStep = 0.1;

enum class ScoreKind { kLac, kAps, kHss, kOcrOnly, kTsrOnly };

// CLI spellings: lac, aps, hss, ocr, tsr.
std::string_view to_string(ScoreKind kind);
ScoreKind parse_score_kind(std::string_view name);

struct HssWeights {
  double w_row = 1.0;
  double w_col = 1.0;
  double w_text = 1.0;

  auto operator<=>(const HssWeights&) const = default;
};

// hss_weights is set exactly when kind == kHss.
class ScoreFunction {
 public:
  static ScoreFunction make(ScoreKind kind);
  static ScoreFunction hss(const HssWeights& weights);

  ScoreKind kind() const { return kind_; }
  const std::optional<HssWeights>& hss_weights() const { return weights_; }

 private:
  ScoreFunction(ScoreKind kind, std::optional<HssWeights> weights)
      : kind_(kind), weights_(weights) {}

  ScoreKind kind_;
  std::optional<HssWeights> weights_;
};

struct ConformalRecord {
  double tsr_confidence = 0.0;
  double ocr_confidence = 0.0;
  double row_confidence = 0.0;
  double col_confidence = 0.0;
  std::optional<bool> correct;
};

ConformalRecord to_record(const ExtractedCell& cell, std::optional<bool> correct = std::nullopt);

struct CalibrationModel {
  ScoreFunction score_function = ScoreFunction::make(ScoreKind::kAps);
  double alpha = kDefaultAlpha;
  double q_hat = 0.0;
  double flag_threshold_tau = 0.0;
  std::size_t calibration_size = 0;
};

// Score functions. Each maps into [0,1] and is non-increasing in every confidence.
double score_lac(const ConformalRecord& r);
// 1 - (tsr + ocr) / 2, the normalized complement of the summed confidences.
double score_aps(const ConformalRecord& r);
double score_hss(const ConformalRecord& r, const HssWeights& w);
double score_single(const ConformalRecord& r, ScoreKind source);
double score(const ScoreFunction& fn, const ConformalRecord& r);

// 1-based rank ceil((n+1)(1-alpha)) clamped to n.
std::size_t quantile_rank(std::size_t n, double alpha);

/// Conformal threshold: the quantile_rank(n, alpha)-th smallest score.
/// Throws DegenerateDataError on an empty list and InputError when alpha is
/// outside (0,1).
double calibrate(std::span<const double> scores, double alpha);

inline double uncertainty(double score, double q_hat) {
  return score > q_hat ? score - q_hat : 0.0;
}

inline bool flag(double u, double tau) { return u > tau; }

struct LabeledUncertainty {
  double uncertainty = 0.0;
  bool correct = true;
};

struct SweepPoint {
  double tau = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t flagged = 0;
  std::size_t true_positive = 0;
};

struct SweepResult {
  double best_tau = 0.0;
  double best_f1 = 0.0;
  std::vector<SweepPoint> points;
};

// {0.01, 0.02, ..., 1.00}
std::vector<double> default_tau_grid();

/// Scores "flag ⇒ incorrect" at every tau and returns the F1 maximizer,
/// ties going to the smaller tau. Throws DegenerateDataError when no record
/// is incorrect.
SweepResult sweep_flag_threshold(std::span<const LabeledUncertainty> labeled,
                                 std::span<const double> taus);

struct HssTuneResult {
  HssWeights weights;
  bool feasible = true;
  double flagged_fraction = 0.0;
  double error_recall = 0.0;
  std::optional<std::string> warning;
};

std::vector<double> weight_grid(double grid_step);

/// Exhaustive search over weight_grid(grid_step)^3. For every triple the
/// records are scored, calibrated at alpha and flagged at tau = 0; the
/// triple with the smallest flagged fraction whose error recall reaches
/// 1 - alpha wins, ties in lexicographic weight order. With no feasible
/// triple, the recall maximizer is returned with a warning.
HssTuneResult tune_hss_weights(std::span<const ConformalRecord> calib, double alpha,
                               double grid_step = kDefaultHssGridStep);

}  // namespace tabuq
