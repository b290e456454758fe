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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tabuq/alignment.hpp"
#include "tabuq/conformal.hpp"
#include "tabuq/evaluation.hpp"
#include "tabuq/io.hpp"

namespace tabuq {

inline constexpr double kDefaultTau = 0.03;
inline constexpr double kDefaultCalibFraction = 0.5;

struct RunConfig {
  ScoreKind score_kind = ScoreKind::kAps;
  double alpha = kDefaultAlpha;
  // nullopt: tune tau on the calibration split.
  std::optional<double> tau = kDefaultTau;
  double ioa_threshold = kDefaultIoaThreshold;
  double similarity_threshold = 1.0;
  double calib_fraction = kDefaultCalibFraction;
  std::uint64_t seed = 0;
  // nullopt: grid-search the weights on the calibration split (HSS only).
  std::optional<HssWeights> hss_weights;
  double hss_grid_step = kDefaultHssGridStep;
  bool per_domain_calibration = false;

  // Throws InputError on an out-of-range field.
  void validate() const;
};

Json to_json(const RunConfig& cfg);

struct ExtractedTable {
  std::string table_id;
  std::string domain;
  ImageDims image;
  std::vector<ExtractedCell> cells;
  std::vector<OcrSpan> unmatched;
  std::vector<std::string> warnings;
};

/// Calibration output: the model plus everything needed to reproduce and
/// audit it.
struct CalibrationArtifact {
  CalibrationModel model;
  std::map<std::string, double> q_hat_by_domain;  // filled with per-domain calibration
  std::vector<CellKey> calibration_cells;         // sorted
  RunConfig config;
  std::optional<SweepResult> tau_sweep;
  std::optional<HssTuneResult> hss_tune;

  double q_hat_for(const std::string& domain) const;
};

Json to_json(const CalibrationArtifact& artifact);
CalibrationArtifact calibration_from_json(const Json& j);

// Grid -> alignment for one table, no scoring. Pure.
ExtractedTable extract_table(const std::string& table_id, const std::string& domain,
                             const TsrInput& tsr, const OcrInput& ocr, double ioa_threshold);

// Fills score, and when a model is given, uncertainty and flag.
void score_cells(ExtractedTable& table, const ScoreFunction& fn,
                 const CalibrationArtifact* model = nullptr);

/// Reads the job's TSR and OCR files and extracts the table. Scores with the
/// model's score function when a model is supplied, else with cfg's (HSS
/// without fixed weights falls back to unit weights).
ExtractedTable run_extract(const TableJob& job, const RunConfig& cfg,
                           const CalibrationArtifact* model = nullptr);

Json cells_artifact(const ExtractedTable& table, const ScoreFunction& fn,
                    std::optional<double> q_hat);

/// Seeded per-domain split: within each domain (sorted by name) the cell keys
/// are sorted, shuffled and the first round(fraction * count) are taken.
std::vector<CellKey> calibration_split(const std::vector<ExtractedTable>& tables,
                                       double fraction, std::uint64_t seed);

/// Pools every job's cells, draws the calibration split, tunes HSS weights
/// and tau when cfg asks for it (labels come from ground truth), and computes
/// q_hat. Throws DegenerateDataError when the split is empty.
CalibrationArtifact run_calibrate(const std::vector<TableJob>& jobs, const RunConfig& cfg);

// Same as run_calibrate on already extracted tables; ground truth is needed
// only when tau or HSS weights are tuned.
CalibrationArtifact calibrate_tables(
    std::vector<ExtractedTable> tables,
    const std::map<std::string, std::vector<GroundTruthCell>>& ground_truth,
    const RunConfig& cfg);

struct EvaluatedCell {
  ExtractedCell cell;  // as extracted, with score/uncertainty/flag
  bool calibration = false;
  std::optional<std::string> gt_text;
  bool correct = false;
  ReviewStatus status = ReviewStatus::kUntouched;
  std::string text_after;  // text after emulated correction
  bool correct_after = false;
};

struct EvaluatedTable {
  std::string table_id;
  std::string domain;
  std::optional<std::filesystem::path> image_ref;
  std::vector<EvaluatedCell> cells;
  std::optional<EvaluationReport> report;  // absent when no held-out cells
};

struct EvaluationOutput {
  std::vector<EvaluatedTable> tables;
  std::map<std::string, EvaluationReport> domains;
  EvaluationReport all;
};

/// Scores every table with the model, then on the held-out (non-calibration)
/// cells labels correctness, emulates correction of flagged cells and
/// reports per table, per domain and pooled. Throws InputError listing
/// tables without ground truth.
EvaluationOutput run_evaluate(const std::vector<TableJob>& jobs,
                              const CalibrationArtifact& model, const RunConfig& cfg);

EvaluationOutput evaluate_tables(
    std::vector<ExtractedTable> tables,
    const std::map<std::string, std::vector<GroundTruthCell>>& ground_truth,
    const CalibrationArtifact& model, double similarity_threshold);

Json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const Json& j);

Json report_artifact(const EvaluationOutput& out, const CalibrationArtifact& model,
                     const RunConfig& cfg);
Json evaluated_cells_artifact(const EvaluatedTable& table);

// Writes report.json, state.json and cells/<table_id>.json under out_dir;
// the layout serve_review reads.
void write_evaluation(const std::filesystem::path& out_dir, const EvaluationOutput& out,
                      const CalibrationArtifact& model, const RunConfig& cfg);

struct ScoreFunctionTuning {
  ScoreKind kind;
  double q_hat = 0.0;
  SweepResult sweep;
};

struct TuneOutput {
  std::vector<ScoreFunctionTuning> functions;
  ScoreKind best = ScoreKind::kAps;
};

/// Threshold sweep per score function on the calibration split; the function
/// with the highest best-F1 wins (ties keep the earlier function in `kinds`).
TuneOutput run_tune(const std::vector<TableJob>& jobs, const RunConfig& cfg,
                    const std::vector<ScoreKind>& kinds, const std::vector<double>& taus);

TuneOutput tune_tables(const std::vector<ExtractedTable>& tables,
                       const std::map<std::string, std::vector<GroundTruthCell>>& ground_truth,
                       const RunConfig& cfg, const std::vector<ScoreKind>& kinds,
                       const std::vector<double>& taus);

Json to_json(const TuneOutput& out);
Json to_json(const SweepResult& sweep);

// Loads the ground truth of every job; throws InputError naming jobs without it.
std::map<std::string, std::vector<GroundTruthCell>> load_ground_truth(
    const std::vector<TableJob>& jobs);

}  // namespace tabuq
