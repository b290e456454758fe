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
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabuq/alignment.hpp"
#include "tabuq/geometry.hpp"

namespace tabuq {

inline constexpr double kGroundTruthMatchIoa = 0.5;

struct GroundTruthCell {
  BBox bbox;
  int start_row = 0;
  int start_col = 0;
  int end_row = 0;
  int end_col = 0;
  std::string text;
};

// UTF-8 to Unicode scalar values. Ill-formed sequences become U+FFFD.
std::u32string to_code_points(std::string_view utf8);

// NFC composition, runs of Unicode whitespace collapsed to one space, trimmed.
std::string normalize_text(std::string_view utf8);

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein_distance(std::string_view a, std::string_view b);

// 1 - distance / max(len a, len b), lengths in code points; 1.0 for two empty strings.
double levenshtein_accuracy(std::string_view extracted, std::string_view truth);

/// For each extracted cell, the index of the ground-truth cell covering the
/// largest share of the extracted cell's area, provided that share exceeds
/// 0.5. Exact ties go to the earlier ground-truth cell. Several extracted
/// cells may map to one spanning ground-truth cell.
std::vector<std::optional<std::size_t>> match_ground_truth(
    std::span<const ExtractedCell> cells, std::span<const GroundTruthCell> gt);

// Exact match after normalization, or Levenshtein accuracy at or above the
// threshold when the threshold is below 1. No ground truth means incorrect.
bool label_correct(const ExtractedCell& cell, const GroundTruthCell* gt,
                   double similarity_threshold = 1.0);

struct CellKey {
  std::string table_id;
  int row = 0;
  int col = 0;

  auto operator<=>(const CellKey&) const = default;
};

struct LabeledCell {
  CellKey key;
  ExtractedCell cell;
  bool correct = false;
};

struct ReportCounts {
  std::size_t total = 0;
  std::size_t flagged = 0;
  std::size_t incorrect = 0;
  std::size_t true_positive = 0;  // flagged and incorrect
  std::size_t corrected = 0;
  std::size_t remaining_incorrect = 0;

  bool operator==(const ReportCounts&) const = default;
};

struct EvaluationReport {
  double accuracy_before = 0.0;
  double error_rate_before = 0.0;
  double precision_uq = 0.0;
  double recall_uq = 0.0;
  double f1_uq = 0.0;
  double labor_savings = 0.0;
  double error_rate_after_hc = 0.0;
  ReportCounts counts;
  // Set when the corresponding denominator was zero and the rate reported as 0.
  bool precision_degenerate = false;
  bool recall_degenerate = false;
};

/// Before-UQ, after-UQ and after-correction metrics. A cell counts as fixed
/// when its key is in `corrected`; every other incorrect cell remains
/// incorrect. Throws DegenerateDataError on empty input.
EvaluationReport compute_report(std::span<const LabeledCell> labeled,
                                const std::set<CellKey>& corrected);

// Rebuilds the rates of a report from its counts (used to pool reports).
EvaluationReport report_from_counts(const ReportCounts& counts);

enum class ReviewStatus { kUntouched, kCorrected, kUnresolvable };

std::string_view to_string(ReviewStatus status);

struct CorrectionOutcome {
  ExtractedCell cell;
  ReviewStatus status = ReviewStatus::kUntouched;
};

// Stands in for a reviewer: flagged cells with a ground-truth match take the
// ground-truth text, flagged cells without one are marked unresolvable.
std::vector<CorrectionOutcome> emulate_human_correction(
    std::span<const ExtractedCell> cells, std::span<const GroundTruthCell* const> gt_matches);

}  // namespace tabuq
