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

#include "tabuq/evaluation.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <numeric>

#include "tabuq/error.hpp"

namespace tabuq {

std::u32string to_code_points(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

std::string normalize_text(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  const auto source =
      icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  const icu::UnicodeString composed = nfc->normalize(source, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalization failed");

  std::string utf8_out;
  composed.toUTF8String(utf8_out);

  std::string out;
  out.reserve(utf8_out.size());
  bool pending_space = false;
  const auto* s = reinterpret_cast<const uint8_t*>(utf8_out.data());
  const auto length = static_cast<int32_t>(utf8_out.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c >= 0 && u_isUWhiteSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.append(utf8_out, static_cast<std::size_t>(start), static_cast<std::size_t>(i - start));
  }
  return out;
}

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Single rolling row over the shorter string.
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
  return levenshtein_distance(to_code_points(a), to_code_points(b));
}

double levenshtein_accuracy(std::string_view extracted, std::string_view truth) {
  const auto a = to_code_points(extracted);
  const auto b = to_code_points(truth);
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein_distance(a, b)) / static_cast<double>(longest);
}

std::vector<std::optional<std::size_t>> match_ground_truth(
    std::span<const ExtractedCell> cells, std::span<const GroundTruthCell> gt) {
  std::vector<std::optional<std::size_t>> out(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    double best = kGroundTruthMatchIoa;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double ioa = intersection_over_area(cells[c].cell.bbox, gt[g].bbox);
      if (ioa > best) {
        best = ioa;
        out[c] = g;
      }
    }
  }
  return out;
}

bool label_correct(const ExtractedCell& cell, const GroundTruthCell* gt,
                   double similarity_threshold) {
  if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0)) {
    throw InputError("similarity_threshold must lie in [0,1]");
  }
  if (gt == nullptr) return false;
  const std::string extracted = normalize_text(cell.text);
  const std::string truth = normalize_text(gt->text);
  if (extracted == truth) return true;
  return similarity_threshold < 1.0 &&
         levenshtein_accuracy(extracted, truth) >= similarity_threshold;
}

EvaluationReport report_from_counts(const ReportCounts& c) {
  if (c.total == 0) throw DegenerateDataError("cannot report on zero cells");
  const double n = static_cast<double>(c.total);
  EvaluationReport r;
  r.counts = c;
  r.error_rate_before = static_cast<double>(c.incorrect) / n;
  r.accuracy_before = static_cast<double>(c.total - c.incorrect) / n;
  r.precision_degenerate = c.flagged == 0;
  r.recall_degenerate = c.incorrect == 0;
  r.precision_uq = c.flagged ? static_cast<double>(c.true_positive) / c.flagged : 0.0;
  r.recall_uq = c.incorrect ? static_cast<double>(c.true_positive) / c.incorrect : 0.0;
  const double pr = r.precision_uq + r.recall_uq;
  r.f1_uq = pr > 0.0 ? 2.0 * r.precision_uq * r.recall_uq / pr : 0.0;
  r.labor_savings = static_cast<double>(c.total - c.flagged) / n;
  r.error_rate_after_hc = static_cast<double>(c.remaining_incorrect) / n;
  return r;
}

EvaluationReport compute_report(std::span<const LabeledCell> labeled,
                                const std::set<CellKey>& corrected) {
  if (labeled.empty()) throw DegenerateDataError("cannot report on zero cells");
  ReportCounts c;
  for (const auto& l : labeled) {
    ++c.total;
    const bool fixed = corrected.count(l.key) > 0;
    if (l.cell.flagged) ++c.flagged;
    if (fixed) ++c.corrected;
    if (l.correct) continue;
    ++c.incorrect;
    if (l.cell.flagged) ++c.true_positive;
    if (!fixed) ++c.remaining_incorrect;
  }
  return report_from_counts(c);
}

std::string_view to_string(ReviewStatus status) {
  switch (status) {
    case ReviewStatus::kUntouched: return "untouched";
    case ReviewStatus::kCorrected: return "corrected";
    case ReviewStatus::kUnresolvable: return "unresolvable";
  }
  return "untouched";
}

std::vector<CorrectionOutcome> emulate_human_correction(
    std::span<const ExtractedCell> cells, std::span<const GroundTruthCell* const> gt_matches) {
  if (cells.size() != gt_matches.size()) {
    throw InputError("emulate_human_correction: one ground-truth slot per cell required");
  }
  std::vector<CorrectionOutcome> out;
  out.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CorrectionOutcome o{cells[i], ReviewStatus::kUntouched};
    if (cells[i].flagged) {
      if (gt_matches[i] != nullptr) {
        o.cell.text = gt_matches[i]->text;
        o.status = ReviewStatus::kCorrected;
      } else {
        o.status = ReviewStatus::kUnresolvable;
      }
    }
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace tabuq
