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

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tabuq/geometry.hpp"
#include "tabuq/grid.hpp"

namespace tabuq {

inline constexpr double kDefaultIoaThreshold = 0.5;

struct OcrSpan {
  BBox bbox;
  std::string text;
  double confidence = 0.0;
};

struct ExtractedCell {
  GridCell cell;
  std::string text;
  double ocr_confidence = 0.0;
  int matched_span_count = 0;
  // Envelope of the matched span boxes; empty when nothing matched.
  std::optional<BBox> text_bbox;
  std::optional<double> score;
  std::optional<double> uncertainty;
  bool flagged = false;
};

struct AlignmentResult {
  std::vector<ExtractedCell> cells;  // same order as the input cells
  std::vector<OcrSpan> unmatched;
  // For every input span, the index of the cell it was assigned to.
  std::vector<std::optional<std::size_t>> assignment;
};

/// Assigns each span to the cell with the largest intersection-over-span-area
/// among cells where that ratio exceeds ioa_threshold. Exact ties go to the
/// smaller cell, then the lower (row, col). Matched texts are joined with one
/// space in reading order and their confidences averaged; a cell without
/// matches keeps empty text and confidence 0.
AlignmentResult match_spans(const std::vector<GridCell>& cells,
                            const std::vector<OcrSpan>& spans,
                            double ioa_threshold = kDefaultIoaThreshold);

/// Groups spans into text lines by vertical center (band height is the median
/// span height) and orders lines top to bottom, spans left to right.
std::vector<OcrSpan> reading_order(std::vector<OcrSpan> spans);

}  // namespace tabuq
