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

#include <string>
#include <vector>

#include "tabuq/geometry.hpp"

namespace tabuq {

enum class StructureKind { kRow, kColumn };

struct StructureDetection {
  StructureKind kind = StructureKind::kRow;
  BBox bbox;
  double confidence = 0.0;
};

struct GridCell {
  int row_index = 0;
  int col_index = 0;
  BBox bbox;
  double row_confidence = 0.0;
  double col_confidence = 0.0;
  // Mean of row_confidence and col_confidence.
  double location_confidence = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::vector<std::string> warnings;
};

/// Intersects every row with every column.
///
/// Rows are indexed by ascending y0 (ties by x0, then input order) and columns
/// by ascending x0 (ties by y0, then input order). Pairs whose boxes do not
/// overlap produce no cell and a warning. Same-kind detections overlapping by
/// more than 80% of the smaller box are kept but reported. Cells come back in
/// row-major index order.
///
/// Throws DegenerateDataError when rows or cols is empty, InputError on an
/// invalid detection.
GridResult build_grid(const std::vector<StructureDetection>& rows,
                      const std::vector<StructureDetection>& cols);

struct Structures {
  std::vector<StructureDetection> rows;
  std::vector<StructureDetection> cols;
};

// Maps structure boxes from the TSR image frame into the OCR image frame.
Structures normalize_structures(const std::vector<StructureDetection>& rows,
                                const std::vector<StructureDetection>& cols,
                                const ImageDims& tsr_dims, const ImageDims& ocr_dims);

}  // namespace tabuq
