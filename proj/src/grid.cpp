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

#include "tabuq/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tabuq/error.hpp"

namespace tabuq {
namespace {

constexpr double kDuplicateOverlap = 0.8;

void validate(const std::vector<StructureDetection>& dets, const char* what) {
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto& d = dets[i];
    if (!d.bbox.valid()) {
      throw InputError(std::string(what) + "[" + std::to_string(i) + "].bbox is invalid: " +
                       to_string(d.bbox));
    }
    if (!std::isfinite(d.confidence) || d.confidence < 0.0 || d.confidence > 1.0) {
      throw InputError(std::string(what) + "[" + std::to_string(i) +
                       "].confidence must lie in [0,1]");
    }
  }
}

// Stable order: primary coordinate, then the other coordinate, then input position.
std::vector<std::size_t> sorted_order(const std::vector<StructureDetection>& dets, bool by_y) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ba = dets[a].bbox;
    const auto& bb = dets[b].bbox;
    const double pa = by_y ? ba.y0 : ba.x0;
    const double pb = by_y ? bb.y0 : bb.x0;
    if (pa != pb) return pa < pb;
    const double sa = by_y ? ba.x0 : ba.y0;
    const double sb = by_y ? bb.x0 : bb.y0;
    return sa < sb;
  });
  return order;
}

double overlap_of_smaller(const BBox& a, const BBox& b) {
  const auto inter = intersect(a, b);
  if (!inter) return 0.0;
  const double smaller = std::min(area(a), area(b));
  return smaller > 0.0 ? area(*inter) / smaller : 0.0;
}

void warn_duplicates(const std::vector<StructureDetection>& dets,
                     const std::vector<std::size_t>& order, const char* what,
                     std::vector<std::string>& warnings) {
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const double ov = overlap_of_smaller(dets[order[i]].bbox, dets[order[j]].bbox);
      if (ov > kDuplicateOverlap) {
        std::ostringstream os;
        os << what << ' ' << i << " and " << j << " overlap by " << ov;
        warnings.push_back(os.str());
      }
    }
  }
}

}  // namespace

GridResult build_grid(const std::vector<StructureDetection>& rows,
                      const std::vector<StructureDetection>& cols) {
  if (rows.empty() || cols.empty()) throw DegenerateDataError("no structure detected");
  validate(rows, "rows");
  validate(cols, "columns");

  GridResult result;
  const auto row_order = sorted_order(rows, /*by_y=*/true);
  const auto col_order = sorted_order(cols, /*by_y=*/false);
  warn_duplicates(rows, row_order, "rows", result.warnings);
  warn_duplicates(cols, col_order, "columns", result.warnings);

  result.cells.reserve(rows.size() * cols.size());
  for (std::size_t r = 0; r < row_order.size(); ++r) {
    const auto& row = rows[row_order[r]];
    for (std::size_t c = 0; c < col_order.size(); ++c) {
      const auto& col = cols[col_order[c]];
      const auto box = intersect(row.bbox, col.bbox);
      if (!box) {
        result.warnings.push_back("row " + std::to_string(r) + " and column " +
                                  std::to_string(c) + " do not intersect; no cell emitted");
        continue;
      }
      GridCell cell;
      cell.row_index = static_cast<int>(r);
      cell.col_index = static_cast<int>(c);
      cell.bbox = *box;
      cell.row_confidence = row.confidence;
      cell.col_confidence = col.confidence;
      cell.location_confidence = 0.5 * (row.confidence + col.confidence);
      result.cells.push_back(cell);
    }
  }
  return result;
}

Structures normalize_structures(const std::vector<StructureDetection>& rows,
                                const std::vector<StructureDetection>& cols,
                                const ImageDims& tsr_dims, const ImageDims& ocr_dims) {
  if (!tsr_dims.valid() || !ocr_dims.valid()) {
    throw InputError("image dimensions must be positive");
  }
  Structures out{rows, cols};
  for (auto* dets : {&out.rows, &out.cols}) {
    for (auto& d : *dets) d.bbox = scale_bbox(d.bbox, tsr_dims, ocr_dims);
  }
  return out;
}

}  // namespace tabuq
