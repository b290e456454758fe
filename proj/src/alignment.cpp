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

#include "tabuq/alignment.hpp"

#include <algorithm>
#include <numeric>

#include "tabuq/error.hpp"

namespace tabuq {
namespace {

double median_height(const std::vector<OcrSpan>& spans) {
  std::vector<double> h;
  h.reserve(spans.size());
  for (const auto& s : spans) h.push_back(s.bbox.height());
  std::sort(h.begin(), h.end());
  const std::size_t n = h.size();
  return n % 2 == 1 ? h[n / 2] : 0.5 * (h[n / 2 - 1] + h[n / 2]);
}

// True when a should win an exact IoA tie against b.
bool prefer_on_tie(const GridCell& a, const GridCell& b) {
  const double aa = area(a.bbox);
  const double ab = area(b.bbox);
  if (aa != ab) return aa < ab;
  if (a.row_index != b.row_index) return a.row_index < b.row_index;
  return a.col_index < b.col_index;
}

}  // namespace

std::vector<OcrSpan> reading_order(std::vector<OcrSpan> spans) {
  if (spans.size() < 2) return spans;
  const double band = median_height(spans);

  std::stable_sort(spans.begin(), spans.end(), [](const OcrSpan& a, const OcrSpan& b) {
    return a.bbox.center_y() < b.bbox.center_y();
  });

  // Greedy line grouping anchored on the first span of each line.
  std::vector<std::size_t> line_of(spans.size());
  std::size_t line = 0;
  double anchor = spans.front().bbox.center_y();
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].bbox.center_y() - anchor > 0.5 * band) {
      ++line;
      anchor = spans[i].bbox.center_y();
    }
    line_of[i] = line;
  }

  std::vector<std::size_t> order(spans.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (line_of[a] != line_of[b]) return line_of[a] < line_of[b];
    return spans[a].bbox.x0 < spans[b].bbox.x0;
  });

  std::vector<OcrSpan> out;
  out.reserve(spans.size());
  for (std::size_t i : order) out.push_back(std::move(spans[i]));
  return out;
}

AlignmentResult match_spans(const std::vector<GridCell>& cells,
                            const std::vector<OcrSpan>& spans, double ioa_threshold) {
  if (!(ioa_threshold > 0.0 && ioa_threshold <= 1.0)) {
    throw InputError("ioa_threshold must lie in (0,1]");
  }

  AlignmentResult result;
  result.assignment.resize(spans.size());
  std::vector<std::vector<OcrSpan>> per_cell(cells.size());

  for (std::size_t s = 0; s < spans.size(); ++s) {
    std::optional<std::size_t> best;
    double best_ioa = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double ioa = intersection_over_area(spans[s].bbox, cells[c].bbox);
      if (!(ioa > ioa_threshold)) continue;
      if (!best || ioa > best_ioa ||
          (ioa == best_ioa && prefer_on_tie(cells[c], cells[*best]))) {
        best = c;
        best_ioa = ioa;
      }
    }
    result.assignment[s] = best;
    if (best) {
      per_cell[*best].push_back(spans[s]);
    } else {
      result.unmatched.push_back(spans[s]);
    }
  }

  result.cells.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    ExtractedCell out;
    out.cell = cells[c];
    const auto ordered = reading_order(std::move(per_cell[c]));
    out.matched_span_count = static_cast<int>(ordered.size());
    if (!ordered.empty()) {
      std::vector<BBox> boxes;
      double conf_sum = 0.0;
      for (const auto& span : ordered) {
        if (&span != &ordered.front()) out.text += ' ';
        out.text += span.text;
        conf_sum += span.confidence;
        boxes.push_back(span.bbox);
      }
      out.ocr_confidence = conf_sum / static_cast<double>(ordered.size());
      out.text_bbox = merge_bboxes(boxes);
    }
    result.cells.push_back(std::move(out));
  }
  return result;
}

}  // namespace tabuq
