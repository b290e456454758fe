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

#include "tabuq/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tabuq/error.hpp"

namespace tabuq {

bool BBox::valid() const {
  for (double v : {x0, y0, x1, y1}) {
    if (!std::isfinite(v) || v < 0.0) return false;
  }
  return x0 <= x1 && y0 <= y1;
}

bool ImageDims::valid() const {
  return std::isfinite(width) && std::isfinite(height) && width > 0.0 && height > 0.0;
}

std::string to_string(const BBox& box) {
  std::ostringstream os;
  os << '[' << box.x0 << ',' << box.y0 << ',' << box.x1 << ',' << box.y1 << ']';
  return os.str();
}

double area(const BBox& box) { return box.width() * box.height(); }

std::optional<BBox> intersect(const BBox& a, const BBox& b) {
  BBox out{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
           std::min(a.y1, b.y1)};
  if (out.x1 <= out.x0 || out.y1 <= out.y0) return std::nullopt;
  return out;
}

double intersection_over_area(const BBox& span, const BBox& cell) {
  const double span_area = area(span);
  if (!(span_area > 0.0)) {
    throw InputError("degenerate OCR span box " + to_string(span) + " has zero area");
  }
  const auto overlap = intersect(span, cell);
  if (!overlap) return 0.0;
  return std::min(1.0, area(*overlap) / span_area);
}

BBox scale_bbox(const BBox& box, const ImageDims& from, const ImageDims& to) {
  const double sx = to.width / from.width;
  const double sy = to.height / from.height;
  return {box.x0 * sx, box.y0 * sy, box.x1 * sx, box.y1 * sy};
}

BBox merge_bboxes(std::span<const BBox> boxes) {
  if (boxes.empty()) throw InputError("merge_bboxes: empty box list");
  BBox out = boxes.front();
  for (const auto& b : boxes.subspan(1)) {
    out.x0 = std::min(out.x0, b.x0);
    out.y0 = std::min(out.y0, b.y0);
    out.x1 = std::max(out.x1, b.x1);
    out.y1 = std::max(out.y1, b.y1);
  }
  return out;
}

}  // namespace tabuq
