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

#include <optional>
#include <span>
#include <string>

namespace tabuq {

/// Axis-aligned rectangle in image pixels. Origin top-left, y grows down.
struct BBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }

  // Finite, non-negative, and x0 <= x1, y0 <= y1.
  bool valid() const;

  bool contains(const BBox& other) const {
    return x0 <= other.x0 && y0 <= other.y0 && other.x1 <= x1 && other.y1 <= y1;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ImageDims {
  double width = 0.0;
  double height = 0.0;

  bool valid() const;
};

std::string to_string(const BBox& box);

double area(const BBox& box);

// Overlap rectangle, or nullopt when the overlap has zero area
// (edge-touching boxes do not intersect).
std::optional<BBox> intersect(const BBox& a, const BBox& b);

// area(a ∩ b) / area(span). The denominator is always the first argument.
// Throws InputError when span has zero area.
double intersection_over_area(const BBox& span, const BBox& cell);

// Rescales x by to.width / from.width and y by to.height / from.height.
BBox scale_bbox(const BBox& box, const ImageDims& from, const ImageDims& to);

// Envelope of all boxes. Throws InputError on an empty list.
BBox merge_bboxes(std::span<const BBox> boxes);

}  // namespace tabuq
