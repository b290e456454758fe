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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "tabuq/geometry.hpp"
#include "tabuq/random.hpp"

namespace tabuq::testing {

inline const std::filesystem::path kFixtures = TABUQ_FIXTURES_DIR;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("tabuq_" + tag + "_" + std::to_string(rng() % 1000000000));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Box with corners on a 1/steps grid inside [0, extent].
inline BBox random_grid_box(Rng& rng, int extent, int steps) {
  const auto n = static_cast<std::uint64_t>(extent * steps);
  auto a = uniform_index(rng, n + 1), b = uniform_index(rng, n + 1);
  auto c = uniform_index(rng, n + 1), d = uniform_index(rng, n + 1);
  if (a == b) b = (a + 1) % (n + 1);
  if (c == d) d = (c + 1) % (n + 1);
  const double s = 1.0 / steps;
  return {std::min(a, b) * s, std::min(c, d) * s, std::max(a, b) * s, std::max(c, d) * s};
}

// Pixel-center count of the span's subpixels lying inside the cell, over the span's subpixels.
inline double raster_ioa(const BBox& span, const BBox& cell, int steps) {
  const auto lo_x = static_cast<long>(std::lround(span.x0 * steps));
  const auto hi_x = static_cast<long>(std::lround(span.x1 * steps));
  const auto lo_y = static_cast<long>(std::lround(span.y0 * steps));
  const auto hi_y = static_cast<long>(std::lround(span.y1 * steps));
  long inside = 0, total = 0;
  for (long y = lo_y; y < hi_y; ++y) {
    const double cy = (y + 0.5) / steps;
    const bool in_y = cy > cell.y0 && cy < cell.y1;
    for (long x = lo_x; x < hi_x; ++x) {
      ++total;
      const double cx = (x + 0.5) / steps;
      if (in_y && cx > cell.x0 && cx < cell.x1) ++inside;
    }
  }
  return static_cast<double>(inside) / static_cast<double>(total);
}

}  // namespace tabuq::testing
