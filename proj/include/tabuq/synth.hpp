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
#include <string>
#include <vector>

#include "tabuq/evaluation.hpp"
#include "tabuq/io.hpp"
#include "tabuq/random.hpp"

namespace tabuq {

// Injection rates for synthetic tables. Per-cell rates unless noted.
struct SynthOptions {
  int tables = 20;
  std::uint64_t seed = 7;
  double drop_rate = 0.03;          // span deleted
  double corrupt_rate = 0.05;       // one confusable character swapped, low confidence
  double span_jitter_rate = 0.015;  // span pushed into the neighbouring column
  double hard_correct_rate = 0.02;  // right text, low confidence
  double silent_error_rate = 0.006; // wrong text at clean confidence
  double blank_rate = 0.02;         // empty ground-truth cell
  double multi_span_rate = 0.15;    // text fragmented into two spans
  double row_jitter_table_rate = 0.3;  // per table: one row box shifted, low confidence
  double spanning_header_rate = 0.3;   // per table: header cell spanning two columns
  bool blank_corner = true;            // top-left header cell left empty
};

// No injected errors, one span per cell, no empty cells.
inline SynthOptions clean_synth_options() {
  SynthOptions o;
  o.drop_rate = o.corrupt_rate = o.span_jitter_rate = o.hard_correct_rate = 0.0;
  o.silent_error_rate = 0.0;
  o.blank_rate = o.row_jitter_table_rate = o.spanning_header_rate = 0.0;
  o.multi_span_rate = 0.0;
  o.blank_corner = false;
  return o;
}

struct SynthTable {
  std::string table_id;
  std::string domain;
  TsrInput tsr;
  OcrInput ocr;
  std::vector<GroundTruthCell> gt;
};

// Domains cycle through computer_science, materials_science, biology, icdar2013.
std::vector<SynthTable> make_corpus(const SynthOptions& opts);

SynthTable make_table(const std::string& table_id, const std::string& domain, Rng& rng,
                      const SynthOptions& opts);

// Writes <id>.tsr.json, <id>.ocr.json, <id>.gt.json per table plus manifest.json.
void write_corpus(const std::filesystem::path& dir, const std::vector<SynthTable>& tables);

}  // namespace tabuq
