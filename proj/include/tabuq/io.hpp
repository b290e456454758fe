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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabuq/alignment.hpp"
#include "tabuq/evaluation.hpp"
#include "tabuq/geometry.hpp"
#include "tabuq/grid.hpp"

namespace tabuq {

using Json = nlohmann::ordered_json;

struct TsrInput {
  ImageDims image;
  std::vector<StructureDetection> rows;
  std::vector<StructureDetection> cols;
};

struct OcrInput {
  ImageDims image;
  std::vector<OcrSpan> spans;
};

struct TableJob {
  std::string table_id;
  std::string domain = "default";
  std::filesystem::path tsr_input;
  std::filesystem::path ocr_input;
  std::optional<std::filesystem::path> gt_input;
  std::optional<std::filesystem::path> image_ref;
};

// Parsers throw InputError naming the offending field, e.g. "rows[2].bbox".
TsrInput parse_tsr(const Json& j);
OcrInput parse_ocr(const Json& j);
std::vector<GroundTruthCell> parse_ground_truth(const Json& j);

Json to_json(const TsrInput& tsr);
Json to_json(const OcrInput& ocr);
Json to_json(const std::vector<GroundTruthCell>& gt);

/// Manifest: {"tables": [{"table_id", "domain", "tsr", "ocr", "gt"?, "image"?}]}.
/// Relative paths resolve against the manifest's directory. table_id must be
/// unique and use only [A-Za-z0-9_.-].
std::vector<TableJob> parse_manifest(const Json& j, const std::filesystem::path& base_dir);
std::vector<TableJob> load_manifest(const std::filesystem::path& path);

void validate_table_id(const std::string& id);

Json read_json_file(const std::filesystem::path& path);
// Pretty-printed, two-space indent, trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

Json bbox_to_json(const BBox& box);
BBox bbox_from_json(const Json& j, const std::string& where);

}  // namespace tabuq
