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

#include "tabuq/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "tabuq/error.hpp"

namespace tabuq {
namespace {

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be an object");
  auto it = j.find(key);
  if (it == j.end()) throw InputError(where + "." + key + " is missing");
  return *it;
}

std::string field(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw InputError(where + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(where + " must be finite");
  return v;
}

double confidence(const Json& j, const std::string& where) {
  const double v = number(j, where);
  if (v < 0.0 || v > 1.0) throw InputError(where + " must lie in [0,1]");
  return v;
}

int index(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw InputError(where + " must be a non-negative integer");
  }
  return j.get<int>();
}

std::string text(const Json& j, const std::string& where) {
  if (!j.is_string()) throw InputError(where + " must be a string");
  return j.get<std::string>();
}

const Json& array(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + " must be an array");
  return j;
}

ImageDims image_dims(const Json& j) {
  const Json& img = require(j, "image", "");
  ImageDims d{number(require(img, "width", "image"), "image.width"),
              number(require(img, "height", "image"), "image.height")};
  if (!d.valid()) throw InputError("image dimensions must be positive");
  return d;
}

Json dims_to_json(const ImageDims& d) {
  Json j;
  j["width"] = d.width;
  j["height"] = d.height;
  return j;
}

std::vector<StructureDetection> detections(const Json& j, const char* key, StructureKind kind) {
  std::vector<StructureDetection> out;
  const Json& arr = array(require(j, key, ""), key);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = std::string(key) + "[" + std::to_string(i) + "]";
    StructureDetection d;
    d.kind = kind;
    d.bbox = bbox_from_json(require(arr[i], "bbox", where), field(where, "bbox"));
    d.confidence = confidence(require(arr[i], "confidence", where), field(where, "confidence"));
    out.push_back(d);
  }
  return out;
}

Json detections_to_json(const std::vector<StructureDetection>& dets) {
  Json arr = Json::array();
  for (const auto& d : dets) {
    Json e;
    e["bbox"] = bbox_to_json(d.bbox);
    e["confidence"] = d.confidence;
    arr.push_back(std::move(e));
  }
  return arr;
}

}  // namespace

Json bbox_to_json(const BBox& b) { return Json::array({b.x0, b.y0, b.x1, b.y1}); }

BBox bbox_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw InputError(where + " must be [x0,y0,x1,y1]");
  BBox b{number(j[0], where + "[0]"), number(j[1], where + "[1]"), number(j[2], where + "[2]"),
         number(j[3], where + "[3]")};
  if (!b.valid()) throw InputError(where + " is not a valid box: " + to_string(b));
  return b;
}

TsrInput parse_tsr(const Json& j) {
  TsrInput t;
  t.image = image_dims(j);
  t.rows = detections(j, "rows", StructureKind::kRow);
  t.cols = detections(j, "columns", StructureKind::kColumn);
  return t;
}

OcrInput parse_ocr(const Json& j) {
  OcrInput o;
  o.image = image_dims(j);
  const Json& arr = array(require(j, "spans", ""), "spans");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "spans[" + std::to_string(i) + "]";
    OcrSpan s;
    s.bbox = bbox_from_json(require(arr[i], "bbox", where), field(where, "bbox"));
    if (!(area(s.bbox) > 0.0)) throw InputError(where + ".bbox has zero area");
    s.text = text(require(arr[i], "text", where), field(where, "text"));
    s.confidence = confidence(require(arr[i], "confidence", where), field(where, "confidence"));
    o.spans.push_back(std::move(s));
  }
  return o;
}

std::vector<GroundTruthCell> parse_ground_truth(const Json& j) {
  std::vector<GroundTruthCell> out;
  const Json& arr = array(require(j, "cells", ""), "cells");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "cells[" + std::to_string(i) + "]";
    const Json& e = arr[i];
    GroundTruthCell g;
    g.bbox = bbox_from_json(require(e, "bbox", where), field(where, "bbox"));
    g.start_row = index(require(e, "start_row", where), field(where, "start_row"));
    g.start_col = index(require(e, "start_col", where), field(where, "start_col"));
    g.end_row = index(require(e, "end_row", where), field(where, "end_row"));
    g.end_col = index(require(e, "end_col", where), field(where, "end_col"));
    if (g.end_row < g.start_row) throw InputError(where + ".end_row precedes start_row");
    if (g.end_col < g.start_col) throw InputError(where + ".end_col precedes start_col");
    g.text = text(require(e, "text", where), field(where, "text"));
    out.push_back(std::move(g));
  }
  return out;
}

Json to_json(const TsrInput& tsr) {
  Json j;
  j["image"] = dims_to_json(tsr.image);
  j["rows"] = detections_to_json(tsr.rows);
  j["columns"] = detections_to_json(tsr.cols);
  return j;
}

Json to_json(const OcrInput& ocr) {
  Json j;
  j["image"] = dims_to_json(ocr.image);
  Json arr = Json::array();
  for (const auto& s : ocr.spans) {
    Json e;
    e["bbox"] = bbox_to_json(s.bbox);
    e["text"] = s.text;
    e["confidence"] = s.confidence;
    arr.push_back(std::move(e));
  }
  j["spans"] = std::move(arr);
  return j;
}

Json to_json(const std::vector<GroundTruthCell>& gt) {
  Json arr = Json::array();
  for (const auto& g : gt) {
    Json e;
    e["bbox"] = bbox_to_json(g.bbox);
    e["start_row"] = g.start_row;
    e["start_col"] = g.start_col;
    e["end_row"] = g.end_row;
    e["end_col"] = g.end_col;
    e["text"] = g.text;
    arr.push_back(std::move(e));
  }
  Json j;
  j["cells"] = std::move(arr);
  return j;
}

void validate_table_id(const std::string& id) {
  if (id.empty()) throw InputError("table_id must not be empty");
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) throw InputError("table_id '" + id + "' may only use [A-Za-z0-9_.-]");
  }
  if (id == "." || id == "..") throw InputError("table_id '" + id + "' is reserved");
}

std::vector<TableJob> parse_manifest(const Json& j, const std::filesystem::path& base_dir) {
  const Json& arr = array(require(j, "tables", "manifest"), "tables");
  std::vector<TableJob> jobs;
  std::set<std::string> seen;
  auto resolve = [&](const Json& v, const std::string& where) {
    std::filesystem::path p(text(v, where));
    return p.is_absolute() ? p : base_dir / p;
  };
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "tables[" + std::to_string(i) + "]";
    const Json& e = arr[i];
    TableJob job;
    job.table_id = text(require(e, "table_id", where), field(where, "table_id"));
    validate_table_id(job.table_id);
    if (!seen.insert(job.table_id).second) {
      throw InputError("duplicate table_id '" + job.table_id + "' in manifest");
    }
    if (e.contains("domain")) job.domain = text(e["domain"], field(where, "domain"));
    job.tsr_input = resolve(require(e, "tsr", where), field(where, "tsr"));
    job.ocr_input = resolve(require(e, "ocr", where), field(where, "ocr"));
    if (e.contains("gt") && !e["gt"].is_null()) job.gt_input = resolve(e["gt"], field(where, "gt"));
    if (e.contains("image") && !e["image"].is_null()) {
      job.image_ref = resolve(e["image"], field(where, "image"));
    }
    jobs.push_back(std::move(job));
  }
  if (jobs.empty()) throw InputError("manifest lists no tables");
  return jobs;
}

std::vector<TableJob> load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_json_file(path), path.parent_path());
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace tabuq
