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

#include "tabuq/review.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <mutex>
#include <set>
#include <sstream>

#include <httplib.h>

#include "tabuq/error.hpp"
#include "tabuq/evaluation.hpp"
#include "tabuq/pipeline.hpp"

namespace tabuq {
namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

HttpResponse json_response(int status, const Json& j) { return {status, j.dump(2) + "\n"}; }

HttpResponse error_response(int status, const std::string& message) {
  return json_response(status, Json{{"error", message}});
}

std::string content_type_for(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kAccept: return "accept";
    case Verdict::kCorrect: return "correct";
    case Verdict::kUnresolvable: return "unresolvable";
  }
  return "accept";
}

Json to_json(const CorrectionEvent& e) {
  Json j;
  j["table_id"] = e.table_id;
  j["row"] = e.row;
  j["col"] = e.col;
  j["reviewer_text"] = e.reviewer_text ? Json(*e.reviewer_text) : Json(nullptr);
  j["verdict"] = std::string(to_string(e.verdict));
  j["timestamp"] = e.timestamp;
  return j;
}

CorrectionEvent event_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("correction event must be an object");
  CorrectionEvent e;
  try {
    if (j.contains("table_id")) e.table_id = j.at("table_id").get<std::string>();
    if (j.contains("row")) e.row = j.at("row").get<int>();
    if (j.contains("col")) e.col = j.at("col").get<int>();
    if (j.contains("reviewer_text") && !j.at("reviewer_text").is_null()) {
      e.reviewer_text = j.at("reviewer_text").get<std::string>();
    }
    if (j.contains("timestamp")) e.timestamp = j.at("timestamp").get<std::string>();
    const std::string verdict = j.at("verdict").get<std::string>();
    if (verdict == "accept") {
      e.verdict = Verdict::kAccept;
    } else if (verdict == "correct") {
      e.verdict = Verdict::kCorrect;
    } else if (verdict == "unresolvable") {
      e.verdict = Verdict::kUnresolvable;
    } else {
      throw InputError("verdict must be accept, correct or unresolvable");
    }
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("correction event: ") + ex.what());
  }
  if (e.verdict == Verdict::kCorrect && !e.reviewer_text) {
    throw InputError("verdict 'correct' requires reviewer_text");
  }
  return e;
}

ReviewState ReviewState::load(const std::filesystem::path& dir) {
  ReviewState s;
  try {
    const Json state = read_json_file(dir / "state.json");
    s.batch_report_ = read_json_file(dir / "report.json");
    s.similarity_threshold_ = s.batch_report_.at("config").at("similarity_threshold").get<double>();
    for (const auto& t : state.at("tables")) {
      Table table;
      table.table_id = t.at("table_id").get<std::string>();
      validate_table_id(table.table_id);
      table.domain = t.at("domain").get<std::string>();
      if (!t.at("image").is_null()) table.image = t.at("image").get<std::string>();
      const Json cells = read_json_file(dir / t.at("cells_file").get<std::string>());
      for (const auto& c : cells.at("cells")) {
        Cell cell;
        cell.record = c;
        cell.row = c.at("row").get<int>();
        cell.col = c.at("col").get<int>();
        cell.flagged_by_uq = c.at("flagged").get<bool>();
        cell.evaluation_split = c.at("split").get<std::string>() == "evaluation";
        cell.correct = c.at("correct").get<bool>();
        cell.uncertainty = c.at("uncertainty").is_null() ? 0.0 : c.at("uncertainty").get<double>();
        if (!c.at("gt_text").is_null()) cell.gt_text = c.at("gt_text").get<std::string>();
        cell.status = cell.flagged_by_uq ? Status::kPending : Status::kNotFlagged;
        table.cells.push_back(std::move(cell));
      }
      if (!s.index_.emplace(table.table_id, s.tables_.size()).second) {
        throw InputError("duplicate table " + table.table_id);
      }
      s.tables_.push_back(std::move(table));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("corrupt review state in " + dir.string() + ": " + e.what());
  }
  return s;
}

const ReviewState::Table& ReviewState::table(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw NotFound("unknown table '" + id + "'");
  return tables_[it->second];
}

std::string_view ReviewState::status_name(Status s) {
  switch (s) {
    case Status::kNotFlagged: return "none";
    case Status::kPending: return "pending";
    case Status::kAccepted: return "accepted";
    case Status::kCorrected: return "corrected";
    case Status::kUnresolvable: return "unresolvable";
  }
  return "none";
}

void ReviewState::check(const CorrectionEvent& e) const {
  const Table& t = table(e.table_id);
  auto it = std::find_if(t.cells.begin(), t.cells.end(),
                         [&](const Cell& c) { return c.row == e.row && c.col == e.col; });
  if (it == t.cells.end()) {
    throw NotFound("no cell (" + std::to_string(e.row) + "," + std::to_string(e.col) + ") in " +
                   e.table_id);
  }
  if (it->status != Status::kPending) {
    throw ReviewConflict("cell (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                         ") is not awaiting review (status " + std::string(status_name(it->status)) +
                         ")");
  }
  if (e.verdict == Verdict::kCorrect && !e.reviewer_text) {
    throw InputError("verdict 'correct' requires reviewer_text");
  }
}

void ReviewState::apply(const CorrectionEvent& e) {
  check(e);
  Table& t = tables_[index_.at(e.table_id)];
  for (auto& c : t.cells) {
    if (c.row != e.row || c.col != e.col) continue;
    switch (e.verdict) {
      case Verdict::kAccept: c.status = Status::kAccepted; break;
      case Verdict::kCorrect:
        c.status = Status::kCorrected;
        c.reviewer_text = e.reviewer_text;
        break;
      case Verdict::kUnresolvable: c.status = Status::kUnresolvable; break;
    }
    ++reviewed_;
    return;
  }
}

Json ReviewState::cell_json(const Cell& c) const {
  Json j = c.record;
  j.erase("review_status");
  j.erase("text_after");
  j.erase("correct_after");
  j["flagged_by_uq"] = c.flagged_by_uq;
  j["flagged"] = c.status == Status::kPending;
  j["review_status"] = std::string(status_name(c.status));
  j["reviewer_text"] = c.reviewer_text ? Json(*c.reviewer_text) : Json(nullptr);
  return j;
}

Json ReviewState::tables() const {
  Json arr = Json::array();
  for (const auto& t : tables_) {
    std::size_t flagged = 0;
    std::size_t pending = 0;
    for (const auto& c : t.cells) {
      if (c.flagged_by_uq) ++flagged;
      if (c.status == Status::kPending) ++pending;
    }
    Json e;
    e["table_id"] = t.table_id;
    e["domain"] = t.domain;
    e["cell_count"] = t.cells.size();
    e["flagged_count"] = flagged;
    e["pending_count"] = pending;
    e["has_image"] = t.image.has_value();
    arr.push_back(std::move(e));
  }
  return Json{{"tables", std::move(arr)}};
}

Json ReviewState::cells(const std::string& table_id, bool flagged_only) const {
  const Table& t = table(table_id);
  std::vector<const Cell*> picked;
  for (const auto& c : t.cells) {
    if (!flagged_only || c.status == Status::kPending) picked.push_back(&c);
  }
  if (flagged_only) {
    std::stable_sort(picked.begin(), picked.end(), [](const Cell* a, const Cell* b) {
      if (a->uncertainty != b->uncertainty) return a->uncertainty > b->uncertainty;
      if (a->row != b->row) return a->row < b->row;
      return a->col < b->col;
    });
  }
  Json arr = Json::array();
  for (const Cell* c : picked) arr.push_back(cell_json(*c));
  Json j;
  j["table_id"] = t.table_id;
  j["domain"] = t.domain;
  j["cells"] = std::move(arr);
  return j;
}

Json ReviewState::live_report() const {
  std::vector<LabeledCell> all;
  std::map<std::string, std::vector<LabeledCell>> by_domain;
  std::set<CellKey> corrected;
  std::size_t remaining = 0;
  for (const auto& t : tables_) {
    for (const auto& c : t.cells) {
      if (c.status == Status::kPending) ++remaining;
      if (!c.evaluation_split) continue;
      LabeledCell l;
      l.key = {t.table_id, c.row, c.col};
      l.cell.flagged = c.flagged_by_uq;
      l.correct = c.correct;
      if (c.status == Status::kCorrected && c.gt_text) {
        ExtractedCell fixed;
        fixed.text = *c.reviewer_text;
        GroundTruthCell gt;
        gt.text = *c.gt_text;
        if (label_correct(fixed, &gt, similarity_threshold_)) corrected.insert(l.key);
      }
      by_domain[t.domain].push_back(l);
      all.push_back(std::move(l));
    }
  }
  Json j;
  j["reviewed"] = reviewed_;
  j["remaining_flagged"] = remaining;
  j["all"] = all.empty() ? Json(nullptr) : to_json(compute_report(all, corrected));
  Json domains = Json::object();
  for (const auto& [d, cells] : by_domain) domains[d] = to_json(compute_report(cells, corrected));
  j["domains"] = std::move(domains);
  return j;
}

std::optional<std::filesystem::path> ReviewState::image(const std::string& table_id) const {
  return table(table_id).image;
}

Json ReviewState::snapshot() const {
  Json j;
  Json arr = Json::array();
  for (const auto& t : tables_) arr.push_back(cells(t.table_id, false));
  j["tables"] = std::move(arr);
  j["live"] = live_report();
  return j;
}

ReviewService::ReviewService(std::filesystem::path state_dir)
    : state_dir_(std::move(state_dir)), state_(ReviewState::load(state_dir_)) {
  const auto log_path = state_dir_ / "events.jsonl";
  if (std::filesystem::exists(log_path)) {
    std::ifstream in(log_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        state_.apply(event_from_json(Json::parse(line)));
      } catch (const std::exception& e) {
        throw InputError("corrupt event log line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  log_.open(log_path, std::ios::app | std::ios::binary);
  if (!log_) throw std::runtime_error("cannot open event log " + log_path.string());
}

Json ReviewService::snapshot() const {
  std::shared_lock lock(mutex_);
  return state_.snapshot();
}

HttpResponse ReviewService::post_correction(const std::string& table_id,
                                            const std::string& cell_ref,
                                            const std::string& body) {
  const auto comma = cell_ref.find(',');
  if (comma == std::string::npos) return error_response(400, "cell must be addressed as {row},{col}");
  CorrectionEvent e;
  try {
    Json j = Json::parse(body);
    if (!j.is_object()) return error_response(400, "body must be a JSON object");
    j["table_id"] = table_id;
    j["row"] = std::stoi(cell_ref.substr(0, comma));
    j["col"] = std::stoi(cell_ref.substr(comma + 1));
    e = event_from_json(j);
  } catch (const std::exception& ex) {
    return error_response(400, ex.what());
  }
  if (e.timestamp.empty()) e.timestamp = utc_now();

  std::unique_lock lock(mutex_);
  state_.check(e);
  log_ << to_json(e).dump() << '\n';
  log_.flush();
  if (!log_) return error_response(500, "failed to append to the event log");
  state_.apply(e);
  Json ack;
  ack["event"] = to_json(e);
  const Json cells = state_.cells(table_id, false);
  for (const auto& c : cells["cells"]) {
    if (c["row"] == e.row && c["col"] == e.col) ack["cell"] = c;
  }
  return json_response(200, ack);
}

HttpResponse ReviewService::handle(const std::string& method, const std::string& path,
                                   const std::map<std::string, std::string>& query,
                                   const std::string& body) {
  const auto parts = split_path(path);
  if (parts.empty() || "/" + parts[0] != kApiPrefix) return error_response(404, "not found");
  try {
    if (method == "GET") {
      std::shared_lock lock(mutex_);
      if (parts.size() == 2 && parts[1] == "tables") return json_response(200, state_.tables());
      if (parts.size() == 2 && parts[1] == "report") return json_response(200, state_.batch_report());
      if (parts.size() == 3 && parts[1] == "report" && parts[2] == "live") {
        return json_response(200, state_.live_report());
      }
      if (parts.size() == 4 && parts[1] == "tables" && parts[3] == "cells") {
        auto it = query.find("flagged");
        const bool flagged = it != query.end() && (it->second == "true" || it->second == "1");
        return json_response(200, state_.cells(parts[2], flagged));
      }
      if (parts.size() == 4 && parts[1] == "tables" && parts[3] == "image") {
        const auto img = state_.image(parts[2]);
        if (!img) return error_response(404, "table has no image");
        std::ifstream in(*img, std::ios::binary);
        if (!in) return error_response(404, "image file not readable");
        std::ostringstream os;
        os << in.rdbuf();
        return {200, os.str(), content_type_for(*img)};
      }
    } else if (method == "POST") {
      if (parts.size() == 6 && parts[1] == "tables" && parts[3] == "cells" &&
          parts[5] == "correction") {
        return post_correction(parts[2], parts[4], body);
      }
    }
    return error_response(404, "not found");
  } catch (const NotFound& e) {
    return error_response(404, e.what());
  } catch (const ReviewConflict& e) {
    return error_response(409, e.what());
  } catch (const InputError& e) {
    return error_response(400, e.what());
  }
}

struct ReviewServer::Http {
  httplib::Server server;
};

ReviewServer::ReviewServer(const std::filesystem::path& state_dir)
    : service_(state_dir), http_(std::make_unique<Http>()) {
  auto adapt = [this](const char* method) {
    return [this, method](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> query;
      for (const auto& [k, v] : req.params) query.emplace(k, v);
      const auto r = service_.handle(method, req.path, query, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
  };
  http_->server.Get(".*", adapt("GET"));
  http_->server.Post(".*", adapt("POST"));
}

ReviewServer::~ReviewServer() = default;

int ReviewServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = http_->server.bind_to_any_port(host);
    if (bound <= 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!http_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
  }
  return port;
}

void ReviewServer::listen() { http_->server.listen_after_bind(); }

void ReviewServer::stop() { http_->server.stop(); }

void serve_review(const std::filesystem::path& state_dir, const std::string& bind_address) {
  const auto colon = bind_address.rfind(':');
  if (colon == std::string::npos) throw InputError("bind address must be host:port");
  const std::string host = bind_address.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind_address.substr(colon + 1));
  } catch (const std::exception&) {
    throw InputError("bad port in bind address '" + bind_address + "'");
  }
  ReviewServer server(state_dir);
  server.bind(host, port);
  server.listen();
}

}  // namespace tabuq
