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
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "tabuq/io.hpp"

namespace tabuq {

inline constexpr const char* kApiPrefix = "/v1";

enum class Verdict { kAccept, kCorrect, kUnresolvable };

std::string_view to_string(Verdict v);

struct CorrectionEvent {
  std::string table_id;
  int row = 0;
  int col = 0;
  std::optional<std::string> reviewer_text;  // required for kCorrect
  Verdict verdict = Verdict::kAccept;
  std::string timestamp;
};

Json to_json(const CorrectionEvent& e);
// Throws InputError on a malformed event.
CorrectionEvent event_from_json(const Json& j);

// The cell is unknown, or it is not awaiting review.
class ReviewConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Review state for an evaluation output directory. The state is a pure fold
/// of correction events over the evaluated cells; nothing else mutates it.
class ReviewState {
 public:
  // Reads state.json, report.json and cells/*.json. Throws InputError on a
  // missing or corrupt file.
  static ReviewState load(const std::filesystem::path& state_dir);

  // Throws NotFound / ReviewConflict / InputError when the event cannot apply.
  void check(const CorrectionEvent& e) const;
  void apply(const CorrectionEvent& e);

  Json tables() const;
  // Flagged-only listings are ordered by descending uncertainty, then (row, col).
  Json cells(const std::string& table_id, bool flagged_only) const;
  const Json& batch_report() const { return batch_report_; }
  Json live_report() const;
  std::optional<std::filesystem::path> image(const std::string& table_id) const;
  // Everything the events can change, for replay comparisons.
  Json snapshot() const;

 private:
  enum class Status { kNotFlagged, kPending, kAccepted, kCorrected, kUnresolvable };

  struct Cell {
    Json record;  // evaluated cell as written by `evaluate`
    int row = 0;
    int col = 0;
    bool flagged_by_uq = false;
    bool evaluation_split = false;
    bool correct = false;
    double uncertainty = 0.0;
    std::optional<std::string> gt_text;
    Status status = Status::kNotFlagged;
    std::optional<std::string> reviewer_text;
  };

  struct Table {
    std::string table_id;
    std::string domain;
    std::optional<std::filesystem::path> image;
    std::vector<Cell> cells;
  };

  const Table& table(const std::string& id) const;
  Json cell_json(const Cell& c) const;
  static std::string_view status_name(Status s);

  std::vector<Table> tables_;
  std::map<std::string, std::size_t> index_;
  Json batch_report_;
  double similarity_threshold_ = 1.0;
  std::size_t reviewed_ = 0;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Thread-safe review service: replays events.jsonl from the state directory
/// on construction, serializes writes through the append-only log and allows
/// concurrent reads.
class ReviewService {
 public:
  explicit ReviewService(std::filesystem::path state_dir);

  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::map<std::string, std::string>& query, const std::string& body);

  Json snapshot() const;

 private:
  HttpResponse post_correction(const std::string& table_id, const std::string& cell_ref,
                               const std::string& body);

  std::filesystem::path state_dir_;
  mutable std::shared_mutex mutex_;
  ReviewState state_;
  std::ofstream log_;
};

/// HTTP front end for ReviewService.
class ReviewServer {
 public:
  explicit ReviewServer(const std::filesystem::path& state_dir);
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws std::runtime_error on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();
  ReviewService& service() { return service_; }

 private:
  struct Http;
  ReviewService service_;
  std::unique_ptr<Http> http_;
};

// Blocks serving HTTP on host:port. Throws std::runtime_error when the port
// cannot be bound and InputError on corrupt state.
void serve_review(const std::filesystem::path& state_dir, const std::string& bind_address);

}  // namespace tabuq
