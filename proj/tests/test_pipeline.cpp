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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include "support.hpp"
#include "tabuq/error.hpp"
#include "tabuq/pipeline.hpp"

using namespace tabuq;

namespace {

ExtractedTable fake_table(const std::string& id, const std::string& domain, int n) {
  ExtractedTable t;
  t.table_id = id;
  t.domain = domain;
  for (int i = 0; i < n; ++i) {
    ExtractedCell c;
    c.cell.row_index = i;
    t.cells.push_back(c);
  }
  return t;
}

RunConfig fixture_config() {
  RunConfig cfg;
  cfg.alpha = 0.2;
  cfg.tau.reset();
  return cfg;
}

}  // namespace

TEST_CASE("calibration split is seeded, per domain and rounded") {
  const std::vector<ExtractedTable> tables{fake_table("a1", "a", 6), fake_table("a2", "a", 4),
                                           fake_table("b1", "b", 5)};
  const auto s = calibration_split(tables, 0.5, 42);
  CHECK(std::is_sorted(s.begin(), s.end()));
  std::size_t in_a = 0, in_b = 0;
  for (const auto& k : s) (k.table_id == "b1" ? in_b : in_a)++;
  CHECK(in_a == 5);
  CHECK(in_b == 3);
  CHECK(calibration_split(tables, 0.5, 42) == s);
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 5 && !differs; ++seed) differs = calibration_split(tables, 0.5, seed) != s;
  CHECK(differs);
}

TEST_CASE("config validation") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = {};
  cfg.calib_fraction = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = {};
  cfg.hss_weights = HssWeights{2, 0, 0};
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("extraction errors carry the table id") {
  TsrInput tsr{{100, 100}, {}, {{StructureKind::kColumn, {0, 0, 100, 100}, 0.9}}};
  OcrInput ocr{{100, 100}, {}};
  try {
    extract_table("tbl_7", "d", tsr, ocr, 0.5);
    FAIL("expected an error");
  } catch (const DegenerateDataError& e) {
    CHECK(std::string(e.what()).find("tbl_7") != std::string::npos);
  }
}

TEST_CASE("q_hat equals the ranked score of the calibration cells") {
  const auto jobs = load_manifest(testing::kFixtures / "manifest.json");
  RunConfig cfg;
  const auto model = run_calibrate(jobs, cfg);
  const std::set<CellKey> calib(model.calibration_cells.begin(), model.calibration_cells.end());
  std::vector<double> scores;
  for (const auto& job : jobs) {
    const auto t = run_extract(job, cfg);
    for (const auto& c : t.cells) {
      if (calib.count({t.table_id, c.cell.row_index, c.cell.col_index})) {
        scores.push_back(1.0 - 0.5 * (c.cell.location_confidence + c.ocr_confidence));
      }
    }
  }
  REQUIRE(scores.size() == model.model.calibration_size);
  std::sort(scores.begin(), scores.end());
  const auto k = static_cast<std::size_t>(std::ceil((scores.size() + 1) * 0.9));
  CHECK(model.model.q_hat == doctest::Approx(scores[std::min(k, scores.size()) - 1]).epsilon(1e-15));
  CHECK(model.model.flag_threshold_tau == kDefaultTau);
}

TEST_CASE("calibrate and evaluate are deterministic") {
  const auto jobs = load_manifest(testing::kFixtures / "manifest.json");
  const auto cfg = fixture_config();
  const auto m1 = run_calibrate(jobs, cfg);
  const auto m2 = run_calibrate(jobs, cfg);
  CHECK(to_json(m1) == to_json(m2));
  const auto e1 = run_evaluate(jobs, m1, cfg);
  const auto e2 = run_evaluate(jobs, m2, cfg);
  CHECK(report_artifact(e1, m1, cfg) == report_artifact(e2, m2, cfg));
  CHECK(to_json(calibration_from_json(to_json(m1))) == to_json(m1));
  CHECK(report_from_json(to_json(e1.all)).counts == e1.all.counts);

  std::size_t held_out = 0;
  for (const auto& t : e1.tables)
    for (const auto& c : t.cells) held_out += !c.calibration;
  CHECK(e1.all.counts.total == held_out);
  std::size_t domain_total = 0;
  for (const auto& [d, r] : e1.domains) domain_total += r.counts.total;
  CHECK(domain_total == held_out);
}

TEST_CASE("per-domain calibration keeps one q_hat per domain") {
  const auto jobs = load_manifest(testing::kFixtures / "manifest.json");
  RunConfig cfg;
  cfg.per_domain_calibration = true;
  const auto m = run_calibrate(jobs, cfg);
  CHECK(m.q_hat_by_domain.size() == 4);
  CHECK(m.q_hat_for("biology") == m.q_hat_by_domain.at("biology"));
}

TEST_CASE("HSS calibration records the searched weights") {
  const auto jobs = load_manifest(testing::kFixtures / "manifest.json");
  auto cfg = fixture_config();
  cfg.score_kind = ScoreKind::kHss;
  cfg.hss_grid_step = 0.25;
  const auto m = run_calibrate(jobs, cfg);
  REQUIRE(m.hss_tune);
  CHECK(m.model.score_function.hss_weights() == m.hss_tune->weights);
}

TEST_CASE("clean tables are fully correct") {
  const auto jobs = load_manifest(testing::kFixtures / "clean" / "manifest.json");
  RunConfig cfg;
  const auto m = run_calibrate(jobs, cfg);
  const auto e = run_evaluate(jobs, m, cfg);
  CHECK(e.all.accuracy_before == 1.0);
  CHECK(e.all.error_rate_after_hc == 0.0);
  cfg.tau.reset();
  CHECK_THROWS_AS(run_calibrate(jobs, cfg), DegenerateDataError);
}

TEST_CASE("evaluation needs ground truth") {
  auto jobs = load_manifest(testing::kFixtures / "manifest.json");
  RunConfig cfg;
  const auto m = run_calibrate(jobs, cfg);
  jobs[3].gt_input.reset();
  CHECK_THROWS_AS(run_evaluate(jobs, m, cfg), InputError);
}

TEST_CASE("evaluation output layout") {
  const auto jobs = load_manifest(testing::kFixtures / "manifest.json");
  const auto cfg = fixture_config();
  const auto m = run_calibrate(jobs, cfg);
  const auto e = run_evaluate(jobs, m, cfg);
  testing::TempDir dir("pipeline");
  write_evaluation(dir.path(), e, m, cfg);
  CHECK(std::filesystem::exists(dir.path() / "report.json"));
  const auto state = read_json_file(dir.path() / "state.json");
  CHECK(state["tables"].size() == 20);
  const auto first = read_json_file(dir.path() / "cells" / (jobs[0].table_id + ".json"));
  CHECK(first["cells"][0].contains("uncertainty"));
  CHECK(first["cells"][0].contains("review_status"));
}

namespace {

// 2x2 table of 100x40 cells with one span per cell.
std::pair<TsrInput, OcrInput> two_by_two(double ocr_conf = 0.9) {
  TsrInput tsr{{200, 80},
               {{StructureKind::kRow, {0, 0, 200, 40}, 0.9}, {StructureKind::kRow, {0, 40, 200, 80}, 0.9}},
               {{StructureKind::kColumn, {0, 0, 100, 80}, 0.9}, {StructureKind::kColumn, {100, 0, 200, 80}, 0.9}}};
  OcrInput ocr{{200, 80},
               {{{10, 10, 60, 30}, "a", ocr_conf}, {{110, 10, 160, 30}, "b", ocr_conf},
                {{10, 50, 60, 70}, "c", ocr_conf}, {{110, 50, 160, 70}, "d", ocr_conf}}};
  return {tsr, ocr};
}

CalibrationArtifact fixed_model(ScoreKind kind, double q_hat, double tau) {
  CalibrationArtifact m;
  m.model.score_function = ScoreFunction::make(kind);
  m.model.q_hat = q_hat;
  m.model.flag_threshold_tau = tau;
  return m;
}

}  // namespace

TEST_CASE("2x2 table: all matched, nothing flagged at tau 1") {
  auto [tsr, ocr] = two_by_two();
  auto t = extract_table("t", "d", tsr, ocr, 0.5);
  const auto model = fixed_model(ScoreKind::kAps, 0.0, 1.0);
  score_cells(t, model.model.score_function, &model);
  REQUIRE(t.cells.size() == 4);
  for (const auto& c : t.cells) {
    CHECK(c.matched_span_count == 1);
    CHECK_FALSE(c.flagged);
    CHECK(c.uncertainty);
  }

  ocr.spans.erase(ocr.spans.begin() + 2);
  auto cut = extract_table("t", "d", tsr, ocr, 0.5);
  score_cells(cut, ScoreFunction::make(ScoreKind::kLac));
  CHECK(cut.cells[2].ocr_confidence == 0.0);
  CHECK(*cut.cells[2].score == 1.0);
  CHECK_FALSE(cut.cells[2].uncertainty);
}

TEST_CASE("cells artifact is byte-identical across reruns") {
  const auto jobs = load_manifest(testing::kFixtures / "manifest.json");
  RunConfig cfg;
  const auto model = run_calibrate(jobs, cfg);
  testing::TempDir dir("artifact");
  for (int run = 0; run < 2; ++run) {
    const auto t = run_extract(jobs[5], cfg, &model);
    write_json_file(dir.path() / ("run" + std::to_string(run) + ".json"),
                    cells_artifact(t, model.model.score_function, model.q_hat_for(t.domain)));
  }
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const auto a = slurp(dir.path() / "run0.json");
  CHECK_FALSE(a.empty());
  CHECK(a == slurp(dir.path() / "run1.json"));
}

TEST_CASE("40-cell table splits 20/20 and constant scores give that score") {
  ExtractedTable t = fake_table("solo", "d", 40);
  for (auto& c : t.cells) {
    c.cell.location_confidence = 0.8;
    c.ocr_confidence = 0.6;
  }
  CHECK(calibration_split({t}, 0.5, 9).size() == 20);
  RunConfig cfg;
  cfg.seed = 9;
  const auto m = calibrate_tables({t}, {}, cfg);
  CHECK(m.model.calibration_size == 20);
  CHECK(m.model.q_hat == doctest::Approx(0.3));
}

TEST_CASE("evaluation boundaries: exact flags and no flags") {
  auto [tsr, ocr] = two_by_two();
  ocr.spans[1].text = "wrong";
  ocr.spans[1].confidence = 0.1;
  std::vector<GroundTruthCell> gt{{{0, 0, 100, 40}, 0, 0, 0, 0, "a"},
                                  {{100, 0, 200, 40}, 0, 1, 0, 1, "b"},
                                  {{0, 40, 100, 80}, 1, 0, 1, 0, "c"},
                                  {{100, 40, 200, 80}, 1, 1, 1, 1, "d"}};
  std::map<std::string, std::vector<GroundTruthCell>> gts{{"t", gt}};
  const auto table = extract_table("t", "d", tsr, ocr, 0.5);

  auto exact = fixed_model(ScoreKind::kOcrOnly, 0.5, 0.0);
  auto out = evaluate_tables({table}, gts, exact, 1.0);
  CHECK(out.all.precision_uq == 1.0);
  CHECK(out.all.recall_uq == 1.0);
  CHECK(out.all.error_rate_after_hc == 0.0);

  auto never = fixed_model(ScoreKind::kOcrOnly, 0.5, 1e9);
  out = evaluate_tables({table}, gts, never, 1.0);
  CHECK(out.all.labor_savings == 1.0);
  CHECK(out.all.recall_uq == 0.0);
  CHECK(out.all.error_rate_after_hc == out.all.error_rate_before);
  CHECK(out.all.error_rate_before == 0.25);
}

TEST_CASE("calibration and evaluation cells are disjoint") {
  const auto jobs = load_manifest(testing::kFixtures / "manifest.json");
  RunConfig cfg;
  const auto m = run_calibrate(jobs, cfg);
  const std::set<CellKey> calib(m.calibration_cells.begin(), m.calibration_cells.end());
  const auto e = run_evaluate(jobs, m, cfg);
  std::size_t in_calib = 0;
  for (const auto& t : e.tables) {
    for (const auto& c : t.cells) {
      const bool listed = calib.count({t.table_id, c.cell.cell.row_index, c.cell.cell.col_index}) > 0;
      CHECK(listed == c.calibration);
      in_calib += c.calibration;
    }
  }
  CHECK(in_calib == calib.size());
}
