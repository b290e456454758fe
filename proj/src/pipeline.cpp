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

#include "tabuq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tabuq/error.hpp"
#include "tabuq/grid.hpp"
#include "tabuq/random.hpp"

namespace tabuq {
namespace {

struct CalibCell {
  const std::string* domain;
  const ExtractedCell* cell;
  std::optional<bool> correct;
};

ScoreFunction config_score_function(const RunConfig& cfg) {
  if (cfg.score_kind == ScoreKind::kHss) return ScoreFunction::hss(cfg.hss_weights.value_or(HssWeights{}));
  return ScoreFunction::make(cfg.score_kind);
}

Json score_function_json(const ScoreFunction& fn) {
  Json j;
  j["kind"] = std::string(to_string(fn.kind()));
  if (const auto& w = fn.hss_weights()) {
    j["hss_weights"] = Json::array({w->w_row, w->w_col, w->w_text});
  } else {
    j["hss_weights"] = nullptr;
  }
  return j;
}

ScoreFunction score_function_from_json(const Json& j) {
  const ScoreKind kind = parse_score_kind(j.at("kind").get<std::string>());
  if (kind != ScoreKind::kHss) return ScoreFunction::make(kind);
  const Json& w = j.at("hss_weights");
  return ScoreFunction::hss({w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()});
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json hss_tune_json(const HssTuneResult& r) {
  Json j;
  j["weights"] = Json::array({r.weights.w_row, r.weights.w_col, r.weights.w_text});
  j["feasible"] = r.feasible;
  j["flagged_fraction"] = r.flagged_fraction;
  j["error_recall"] = r.error_recall;
  j["warning"] = optional_json(r.warning);
  return j;
}

HssTuneResult hss_tune_from_json(const Json& j) {
  HssTuneResult r;
  const auto& w = j.at("weights");
  r.weights = {w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()};
  r.feasible = j.at("feasible").get<bool>();
  r.flagged_fraction = j.at("flagged_fraction").get<double>();
  r.error_recall = j.at("error_recall").get<double>();
  if (!j.at("warning").is_null()) r.warning = j.at("warning").get<std::string>();
  return r;
}

SweepResult sweep_from_json(const Json& j) {
  SweepResult s;
  s.best_tau = j.at("best_tau").get<double>();
  s.best_f1 = j.at("best_f1").get<double>();
  for (const auto& e : j.at("points")) {
    s.points.push_back({e.at("tau").get<double>(), e.at("precision").get<double>(),
                        e.at("recall").get<double>(), e.at("f1").get<double>(),
                        e.at("flagged").get<std::size_t>(), e.at("true_positive").get<std::size_t>()});
  }
  return s;
}

// Labels every cell of every table that has ground truth.
std::map<CellKey, bool> label_cells(
    const std::vector<ExtractedTable>& tables,
    const std::map<std::string, std::vector<GroundTruthCell>>& ground_truth,
    double similarity_threshold) {
  std::map<CellKey, bool> labels;
  for (const auto& t : tables) {
    auto gt = ground_truth.find(t.table_id);
    if (gt == ground_truth.end()) continue;
    const auto matches = match_ground_truth(t.cells, gt->second);
    for (std::size_t i = 0; i < t.cells.size(); ++i) {
      const GroundTruthCell* g = matches[i] ? &gt->second[*matches[i]] : nullptr;
      labels[{t.table_id, t.cells[i].cell.row_index, t.cells[i].cell.col_index}] =
          label_correct(t.cells[i], g, similarity_threshold);
    }
  }
  return labels;
}

std::vector<CalibCell> gather_calibration(const std::vector<ExtractedTable>& tables,
                                          const std::vector<CellKey>& split,
                                          const std::map<CellKey, bool>* labels) {
  const std::set<CellKey> wanted(split.begin(), split.end());
  std::vector<CalibCell> out;
  std::vector<std::string> unlabeled;
  for (const auto& t : tables) {
    for (const auto& c : t.cells) {
      const CellKey key{t.table_id, c.cell.row_index, c.cell.col_index};
      if (!wanted.count(key)) continue;
      CalibCell cc{&t.domain, &c, std::nullopt};
      if (labels) {
        auto it = labels->find(key);
        if (it == labels->end()) {
          if (unlabeled.empty() || unlabeled.back() != t.table_id) unlabeled.push_back(t.table_id);
          continue;
        }
        cc.correct = it->second;
      }
      out.push_back(cc);
    }
  }
  if (!unlabeled.empty()) {
    std::string msg = "ground truth required for tuning but missing for:";
    for (const auto& id : unlabeled) msg += " " + id;
    throw InputError(msg);
  }
  return out;
}

struct QuantileSet {
  double pooled = 0.0;
  std::map<std::string, double> by_domain;

  double for_domain(const std::string& d) const {
    auto it = by_domain.find(d);
    return it == by_domain.end() ? pooled : it->second;
  }
};

QuantileSet compute_quantiles(const std::vector<CalibCell>& calib, const ScoreFunction& fn,
                              const RunConfig& cfg, std::vector<double>& scores) {
  scores.clear();
  std::map<std::string, std::vector<double>> per_domain;
  for (const auto& c : calib) {
    scores.push_back(score(fn, to_record(*c.cell)));
    if (cfg.per_domain_calibration) per_domain[*c.domain].push_back(scores.back());
  }
  QuantileSet q;
  q.pooled = calibrate(scores, cfg.alpha);
  for (const auto& [domain, s] : per_domain) q.by_domain[domain] = calibrate(s, cfg.alpha);
  return q;
}

SweepResult sweep_calibration(const std::vector<CalibCell>& calib,
                              const std::vector<double>& scores, const QuantileSet& q,
                              const std::vector<double>& taus) {
  std::vector<LabeledUncertainty> labeled;
  labeled.reserve(calib.size());
  for (std::size_t i = 0; i < calib.size(); ++i) {
    labeled.push_back({uncertainty(scores[i], q.for_domain(*calib[i].domain)), *calib[i].correct});
  }
  return sweep_flag_threshold(labeled, taus);
}

HssWeights tuned_or_fixed_weights(const std::vector<CalibCell>& calib, const RunConfig& cfg,
                                  std::optional<HssTuneResult>& tune_out) {
  if (cfg.hss_weights) return *cfg.hss_weights;
  std::vector<ConformalRecord> records;
  records.reserve(calib.size());
  for (const auto& c : calib) records.push_back(to_record(*c.cell, c.correct));
  tune_out = tune_hss_weights(records, cfg.alpha, cfg.hss_grid_step);
  return tune_out->weights;
}

std::vector<ExtractedTable> extract_all(const std::vector<TableJob>& jobs, const RunConfig& cfg) {
  std::vector<ExtractedTable> tables;
  tables.reserve(jobs.size());
  for (const auto& job : jobs) tables.push_back(run_extract(job, cfg));
  return tables;
}

std::map<std::string, std::vector<GroundTruthCell>> load_available_ground_truth(
    const std::vector<TableJob>& jobs) {
  std::map<std::string, std::vector<GroundTruthCell>> gt;
  for (const auto& job : jobs) {
    if (!job.gt_input) continue;
    try {
      gt[job.table_id] = parse_ground_truth(read_json_file(*job.gt_input));
    } catch (const InputError& e) {
      throw InputError(job.table_id + " (ground truth): " + e.what());
    }
  }
  return gt;
}

Json cell_json(const ExtractedCell& c) {
  Json j;
  j["row"] = c.cell.row_index;
  j["col"] = c.cell.col_index;
  j["bbox"] = bbox_to_json(c.cell.bbox);
  j["row_confidence"] = c.cell.row_confidence;
  j["col_confidence"] = c.cell.col_confidence;
  j["location_confidence"] = c.cell.location_confidence;
  j["text"] = c.text;
  j["ocr_confidence"] = c.ocr_confidence;
  j["matched_span_count"] = c.matched_span_count;
  j["text_bbox"] = c.text_bbox ? bbox_to_json(*c.text_bbox) : Json(nullptr);
  j["score"] = optional_json(c.score);
  j["uncertainty"] = optional_json(c.uncertainty);
  j["flagged"] = c.flagged;
  return j;
}

Json counts_json(const ReportCounts& c) {
  Json j;
  j["total"] = c.total;
  j["flagged"] = c.flagged;
  j["incorrect"] = c.incorrect;
  j["true_positive"] = c.true_positive;
  j["corrected"] = c.corrected;
  j["remaining_incorrect"] = c.remaining_incorrect;
  return j;
}

}  // namespace

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
  if (tau && !(*tau >= 0.0)) throw InputError("tau must be >= 0");
  if (!(ioa_threshold > 0.0 && ioa_threshold <= 1.0)) {
    throw InputError("ioa threshold must lie in (0,1]");
  }
  if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0)) {
    throw InputError("similarity threshold must lie in [0,1]");
  }
  if (!(calib_fraction > 0.0 && calib_fraction < 1.0)) {
    throw InputError("calib fraction must lie in (0,1)");
  }
  if (!(hss_grid_step > 0.0 && hss_grid_step < 1.0)) {
    throw InputError("HSS grid step must lie in (0,1)");
  }
  if (hss_weights) ScoreFunction::hss(*hss_weights);
}

Json to_json(const RunConfig& cfg) {
  Json j;
  j["score_fn"] = std::string(to_string(cfg.score_kind));
  j["alpha"] = cfg.alpha;
  j["tau"] = cfg.tau ? Json(*cfg.tau) : Json("auto");
  j["ioa_threshold"] = cfg.ioa_threshold;
  j["similarity_threshold"] = cfg.similarity_threshold;
  j["calib_fraction"] = cfg.calib_fraction;
  j["seed"] = cfg.seed;
  j["hss_weights"] = cfg.hss_weights ? Json::array({cfg.hss_weights->w_row, cfg.hss_weights->w_col,
                                                    cfg.hss_weights->w_text})
                                     : Json("auto");
  j["hss_grid_step"] = cfg.hss_grid_step;
  j["per_domain_calibration"] = cfg.per_domain_calibration;
  return j;
}

namespace {

RunConfig config_from_json(const Json& j) {
  RunConfig cfg;
  cfg.score_kind = parse_score_kind(j.at("score_fn").get<std::string>());
  cfg.alpha = j.at("alpha").get<double>();
  if (j.at("tau").is_number()) {
    cfg.tau = j.at("tau").get<double>();
  } else {
    cfg.tau.reset();
  }
  cfg.ioa_threshold = j.at("ioa_threshold").get<double>();
  cfg.similarity_threshold = j.at("similarity_threshold").get<double>();
  cfg.calib_fraction = j.at("calib_fraction").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.at("hss_weights").is_array()) {
    const Json& w = j.at("hss_weights");
    cfg.hss_weights = HssWeights{w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()};
  }
  cfg.hss_grid_step = j.at("hss_grid_step").get<double>();
  cfg.per_domain_calibration = j.at("per_domain_calibration").get<bool>();
  return cfg;
}

}  // namespace

double CalibrationArtifact::q_hat_for(const std::string& domain) const {
  auto it = q_hat_by_domain.find(domain);
  return it == q_hat_by_domain.end() ? model.q_hat : it->second;
}

Json to_json(const CalibrationArtifact& a) {
  Json j;
  j["score_function"] = score_function_json(a.model.score_function);
  j["alpha"] = a.model.alpha;
  j["q_hat"] = a.model.q_hat;
  Json by_domain = Json::object();
  for (const auto& [d, q] : a.q_hat_by_domain) by_domain[d] = q;
  j["q_hat_by_domain"] = std::move(by_domain);
  j["flag_threshold_tau"] = a.model.flag_threshold_tau;
  j["calibration_size"] = a.model.calibration_size;
  j["seed"] = a.config.seed;
  j["config"] = to_json(a.config);
  j["tau_sweep"] = a.tau_sweep ? to_json(*a.tau_sweep) : Json(nullptr);
  j["hss_tune"] = a.hss_tune ? hss_tune_json(*a.hss_tune) : Json(nullptr);
  Json cells = Json::array();
  for (const auto& k : a.calibration_cells) cells.push_back(Json::array({k.table_id, k.row, k.col}));
  j["calibration_cells"] = std::move(cells);
  return j;
}

CalibrationArtifact calibration_from_json(const Json& j) {
  try {
    CalibrationArtifact a;
    a.model.score_function = score_function_from_json(j.at("score_function"));
    a.model.alpha = j.at("alpha").get<double>();
    a.model.q_hat = j.at("q_hat").get<double>();
    for (const auto& [d, q] : j.at("q_hat_by_domain").items()) a.q_hat_by_domain[d] = q.get<double>();
    a.model.flag_threshold_tau = j.at("flag_threshold_tau").get<double>();
    a.model.calibration_size = j.at("calibration_size").get<std::size_t>();
    a.config = config_from_json(j.at("config"));
    for (const auto& k : j.at("calibration_cells")) {
      a.calibration_cells.push_back({k.at(0).get<std::string>(), k.at(1).get<int>(), k.at(2).get<int>()});
    }
    if (j.contains("tau_sweep") && !j["tau_sweep"].is_null()) a.tau_sweep = sweep_from_json(j["tau_sweep"]);
    if (j.contains("hss_tune") && !j["hss_tune"].is_null()) a.hss_tune = hss_tune_from_json(j["hss_tune"]);
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("calibration model: ") + e.what());
  }
}

ExtractedTable extract_table(const std::string& table_id, const std::string& domain,
                             const TsrInput& tsr, const OcrInput& ocr, double ioa_threshold) {
  ExtractedTable t;
  t.table_id = table_id;
  t.domain = domain;
  t.image = ocr.image;
  try {
    const auto structures = normalize_structures(tsr.rows, tsr.cols, tsr.image, ocr.image);
    auto grid = build_grid(structures.rows, structures.cols);
    auto aligned = match_spans(grid.cells, ocr.spans, ioa_threshold);
    t.cells = std::move(aligned.cells);
    t.unmatched = std::move(aligned.unmatched);
    t.warnings = std::move(grid.warnings);
  } catch (const DegenerateDataError& e) {
    throw DegenerateDataError(table_id + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(table_id + ": " + e.what());
  }
  return t;
}

void score_cells(ExtractedTable& table, const ScoreFunction& fn, const CalibrationArtifact* model) {
  const double q_hat = model ? model->q_hat_for(table.domain) : 0.0;
  for (auto& c : table.cells) {
    c.score = score(fn, to_record(c));
    if (model) {
      c.uncertainty = uncertainty(*c.score, q_hat);
      c.flagged = flag(*c.uncertainty, model->model.flag_threshold_tau);
    } else {
      c.uncertainty.reset();
      c.flagged = false;
    }
  }
}

ExtractedTable run_extract(const TableJob& job, const RunConfig& cfg,
                           const CalibrationArtifact* model) {
  validate_table_id(job.table_id);
  TsrInput tsr;
  OcrInput ocr;
  try {
    tsr = parse_tsr(read_json_file(job.tsr_input));
  } catch (const InputError& e) {
    throw InputError(job.table_id + " (tsr): " + e.what());
  }
  try {
    ocr = parse_ocr(read_json_file(job.ocr_input));
  } catch (const InputError& e) {
    throw InputError(job.table_id + " (ocr): " + e.what());
  }
  auto table = extract_table(job.table_id, job.domain, tsr, ocr, cfg.ioa_threshold);
  score_cells(table, model ? model->model.score_function : config_score_function(cfg), model);
  return table;
}

Json cells_artifact(const ExtractedTable& table, const ScoreFunction& fn,
                    std::optional<double> q_hat) {
  Json j;
  j["table_id"] = table.table_id;
  j["domain"] = table.domain;
  j["image"] = Json{{"width", table.image.width}, {"height", table.image.height}};
  j["score_function"] = score_function_json(fn);
  j["q_hat"] = optional_json(q_hat);
  Json cells = Json::array();
  for (const auto& c : table.cells) cells.push_back(cell_json(c));
  j["cells"] = std::move(cells);
  Json unmatched = Json::array();
  for (const auto& s : table.unmatched) {
    unmatched.push_back(Json{{"bbox", bbox_to_json(s.bbox)}, {"text", s.text}, {"confidence", s.confidence}});
  }
  j["unmatched_spans"] = std::move(unmatched);
  j["warnings"] = table.warnings;
  return j;
}

std::vector<CellKey> calibration_split(const std::vector<ExtractedTable>& tables,
                                       double fraction, std::uint64_t seed) {
  std::map<std::string, std::vector<CellKey>> by_domain;
  for (const auto& t : tables) {
    for (const auto& c : t.cells) {
      by_domain[t.domain].push_back({t.table_id, c.cell.row_index, c.cell.col_index});
    }
  }
  Rng rng(seed);
  std::vector<CellKey> split;
  for (auto& [domain, keys] : by_domain) {
    std::sort(keys.begin(), keys.end());
    shuffle(keys, rng);
    const auto take = static_cast<std::size_t>(
        std::min<long long>(std::llround(fraction * static_cast<double>(keys.size())),
                            static_cast<long long>(keys.size())));
    split.insert(split.end(), keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(split.begin(), split.end());
  return split;
}

CalibrationArtifact calibrate_tables(
    std::vector<ExtractedTable> tables,
    const std::map<std::string, std::vector<GroundTruthCell>>& ground_truth,
    const RunConfig& cfg) {
  cfg.validate();
  CalibrationArtifact a;
  a.config = cfg;
  a.model.alpha = cfg.alpha;
  a.calibration_cells = calibration_split(tables, cfg.calib_fraction, cfg.seed);
  if (a.calibration_cells.empty()) throw DegenerateDataError("calibration split is empty");

  const bool tune_weights = cfg.score_kind == ScoreKind::kHss && !cfg.hss_weights;
  const bool need_labels = !cfg.tau || tune_weights;
  std::map<CellKey, bool> labels;
  if (need_labels) labels = label_cells(tables, ground_truth, cfg.similarity_threshold);
  const auto calib = gather_calibration(tables, a.calibration_cells, need_labels ? &labels : nullptr);

  a.model.score_function =
      cfg.score_kind == ScoreKind::kHss
          ? ScoreFunction::hss(tuned_or_fixed_weights(calib, cfg, a.hss_tune))
          : ScoreFunction::make(cfg.score_kind);

  std::vector<double> scores;
  const auto q = compute_quantiles(calib, a.model.score_function, cfg, scores);
  a.model.q_hat = q.pooled;
  a.q_hat_by_domain = q.by_domain;
  a.model.calibration_size = calib.size();

  if (cfg.tau) {
    a.model.flag_threshold_tau = *cfg.tau;
  } else {
    a.tau_sweep = sweep_calibration(calib, scores, q, default_tau_grid());
    a.model.flag_threshold_tau = a.tau_sweep->best_tau;
  }
  return a;
}

CalibrationArtifact run_calibrate(const std::vector<TableJob>& jobs, const RunConfig& cfg) {
  cfg.validate();
  if (jobs.empty()) throw InputError("at least one table is required");
  return calibrate_tables(extract_all(jobs, cfg), load_available_ground_truth(jobs), cfg);
}

std::map<std::string, std::vector<GroundTruthCell>> load_ground_truth(
    const std::vector<TableJob>& jobs) {
  std::string missing;
  for (const auto& job : jobs) {
    if (!job.gt_input) missing += " " + job.table_id;
  }
  if (!missing.empty()) throw InputError("ground truth missing for:" + missing);
  return load_available_ground_truth(jobs);
}

EvaluationOutput evaluate_tables(
    std::vector<ExtractedTable> tables,
    const std::map<std::string, std::vector<GroundTruthCell>>& ground_truth,
    const CalibrationArtifact& model, double similarity_threshold) {
  std::string missing;
  for (const auto& t : tables) {
    if (!ground_truth.count(t.table_id)) missing += " " + t.table_id;
  }
  if (!missing.empty()) throw InputError("ground truth missing for:" + missing);

  const std::set<CellKey> calib(model.calibration_cells.begin(), model.calibration_cells.end());
  EvaluationOutput out;
  std::map<std::string, ReportCounts> domain_counts;
  ReportCounts all;

  for (auto& t : tables) {
    score_cells(t, model.model.score_function, &model);
    const auto& gt = ground_truth.at(t.table_id);
    const auto matches = match_ground_truth(t.cells, gt);
    std::vector<const GroundTruthCell*> gt_ptrs(t.cells.size(), nullptr);
    for (std::size_t i = 0; i < t.cells.size(); ++i) {
      if (matches[i]) gt_ptrs[i] = &gt[*matches[i]];
    }
    const auto outcomes = emulate_human_correction(t.cells, gt_ptrs);

    EvaluatedTable et;
    et.table_id = t.table_id;
    et.domain = t.domain;
    std::vector<LabeledCell> held_out;
    std::set<CellKey> corrected;
    for (std::size_t i = 0; i < t.cells.size(); ++i) {
      const auto& c = t.cells[i];
      const CellKey key{t.table_id, c.cell.row_index, c.cell.col_index};
      EvaluatedCell ec;
      ec.cell = c;
      ec.calibration = calib.count(key) > 0;
      if (gt_ptrs[i]) ec.gt_text = gt_ptrs[i]->text;
      ec.correct = label_correct(c, gt_ptrs[i], similarity_threshold);
      ec.status = outcomes[i].status;
      ec.text_after = outcomes[i].cell.text;
      ec.correct_after = label_correct(outcomes[i].cell, gt_ptrs[i], similarity_threshold);
      if (!ec.calibration) {
        held_out.push_back({key, c, ec.correct});
        if (ec.status == ReviewStatus::kCorrected) corrected.insert(key);
      }
      et.cells.push_back(std::move(ec));
    }
    if (!held_out.empty()) {
      et.report = compute_report(held_out, corrected);
      auto& dc = domain_counts[t.domain];
      for (auto* acc : {&dc, &all}) {
        acc->total += et.report->counts.total;
        acc->flagged += et.report->counts.flagged;
        acc->incorrect += et.report->counts.incorrect;
        acc->true_positive += et.report->counts.true_positive;
        acc->corrected += et.report->counts.corrected;
        acc->remaining_incorrect += et.report->counts.remaining_incorrect;
      }
    }
    out.tables.push_back(std::move(et));
  }
  if (all.total == 0) throw DegenerateDataError("no held-out cells to evaluate");
  for (const auto& [d, c] : domain_counts) out.domains[d] = report_from_counts(c);
  out.all = report_from_counts(all);
  return out;
}

EvaluationOutput run_evaluate(const std::vector<TableJob>& jobs, const CalibrationArtifact& model,
                              const RunConfig& cfg) {
  cfg.validate();
  auto gt = load_ground_truth(jobs);
  auto out = evaluate_tables(extract_all(jobs, cfg), gt, model, cfg.similarity_threshold);
  for (std::size_t i = 0; i < jobs.size(); ++i) out.tables[i].image_ref = jobs[i].image_ref;
  return out;
}

Json to_json(const EvaluationReport& r) {
  Json j;
  j["accuracy_before"] = r.accuracy_before;
  j["error_rate_before"] = r.error_rate_before;
  j["precision_uq"] = r.precision_uq;
  j["recall_uq"] = r.recall_uq;
  j["f1_uq"] = r.f1_uq;
  j["labor_savings"] = r.labor_savings;
  j["error_rate_after_hc"] = r.error_rate_after_hc;
  j["counts"] = counts_json(r.counts);
  j["precision_degenerate"] = r.precision_degenerate;
  j["recall_degenerate"] = r.recall_degenerate;
  return j;
}

EvaluationReport report_from_json(const Json& j) {
  try {
    const Json& c = j.at("counts");
    ReportCounts counts;
    counts.total = c.at("total").get<std::size_t>();
    counts.flagged = c.at("flagged").get<std::size_t>();
    counts.incorrect = c.at("incorrect").get<std::size_t>();
    counts.true_positive = c.at("true_positive").get<std::size_t>();
    counts.corrected = c.at("corrected").get<std::size_t>();
    counts.remaining_incorrect = c.at("remaining_incorrect").get<std::size_t>();
    return report_from_counts(counts);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("report: ") + e.what());
  }
}

Json report_artifact(const EvaluationOutput& out, const CalibrationArtifact& model,
                     const RunConfig& cfg) {
  Json j;
  j["config"] = to_json(cfg);
  j["seed"] = cfg.seed;
  Json m;
  m["score_function"] = score_function_json(model.model.score_function);
  m["alpha"] = model.model.alpha;
  m["q_hat"] = model.model.q_hat;
  m["flag_threshold_tau"] = model.model.flag_threshold_tau;
  m["calibration_size"] = model.model.calibration_size;
  m["calibration_seed"] = model.config.seed;
  j["model"] = std::move(m);
  j["all"] = to_json(out.all);
  Json domains = Json::object();
  for (const auto& [d, r] : out.domains) domains[d] = to_json(r);
  j["domains"] = std::move(domains);
  Json tables = Json::object();
  for (const auto& t : out.tables) tables[t.table_id] = t.report ? to_json(*t.report) : Json(nullptr);
  j["tables"] = std::move(tables);
  return j;
}

Json evaluated_cells_artifact(const EvaluatedTable& table) {
  Json j;
  j["table_id"] = table.table_id;
  j["domain"] = table.domain;
  Json cells = Json::array();
  for (const auto& ec : table.cells) {
    Json c = cell_json(ec.cell);
    c["split"] = ec.calibration ? "calibration" : "evaluation";
    c["gt_text"] = optional_json(ec.gt_text);
    c["correct"] = ec.correct;
    c["review_status"] = std::string(to_string(ec.status));
    c["text_after"] = ec.text_after;
    c["correct_after"] = ec.correct_after;
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  return j;
}

void write_evaluation(const std::filesystem::path& out_dir, const EvaluationOutput& out,
                      const CalibrationArtifact& model, const RunConfig& cfg) {
  write_json_file(out_dir / "report.json", report_artifact(out, model, cfg));
  Json state;
  state["score_function"] = score_function_json(model.model.score_function);
  state["q_hat"] = model.model.q_hat;
  state["flag_threshold_tau"] = model.model.flag_threshold_tau;
  Json tables = Json::array();
  for (const auto& t : out.tables) {
    const std::string file = "cells/" + t.table_id + ".json";
    write_json_file(out_dir / file, evaluated_cells_artifact(t));
    Json e;
    e["table_id"] = t.table_id;
    e["domain"] = t.domain;
    e["cells_file"] = file;
    e["image"] = t.image_ref ? Json(std::filesystem::absolute(*t.image_ref).string()) : Json(nullptr);
    tables.push_back(std::move(e));
  }
  state["tables"] = std::move(tables);
  write_json_file(out_dir / "state.json", state);
}

Json to_json(const SweepResult& s) {
  Json j;
  j["best_tau"] = s.best_tau;
  j["best_f1"] = s.best_f1;
  Json pts = Json::array();
  for (const auto& p : s.points) {
    Json e;
    e["tau"] = p.tau;
    e["precision"] = p.precision;
    e["recall"] = p.recall;
    e["f1"] = p.f1;
    e["flagged"] = p.flagged;
    e["true_positive"] = p.true_positive;
    pts.push_back(std::move(e));
  }
  j["points"] = std::move(pts);
  return j;
}

Json to_json(const TuneOutput& out) {
  Json j;
  j["best_score_fn"] = std::string(to_string(out.best));
  Json fns = Json::array();
  for (const auto& f : out.functions) {
    Json e;
    e["score_fn"] = std::string(to_string(f.kind));
    e["q_hat"] = f.q_hat;
    e["sweep"] = to_json(f.sweep);
    fns.push_back(std::move(e));
  }
  j["functions"] = std::move(fns);
  return j;
}

TuneOutput tune_tables(const std::vector<ExtractedTable>& tables,
                       const std::map<std::string, std::vector<GroundTruthCell>>& ground_truth,
                       const RunConfig& cfg, const std::vector<ScoreKind>& kinds,
                       const std::vector<double>& taus) {
  cfg.validate();
  if (kinds.empty()) throw InputError("no score function to tune");
  const auto split = calibration_split(tables, cfg.calib_fraction, cfg.seed);
  if (split.empty()) throw DegenerateDataError("calibration split is empty");
  const auto labels = label_cells(tables, ground_truth, cfg.similarity_threshold);
  const auto calib = gather_calibration(tables, split, &labels);

  TuneOutput out;
  std::vector<double> scores;
  for (ScoreKind kind : kinds) {
    RunConfig kcfg = cfg;
    kcfg.score_kind = kind;
    std::optional<HssTuneResult> ignored;
    const ScoreFunction fn = kind == ScoreKind::kHss
                                 ? ScoreFunction::hss(tuned_or_fixed_weights(calib, kcfg, ignored))
                                 : ScoreFunction::make(kind);
    const auto q = compute_quantiles(calib, fn, kcfg, scores);
    ScoreFunctionTuning t{kind, q.pooled, sweep_calibration(calib, scores, q, taus)};
    out.functions.push_back(std::move(t));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.functions.size(); ++i) {
    if (out.functions[i].sweep.best_f1 > out.functions[best].sweep.best_f1) best = i;
  }
  out.best = out.functions[best].kind;
  return out;
}

TuneOutput run_tune(const std::vector<TableJob>& jobs, const RunConfig& cfg,
                    const std::vector<ScoreKind>& kinds, const std::vector<double>& taus) {
  cfg.validate();
  return tune_tables(extract_all(jobs, cfg), load_ground_truth(jobs), cfg, kinds, taus);
}

}  // namespace tabuq
