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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "support.hpp"
#include "tabuq/conformal.hpp"
#include "tabuq/error.hpp"
#include "tabuq/evaluation.hpp"
#include "tabuq/pipeline.hpp"
#include "tabuq/synth.hpp"

using namespace tabuq;
using Dec = boost::multiprecision::cpp_dec_float_50;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Coverage of a held-out test set by q_hat, averaged over trials; tolerance 0.03, budget 30 s.
Outcome conformal_coverage() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  bool ok = true;
  std::string detail;
  for (double alpha : {0.05, 0.1, 0.2}) {
    double sum = 0.0;
    std::vector<double> calib(500), test(500);
    for (int trial = 0; trial < 1000; ++trial) {
      for (auto& s : calib) s = std::pow(uniform_real(rng, 0, 1), 3.0);
      for (auto& s : test) s = std::pow(uniform_real(rng, 0, 1), 3.0);
      const double q = calibrate(calib, alpha);
      sum += static_cast<double>(std::count_if(test.begin(), test.end(), [q](double s) { return s <= q; })) / 500.0;
    }
    const double mean = sum / 1000.0;
    ok = ok && mean >= 1.0 - alpha - 0.03;
    detail += fmt("alpha=%.2f coverage=%.4f (min %.2f); ", alpha, mean, 1.0 - alpha - 0.03);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 30.0;
  return {ok, detail + fmt("%.2fs (limit 30s)", secs)};
}

// Exact agreement with sort-and-index on 10,000 instances, n <= 50, alpha = k/1000.
Outcome quantile_oracle() {
  Rng rng(77);
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto n = 1 + uniform_index(rng, 50);
    const auto k = 1 + uniform_index(rng, 999);
    const double alpha = static_cast<double>(k) / 1000.0;
    std::vector<double> s(n);
    const bool ties = bernoulli(rng, 0.3);
    for (auto& v : s) v = ties ? static_cast<double>(uniform_index(rng, 5)) / 4.0 : uniform_real(rng, 0, 1);
    auto sorted = s;
    std::sort(sorted.begin(), sorted.end());
    // ceil((n+1)(1000-k)/1000) in integers, clamped to [1, n].
    const std::uint64_t num = (n + 1) * (1000 - k);
    std::uint64_t rank = (num + 999) / 1000;
    rank = std::clamp<std::uint64_t>(rank, 1, n);
    if (calibrate(s, alpha) != sorted[rank - 1]) ++mismatches;
  }
  return {mismatches == 0, fmt("%zu mismatches in 10000 instances", mismatches)};
}

// IoA against pixel counting on 1,000 box pairs (corners on a 1/4 grid, 4x supersampling), tol 1e-6.
Outcome geometry_oracle() {
  Rng rng(31);
  double worst = 0.0;
  int overlapping = 0;
  for (int i = 0; i < 1000; ++i) {
    const BBox span = testing::random_grid_box(rng, 64, 4);
    BBox cell = testing::random_grid_box(rng, 64, 4);
    if (i % 2 == 0) {
      // Cells straddling the span so most pairs overlap partially.
      const double dx = static_cast<double>(uniform_index(rng, 33)) / 4.0 - 4.0;
      const double dy = static_cast<double>(uniform_index(rng, 33)) / 4.0 - 4.0;
      const double w = static_cast<double>(1 + uniform_index(rng, 80)) / 4.0;
      const double h = static_cast<double>(1 + uniform_index(rng, 80)) / 4.0;
      const double x0 = std::max(0.0, span.x0 + dx), y0 = std::max(0.0, span.y0 + dy);
      cell = {x0, y0, x0 + w, y0 + h};
    }
    const double got = intersection_over_area(span, cell);
    overlapping += got > 0.0;
    worst = std::max(worst, std::abs(got - testing::raster_ioa(span, cell, 4)));
  }
  return {worst <= 1e-6, fmt("max |diff| = %.3g over 1000 pairs (%d overlapping), tol 1e-6", worst, overlapping)};
}

std::size_t dp_distance(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
  return d[a.size()][b.size()];
}

std::string utf8(const std::u32string& s) {
  std::string out;
  for (char32_t c : s) {
    if (c < 0x80) {
      out += static_cast<char>(c);
    } else if (c < 0x800) {
      out += static_cast<char>(0xC0 | (c >> 6));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else {
      out += static_cast<char>(0xE0 | (c >> 12));
      out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    }
  }
  return out;
}

// DP recurrence on 10,000 pairs (length <= 12), metric axioms, and the kitten/sitting example.
Outcome levenshtein_oracle() {
  Rng rng(55);
  const std::u32string alphabet = U"abcdé€";
  auto draw = [&] {
    std::u32string s;
    for (auto n = uniform_index(rng, 13); n > 0; --n) s += alphabet[uniform_index(rng, alphabet.size())];
    return s;
  };
  std::size_t dp_bad = 0, axiom_bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = draw(), b = draw(), c = draw();
    const auto ab = levenshtein_distance(utf8(a), utf8(b));
    if (ab != dp_distance(a, b)) ++dp_bad;
    const auto ba = levenshtein_distance(b, a);
    const auto ac = levenshtein_distance(a, c), cb = levenshtein_distance(c, b);
    if (ab != ba || (ab == 0) != (a == b) || levenshtein_distance(a, a) != 0 || ab > ac + cb) ++axiom_bad;
  }
  const auto k = levenshtein_distance(std::string_view("kitten"), std::string_view("sitting"));
  const double acc = levenshtein_accuracy("kitten", "sitting");
  const bool ok = dp_bad == 0 && axiom_bad == 0 && k == 3 && std::abs(acc - (1.0 - 3.0 / 7.0)) < 1e-15;
  return {ok, fmt("DP mismatches %zu, axiom violations %zu, d(kitten,sitting)=%zu, accuracy=%.6f", dp_bad,
                  axiom_bad, k, acc)};
}

// Score functions against 50-digit recomputation on 1,000 random records and weights, tol 1e-12.
Outcome formula_fidelity() {
  Rng rng(99);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    ConformalRecord r;
    r.row_confidence = uniform_real(rng, 0, 1);
    r.col_confidence = uniform_real(rng, 0, 1);
    r.tsr_confidence = uniform_real(rng, 0, 1);
    r.ocr_confidence = uniform_real(rng, 0, 1);
    const HssWeights w{uniform_real(rng, 0, 1), uniform_real(rng, 0, 1), uniform_real(rng, 0, 1)};
    const Dec tsr = r.tsr_confidence, ocr = r.ocr_confidence, row = r.row_confidence, col = r.col_confidence;
    const Dec one = 1;
    const Dec lac = one - (tsr < ocr ? tsr : ocr);
    const Dec aps = one - (tsr + ocr) / 2;
    const Dec r_struct = sqrt((one - Dec(w.w_row) * (one - row)) * (one - Dec(w.w_col) * (one - col)));
    const Dec r_content = Dec(w.w_text) * ocr;
    const Dec hss = one - sqrt(r_struct * r_content);
    worst = std::max({worst, std::abs(score_lac(r) - lac.convert_to<double>()),
                      std::abs(score_aps(r) - aps.convert_to<double>()),
                      std::abs(score_hss(r, w) - hss.convert_to<double>())});
  }
  return {worst <= 1e-12, fmt("max |diff| = %.3g over 1000 records, tol 1e-12", worst)};
}

// Report identities on 100 random batches run through emulated correction, plus 47 flagged of 100.
Outcome metric_identities() {
  Rng rng(123);
  std::size_t bad = 0;
  for (int run = 0; run < 100; ++run) {
    const auto n = 20 + uniform_index(rng, 480);
    const double p_flag = uniform_real(rng, 0, 0.6), p_wrong = uniform_real(rng, 0, 0.4);
    std::vector<ExtractedCell> cells(n);
    std::vector<GroundTruthCell> gts(n);
    std::vector<const GroundTruthCell*> matches(n);
    std::vector<bool> correct(n);
    for (std::size_t i = 0; i < n; ++i) {
      cells[i].cell.row_index = static_cast<int>(i);
      cells[i].flagged = bernoulli(rng, p_flag);
      correct[i] = !bernoulli(rng, p_wrong);
      gts[i].text = "v" + std::to_string(i);
      cells[i].text = correct[i] ? gts[i].text : "x" + std::to_string(i);
      matches[i] = bernoulli(rng, 0.1) ? nullptr : &gts[i];
      if (!matches[i]) correct[i] = false;
    }
    const auto outcomes = emulate_human_correction(cells, matches);
    std::vector<LabeledCell> labeled;
    std::set<CellKey> fixed;
    std::size_t flagged = 0, unflagged_wrong = 0, unresolvable_wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const CellKey key{"t", static_cast<int>(i), 0};
      labeled.push_back({key, cells[i], correct[i]});
      flagged += cells[i].flagged;
      if (!correct[i] && !cells[i].flagged) ++unflagged_wrong;
      if (!correct[i] && outcomes[i].status == ReviewStatus::kUnresolvable) ++unresolvable_wrong;
      if (outcomes[i].status == ReviewStatus::kCorrected &&
          normalize_text(outcomes[i].cell.text) == normalize_text(gts[i].text)) {
        fixed.insert(key);
      }
    }
    const auto r = compute_report(labeled, fixed);
    const double N = static_cast<double>(n);
    if (std::abs(r.accuracy_before + r.error_rate_before - 1.0) > 1e-12) ++bad;
    if (std::abs(r.labor_savings - (1.0 - static_cast<double>(flagged) / N)) > 1e-12) ++bad;
    if (r.error_rate_after_hc != static_cast<double>(unflagged_wrong + unresolvable_wrong) / N) ++bad;
  }
  std::vector<LabeledCell> hundred;
  for (int i = 0; i < 100; ++i) {
    LabeledCell l{{"t", i, 0}, {}, true};
    l.cell.flagged = i < 47;
    hundred.push_back(l);
  }
  const double savings = compute_report(hundred, {}).labor_savings;
  const bool ok = bad == 0 && std::abs(savings - 0.53) < 1e-12;
  return {ok, fmt("%zu identity violations in 100 runs; 47 flagged of 100 -> labor savings %.4f", bad, savings)};
}

RunConfig fixture_config() {
  RunConfig cfg;
  cfg.score_kind = ScoreKind::kAps;
  cfg.alpha = 0.2;
  cfg.tau.reset();
  return cfg;
}

// Shipped 20-table corpus: recall >= 0.9, relative error reduction >= 50%, deterministic, < 60 s.
Outcome end_to_end() {
  const auto t0 = Clock::now();
  const auto jobs = load_manifest(testing::kFixtures / "manifest.json");
  const auto cfg = fixture_config();
  const auto model = run_calibrate(jobs, cfg);
  const auto out = run_evaluate(jobs, model, cfg);
  const auto model2 = run_calibrate(jobs, cfg);
  const auto out2 = run_evaluate(jobs, model2, cfg);
  const bool same_run = to_json(model) == to_json(model2) &&
                        report_artifact(out, model, cfg) == report_artifact(out2, model2, cfg);

  bool same_corpus = true;
  const auto regenerated = make_corpus(SynthOptions{});
  for (const auto& t : regenerated) {
    const auto base = testing::kFixtures / t.table_id;
    same_corpus = same_corpus && read_json_file(base.string() + ".tsr.json") == to_json(t.tsr) &&
                  read_json_file(base.string() + ".ocr.json") == to_json(t.ocr) &&
                  read_json_file(base.string() + ".gt.json") == to_json(t.gt);
  }
  const auto& r = out.all;
  const double reduction = r.error_rate_before > 0 ? 1.0 - r.error_rate_after_hc / r.error_rate_before : 0.0;
  const double secs = seconds_since(t0);
  const bool ok = jobs.size() == 20 && r.recall_uq >= 0.9 && reduction >= 0.5 && same_run && same_corpus &&
                  secs < 60.0;
  return {ok, fmt("%zu tables, alpha=0.2, tau=%.2f: recall=%.3f, error %.4f -> %.4f (%.1f%% reduction), "
                  "deterministic=%s, corpus reproducible=%s, %.2fs (limit 60s)",
                  jobs.size(), model.model.flag_threshold_tau, r.recall_uq, r.error_rate_before,
                  r.error_rate_after_hc, 100 * reduction, same_run ? "yes" : "no", same_corpus ? "yes" : "no",
                  secs)};
}

// tune's tau for every score function against exhaustive F1 enumeration on the same calibration cells.
Outcome threshold_sweep() {
  const auto jobs = load_manifest(testing::kFixtures / "manifest.json");
  auto cfg = fixture_config();
  cfg.hss_weights = HssWeights{};
  const std::vector<ScoreKind> kinds{ScoreKind::kAps, ScoreKind::kHss, ScoreKind::kLac, ScoreKind::kOcrOnly,
                                     ScoreKind::kTsrOnly};
  const auto tuned = run_tune(jobs, cfg, kinds, default_tau_grid());

  std::vector<ExtractedTable> tables;
  for (const auto& job : jobs) tables.push_back(run_extract(job, cfg));
  const auto gt = load_ground_truth(jobs);
  const auto split = calibration_split(tables, cfg.calib_fraction, cfg.seed);
  const std::set<CellKey> in_split(split.begin(), split.end());
  std::vector<std::pair<ConformalRecord, bool>> calib;
  for (const auto& t : tables) {
    const auto& g = gt.at(t.table_id);
    const auto m = match_ground_truth(t.cells, g);
    for (std::size_t i = 0; i < t.cells.size(); ++i) {
      const auto& c = t.cells[i];
      if (!in_split.count({t.table_id, c.cell.row_index, c.cell.col_index})) continue;
      calib.emplace_back(to_record(c), label_correct(c, m[i] ? &g[*m[i]] : nullptr));
    }
  }

  std::string detail;
  bool ok = tuned.functions.size() == kinds.size();
  double best_f1 = -1.0;
  ScoreKind best_kind = kinds.front();
  for (std::size_t f = 0; f < tuned.functions.size() && ok; ++f) {
    const auto fn = kinds[f] == ScoreKind::kHss ? ScoreFunction::hss({}) : ScoreFunction::make(kinds[f]);
    std::vector<double> scores;
    for (const auto& [rec, _] : calib) scores.push_back(score(fn, rec));
    auto sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const auto rank = std::min<std::size_t>(n, static_cast<std::size_t>((n + 1) * 8 / 10 + ((n + 1) * 8 % 10 != 0)));
    const double q = sorted[rank - 1];
    double argmax_tau = 0.0, max_f1 = -1.0;
    for (int k = 1; k <= 100; ++k) {
      const double tau = k / 100.0;
      std::size_t tp = 0, flagged = 0, wrong = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool fl = std::max(0.0, scores[i] - q) > tau;
        flagged += fl;
        wrong += !calib[i].second;
        tp += fl && !calib[i].second;
      }
      const double p = flagged ? static_cast<double>(tp) / flagged : 0.0;
      const double r = wrong ? static_cast<double>(tp) / wrong : 0.0;
      const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
      if (f1 > max_f1) {
        max_f1 = f1;
        argmax_tau = tau;
      }
    }
    const auto& got = tuned.functions[f];
    const bool match = got.kind == kinds[f] && got.q_hat == q && std::abs(got.sweep.best_tau - argmax_tau) < 1e-12 &&
                       std::abs(got.sweep.best_f1 - max_f1) < 1e-12;
    ok = ok && match;
    if (max_f1 > best_f1) {
      best_f1 = max_f1;
      best_kind = kinds[f];
    }
    detail += fmt("%s tau=%.2f F1=%.4f%s; ", std::string(to_string(kinds[f])).c_str(), got.sweep.best_tau,
                  got.sweep.best_f1, match ? "" : " MISMATCH");
  }
  ok = ok && tuned.best == best_kind;
  return {ok, detail + "best=" + std::string(to_string(tuned.best))};
}

// Removing any one span from a clean table leaves exactly one empty cell, with ocr 0 and LAC 1.
Outcome empty_cell_rule() {
  const auto jobs = load_manifest(testing::kFixtures / "clean" / "manifest.json");
  std::size_t deletions = 0, bad = 0;
  for (const auto& job : jobs) {
    const auto tsr = parse_tsr(read_json_file(job.tsr_input));
    const auto ocr = parse_ocr(read_json_file(job.ocr_input));
    const auto base = extract_table(job.table_id, job.domain, tsr, ocr, kDefaultIoaThreshold);
    const auto lac = ScoreFunction::make(ScoreKind::kLac);
    for (const auto& c : base.cells) bad += c.ocr_confidence == 0.0;
    for (std::size_t drop = 0; drop < ocr.spans.size(); ++drop) {
      auto cut = ocr;
      cut.spans.erase(cut.spans.begin() + static_cast<std::ptrdiff_t>(drop));
      const auto t = extract_table(job.table_id, job.domain, tsr, cut, kDefaultIoaThreshold);
      std::size_t empty = 0;
      for (const auto& c : t.cells) {
        if (c.ocr_confidence == 0.0) {
          ++empty;
          if (score(lac, to_record(c)) != 1.0 || !c.text.empty()) ++bad;
        }
      }
      bad += empty != 1;
      ++deletions;
    }
  }
  return {bad == 0 && deletions > 0, fmt("%zu single-span deletions, %zu violations", deletions, bad)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"conformal coverage", conformal_coverage},
      {"quantile oracle", quantile_oracle},
      {"geometry oracle", geometry_oracle},
      {"levenshtein oracle", levenshtein_oracle},
      {"formula fidelity", formula_fidelity},
      {"metric identities", metric_identities},
      {"end-to-end fixture", end_to_end},
      {"threshold sweep", threshold_sweep},
      {"empty-cell rule", empty_cell_rule},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s  %-20s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
