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

#include "tabuq/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>

namespace tabuq {
namespace {

const std::array<const char*, 4> kDomains = {"computer_science", "materials_science", "biology",
                                             "icdar2013"};

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& words) {
  return words[uniform_index(rng, N)];
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string header_text(const std::string& domain, Rng& rng) {
  static const std::array<const char*, 6> cs = {"Accuracy", "F1", "Params (M)", "Latency", "BLEU", "Recall"};
  static const std::array<const char*, 6> ms = {"Band gap (eV)", "T (°C)", "Grain size (μm)", "Phase", "Density", "σ (MPa)"};
  static const std::array<const char*, 6> bio = {"Strain", "OD600", "p-value", "Fold change", "Gene", "n"};
  static const std::array<const char*, 6> ic = {"2011", "2012", "Change", "Total", "Region", "Share (%)"};
  if (domain == "computer_science") return pick(rng, cs);
  if (domain == "materials_science") return pick(rng, ms);
  if (domain == "biology") return pick(rng, bio);
  return pick(rng, ic);
}

std::string label_text(const std::string& domain, Rng& rng) {
  static const std::array<const char*, 6> cs = {"ResNet-50", "BERT-base", "Ours", "ViT-B/16", "LSTM", "GPT-2 small"};
  static const std::array<const char*, 6> ms = {"TiO₂", "α-Fe₂O₃", "ZnO film", "Cu-Ni alloy", "SiC", "MoS₂"};
  static const std::array<const char*, 6> bio = {"E. coli K-12", "BRCA1", "Control", "Mutant A", "S. aureus", "TP53"};
  static const std::array<const char*, 6> ic = {"North East", "Wales", "Scotland", "London", "Other income", "Net assets"};
  if (domain == "computer_science") return pick(rng, cs);
  if (domain == "materials_science") return pick(rng, ms);
  if (domain == "biology") return pick(rng, bio);
  return pick(rng, ic);
}

std::string value_text(const std::string& domain, Rng& rng) {
  const double v = uniform_real(rng, 0.0, 100.0);
  switch (uniform_index(rng, 4)) {
    case 0: return fixed(v, 1);
    case 1: return fixed(v / 100.0, 3);
    case 2:
      if (domain == "materials_science") return fixed(v / 10.0, 1) + " ± " + fixed(v / 100.0, 2);
      if (domain == "biology") return "p < " + fixed(v / 1000.0, 3);
      if (domain == "icdar2013") return "£" + std::to_string(static_cast<int>(v * 37.0));
      return fixed(v, 2);
    default: return std::to_string(static_cast<int>(v * 10.0));
  }
}

// Swaps one character for a visually confusable one; the result always differs.
std::string corrupt(const std::string& text, Rng& rng) {
  static const std::map<char, char> confusable = {
      {'0', 'O'}, {'O', '0'}, {'1', 'l'}, {'l', '1'}, {'5', 'S'}, {'S', '5'}, {'8', 'B'},
      {'.', ','}, {'e', 'c'}, {'a', 'o'}, {'i', 'l'}, {'2', 'Z'}, {'n', 'm'}, {'t', 'f'}};
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (confusable.count(text[i])) candidates.push_back(i);
  }
  std::string out = text;
  if (candidates.empty()) {
    out.push_back('~');
    return out;
  }
  const std::size_t i = candidates[uniform_index(rng, candidates.size())];
  out[i] = confusable.at(text[i]);
  return out;
}

double text_width(const std::string& text) {
  // Rough advance per code point.
  return 6.5 * static_cast<double>(to_code_points(text).size()) + 6.0;
}

}  // namespace

SynthTable make_table(const std::string& table_id, const std::string& domain, Rng& rng,
                      const SynthOptions& opts) {
  SynthTable t;
  t.table_id = table_id;
  t.domain = domain;

  const int rows = 6 + static_cast<int>(uniform_index(rng, 7));
  const int cols = 3 + static_cast<int>(uniform_index(rng, 4));
  const double margin = 12.0;

  std::vector<double> xs{margin};
  for (int c = 0; c < cols; ++c) {
    xs.push_back(xs.back() + (c == 0 ? uniform_real(rng, 130, 170) : uniform_real(rng, 80, 120)));
  }
  std::vector<double> ys{margin};
  for (int r = 0; r < rows; ++r) ys.push_back(ys.back() + uniform_real(rng, 24, 32));

  const ImageDims ocr_dims{std::ceil(xs.back() + margin), std::ceil(ys.back() + margin)};
  const std::array<double, 3> tsr_scales = {1.0, 1.5, 2.0};
  const double s = tsr_scales[uniform_index(rng, tsr_scales.size())];
  t.ocr.image = ocr_dims;
  t.tsr.image = {ocr_dims.width * s, ocr_dims.height * s};

  const int jittered_row =
      bernoulli(rng, opts.row_jitter_table_rate) ? 1 + static_cast<int>(uniform_index(rng, rows - 1)) : -1;
  const bool spanning = cols >= 3 && bernoulli(rng, opts.spanning_header_rate);

  for (int r = 0; r < rows; ++r) {
    StructureDetection d;
    d.kind = StructureKind::kRow;
    d.bbox = {margin - 2.0, ys[r], xs.back() + 2.0, ys[r + 1]};
    d.confidence = uniform_real(rng, 0.90, 0.995);
    if (r == jittered_row) {
      const double h = ys[r + 1] - ys[r];
      const double shift = (bernoulli(rng, 0.5) ? 1.0 : -1.0) * uniform_real(rng, 0.15, 0.3) * h;
      d.bbox.y0 += shift;
      d.bbox.y1 += shift;
      d.confidence = uniform_real(rng, 0.55, 0.75);
    }
    d.bbox = {d.bbox.x0 * s, d.bbox.y0 * s, d.bbox.x1 * s, d.bbox.y1 * s};
    t.tsr.rows.push_back(d);
  }
  for (int c = 0; c < cols; ++c) {
    StructureDetection d;
    d.kind = StructureKind::kColumn;
    d.bbox = {xs[c] * s, (margin - 2.0) * s, xs[c + 1] * s, (ys.back() + 2.0) * s};
    d.confidence = uniform_real(rng, 0.90, 0.995);
    t.tsr.cols.push_back(d);
  }

  // Text spans are laid out cell by cell; jittered spans are resolved after
  // the grid of texts is known.
  auto place = [&](const BBox& cell, const std::string& text, bool left) {
    const double h = cell.height();
    const double w = std::min(cell.width() - 8.0, text_width(text));
    const double x0 = left ? cell.x0 + 4.0 : cell.center_x() - 0.5 * w;
    return BBox{x0, cell.y0 + 0.225 * h, x0 + w, cell.y0 + 0.775 * h};
  };
  auto clean_conf = [&] { return uniform_real(rng, 0.86, 0.995); };

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const BBox cell{xs[c], ys[r], xs[c + 1], ys[r + 1]};
      if (spanning && r == 0 && c == 2) continue;  // covered by the spanning header
      GroundTruthCell g;
      g.bbox = cell;
      g.start_row = g.end_row = r;
      g.start_col = g.end_col = c;
      if (r == 0) {
        g.text = c == 0 ? (opts.blank_corner ? "" : "Item") : header_text(domain, rng);
      } else if (c == 0) {
        g.text = label_text(domain, rng);
      } else {
        g.text = bernoulli(rng, opts.blank_rate) ? "" : value_text(domain, rng);
      }

      if (spanning && r == 0 && c == 1) {
        g.bbox.x1 = xs[3];
        g.end_col = 2;
        g.text = "Test set (mean)";
        // Off-centre enough that one column takes the span.
        const double w = text_width(g.text);
        const double x0 = xs[2] - (bernoulli(rng, 0.5) ? 0.7 : 0.3) * w;
        t.ocr.spans.push_back({BBox{x0, cell.y0 + 0.225 * cell.height(), x0 + w,
                                    cell.y0 + 0.775 * cell.height()},
                               g.text, clean_conf()});
        t.gt.push_back(g);
        continue;
      }
      t.gt.push_back(g);
      if (g.text.empty()) continue;

      const bool header = r == 0;
      if (!header && bernoulli(rng, opts.drop_rate)) continue;

      std::string text = g.text;
      double conf = clean_conf();
      if (!header && bernoulli(rng, opts.corrupt_rate)) {
        text = corrupt(text, rng);
        conf = uniform_real(rng, 0.25, 0.55);
      } else if (!header && bernoulli(rng, opts.hard_correct_rate)) {
        conf = uniform_real(rng, 0.65, 0.85);
      } else if (!header && bernoulli(rng, opts.silent_error_rate)) {
        text = corrupt(text, rng);
      }

      BBox box = place(cell, text, c == 0);
      if (!header && c + 1 < cols && bernoulli(rng, opts.span_jitter_rate)) {
        // Push the span across the right border so 60-80% of it lies in the neighbour.
        const double w = box.width();
        const double x0 = xs[c + 1] - uniform_real(rng, 0.2, 0.4) * w;
        box = {x0, box.y0, x0 + w, box.y1};
        conf = uniform_real(rng, 0.2, 0.4);
        t.ocr.spans.push_back({box, text, conf});
        continue;
      }

      const auto space = text.find(' ');
      if (space != std::string::npos && bernoulli(rng, opts.multi_span_rate)) {
        const std::string a = text.substr(0, space);
        const std::string b = text.substr(space + 1);
        const double wa = text_width(a);
        const double wb = text_width(b);
        const double x0 = box.x0;
        t.ocr.spans.push_back({BBox{x0, box.y0, std::min(x0 + wa, cell.x1 - 2.0), box.y1}, a, conf});
        const double bx0 = std::min(x0 + wa + 4.0, cell.x1 - 6.0);
        t.ocr.spans.push_back(
            {BBox{bx0, box.y0, std::min(bx0 + wb, cell.x1 - 1.0), box.y1}, b, clean_conf()});
        continue;
      }
      t.ocr.spans.push_back({box, text, conf});
    }
  }
  return t;
}

std::vector<SynthTable> make_corpus(const SynthOptions& opts) {
  Rng rng(opts.seed);
  std::vector<SynthTable> out;
  for (int i = 0; i < opts.tables; ++i) {
    const std::string domain = kDomains[static_cast<std::size_t>(i) % kDomains.size()];
    char id[64];
    std::snprintf(id, sizeof id, "%s_%02d", domain.c_str(), i / static_cast<int>(kDomains.size()) + 1);
    out.push_back(make_table(id, domain, rng, opts));
  }
  return out;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<SynthTable>& tables) {
  std::filesystem::create_directories(dir);
  Json manifest;
  Json arr = Json::array();
  for (const auto& t : tables) {
    write_json_file(dir / (t.table_id + ".tsr.json"), to_json(t.tsr));
    write_json_file(dir / (t.table_id + ".ocr.json"), to_json(t.ocr));
    write_json_file(dir / (t.table_id + ".gt.json"), to_json(t.gt));
    Json e;
    e["table_id"] = t.table_id;
    e["domain"] = t.domain;
    e["tsr"] = t.table_id + ".tsr.json";
    e["ocr"] = t.table_id + ".ocr.json";
    e["gt"] = t.table_id + ".gt.json";
    arr.push_back(std::move(e));
  }
  manifest["tables"] = std::move(arr);
  write_json_file(dir / "manifest.json", manifest);
}

}  // namespace tabuq
