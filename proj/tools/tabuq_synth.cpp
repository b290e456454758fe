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

// Generates the synthetic fixture corpus (TSR, OCR and ground-truth files plus a manifest).

#include <CLI11.hpp>

#include <cstdio>

#include "tabuq/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tabuq-synth: synthetic table corpus with seeded error injection"};
  std::string out = "data/fixtures";
  tabuq::SynthOptions opts;
  bool clean = false;
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", opts.seed, "generator seed");
  app.add_option("--tables", opts.tables, "number of tables");
  app.add_flag("--clean", clean, "no error injection");
  CLI11_PARSE(app, argc, argv);

  if (clean) {
    const auto seed = opts.seed;
    const auto tables = opts.tables;
    opts = tabuq::clean_synth_options();
    opts.seed = seed;
    opts.tables = tables;
  }
  const auto corpus = tabuq::make_corpus(opts);
  tabuq::write_corpus(out, corpus);
  std::printf("wrote %zu tables to %s\n", corpus.size(), out.c_str());
  return 0;
}
