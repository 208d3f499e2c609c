// Copyright 2026 The cs-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Regenerates the synthetic digit-grammar fixtures shipped under
// tests/fixtures/digits.

#include <iostream>

#include "CLI11.hpp"
#include "cslab/error.h"
#include "cslab/toy.h"

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic bilingual digit corpus"};
  std::string out = "digits";
  cslab::toy::DigitGrammarConfig cfg;
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", cfg.seed, "Grammar sampling seed");
  app.add_option("--parallel", cfg.parallel, "Parallel sentence pairs");
  app.add_option("--real-train", cfg.real_train, "Real code-switched training sentences");
  app.add_option("--valid", cfg.valid, "Validation sentences");
  app.add_option("--test", cfg.test, "Test sentences");
  app.add_option("--open-class", cfg.open_class, "Adjectives and nouns per language");
  CLI11_PARSE(app, argc, argv);
  try {
    cslab::toy::write_digit_corpus(cslab::toy::make_digit_corpus(cfg), out);
  } catch (const cslab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
