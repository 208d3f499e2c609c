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

#include <set>

#include "cslab/ecgen.h"
#include "cslab/error.h"
#include "cslab/metrics.h"
#include "doctest.h"
#include "oracles.h"

using namespace cslab;

namespace {

Utterance words(std::initializer_list<const char*> ws, LangTag lang) {
  Utterance u;
  u.id = "p";
  for (const char* w : ws) u.tokens.push_back({w, lang, {}, {}});
  return u;
}

}  // namespace

TEST_CASE("crossing pairs") {
  CHECK(crossing_pairs(Alignment({{0, 0}, {1, 1}}, 2, 2)).empty());
  const auto c = crossing_pairs(Alignment({{0, 1}, {1, 0}}, 2, 2));
  REQUIRE(c.size() == 1);
  CHECK(c[0] == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(crossing_pairs(Alignment({{0, 0}}, 1, 1)).empty());
  CHECK(crossing_pairs(Alignment({{0, 0}, {0, 1}, {1, 1}}, 2, 2)).empty());
}

TEST_CASE("identity alignment yields every span") {
  const Utterance src = words({"a", "b", "c"}, LangTag::kL1);
  const Utterance tgt = words({"x", "y", "z"}, LangTag::kL2);
  const Alignment a({{0, 0}, {1, 1}, {2, 2}}, 3, 3);
  const auto out = generate(src, tgt, a, {.max_switches = 1});
  CHECK(out.size() == 6);
  for (const Generated& g : out) CHECK(oracle::provenance_ok(src, tgt, g));

  const auto two = generate(src, tgt, a, {.max_switches = 2});
  std::set<std::vector<std::string>> seen;
  for (const Generated& g : two) {
    CHECK(seen.insert(g.utterance.surfaces()).second);
    CHECK(switch_points(g.utterance) <= 4);
    CHECK(oracle::provenance_ok(src, tgt, g));
  }
  // a|b|c with up to two replaced spans: every non-empty L2 mask of length 3.
  CHECK(two.size() == 7);
}

TEST_CASE("empty and crossing alignments") {
  const Utterance src = words({"a", "b"}, LangTag::kL1);
  const Utterance tgt = words({"x", "y"}, LangTag::kL2);
  CHECK(generate(src, tgt, Alignment({}, 2, 2), {}).empty());
  const auto out = generate(src, tgt, Alignment({{0, 1}, {1, 0}}, 2, 2), {});
  REQUIRE(out.size() == 1);
  CHECK(out[0].utterance.surfaces() == std::vector<std::string>{"x", "y"});
  CHECK_THROWS_AS(generate(src, tgt, Alignment({}, 3, 2), {}), DataError);
  CHECK_THROWS_AS(generate(src, tgt, Alignment({}, 2, 2), {.max_switches = 0}),
                  ContractError);
}

TEST_CASE("unaligned words") {
  const Utterance src = words({"a", "b", "c"}, LangTag::kL1);
  const Utterance tgt = words({"x", "q", "z"}, LangTag::kL2);
  // b and q are unaligned.
  const Alignment a({{0, 0}, {2, 2}}, 3, 3);
  const auto spans = substitutable_spans(a);
  for (const auto& s : spans) CHECK(s.src_end - s.src_begin >= 1);
  bool full = false;
  for (const auto& s : spans) {
    if (s.src_begin == 0 && s.src_end == 3) {
      CHECK(s.tgt_begin == 0);
      CHECK(s.tgt_end == 3);
      full = true;
    }
    if (s.src_begin == 1 && s.src_end == 2) FAIL("span without links is not substitutable");
  }
  CHECK(full);
}

TEST_CASE("sampling cap is seeded") {
  Utterance src = words({"a", "b", "c", "d", "e", "f"}, LangTag::kL1);
  Utterance tgt = words({"u", "v", "w", "x", "y", "z"}, LangTag::kL2);
  std::vector<Link> links;
  for (std::size_t i = 0; i < 6; ++i) links.push_back({i, i});
  const Alignment a(links, 6, 6);
  const auto all = generate(src, tgt, a, {.max_switches = 2, .max_outputs_per_pair = 0});
  const auto s1 = generate(src, tgt, a, {.max_switches = 2, .max_outputs_per_pair = 10, .seed = 1});
  const auto s1b = generate(src, tgt, a, {.max_switches = 2, .max_outputs_per_pair = 10, .seed = 1});
  const auto s2 = generate(src, tgt, a, {.max_switches = 2, .max_outputs_per_pair = 10, .seed = 2});
  CHECK(all.size() > 10);
  REQUIRE(s1.size() == 10);
  bool differs = false;
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(s1[i].utterance == s1b[i].utterance);
    differs = differs || !(s1[i].utterance == s2[i].utterance);
  }
  CHECK(differs);
}

TEST_CASE("novel n-gram rate") {
  const Corpus ref({words({"a", "b"}, LangTag::kL1)});
  CHECK(novel_ngram_rate(ref, ref, 1) == 0.0);
  const Corpus gen({words({"c", "d"}, LangTag::kL1)});
  CHECK(novel_ngram_rate(gen, ref, 1) == 100.0);
  const Corpus more({words({"c", "d", "e", "f"}, LangTag::kL1)});
  CHECK(novel_ngram_rate(more, ref, 1) == 200.0);
  CHECK(novel_ngram_rate(gen, ref, 2) == 100.0);
  CHECK_THROWS_AS(novel_ngram_rate(gen, ref, 0), ContractError);
  CHECK_THROWS_AS(novel_ngram_rate(Corpus(), ref, 1), DataError);
}
