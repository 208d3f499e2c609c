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

#include <algorithm>

#include "cslab/error.h"
#include "cslab/metrics.h"
#include "cslab/random.h"
#include "doctest.h"
#include "oracles.h"

using namespace cslab;

namespace {

Utterance langs(std::initializer_list<LangTag> tags) {
  Utterance u;
  u.id = "x";
  int i = 0;
  for (LangTag t : tags) u.tokens.push_back({"w" + std::to_string(i++), t, {}, {}});
  return u;
}

constexpr LangTag L1 = LangTag::kL1;
constexpr LangTag L2 = LangTag::kL2;
constexpr LangTag OT = LangTag::kOther;

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  for (char c : s) out.emplace_back(1, c);
  return out;
}

}  // namespace

TEST_CASE("switch points skip OTHER tokens") {
  CHECK(switch_points(langs({L1, L1, L2, L2})) == 1);
  CHECK(switch_points(langs({L1, L1, L1})) == 0);
  CHECK(switch_points(langs({L1, OT, L2})) == 1);
  CHECK(switch_points(langs({L1, OT, L1})) == 0);
}

TEST_CASE("spf") {
  CHECK(spf(langs({L1, L1, L2, L2})) == 0.25);
  CHECK(spf(langs({L1, L1, L1})) == 0.0);
  CHECK(spf(langs({L1, L1, L2, L2}), SpfDenominator::kBoundaries) == 1.0 / 3.0);
  CHECK_THROWS_AS(spf(langs({OT, OT})), DataError);
  CHECK_THROWS_AS(spf(langs({L1}), SpfDenominator::kBoundaries), DataError);
}

TEST_CASE("cmi") {
  CHECK(cmi(langs({L1, L1, L2})) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(cmi(langs({L1, L1})) == 0.0);
  CHECK(cmi(langs({L1, L2, L1})) == 1.0);
  CHECK(cmi(langs({L1, L2, L1, L2})) == 1.25);
  CHECK_THROWS_AS(cmi(langs({OT})), DataError);
}

TEST_CASE("metric properties on random utterances") {
  Rng rng(7);
  for (int k = 0; k < 500; ++k) {
    Utterance u;
    const std::size_t n = 1 + rng.index(8);
    for (std::size_t i = 0; i < n; ++i) {
      u.tokens.push_back({"t", static_cast<LangTag>(rng.index(3)), {}, {}});
    }
    if (tagged_token_count(u) == 0) continue;
    Utterance swapped = u;
    for (Token& t : swapped.tokens) {
      if (t.lang == L1) t.lang = L2;
      else if (t.lang == L2) t.lang = L1;
    }
    const double s = spf(u);
    const double c = cmi(u);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    CHECK(c >= 0.0);
    CHECK(c < 1.5);
    CHECK(spf(swapped) == s);
    CHECK(cmi(swapped) == c);
    const bool mono = std::none_of(u.tokens.begin(), u.tokens.end(),
                                   [](const Token& t) { return t.lang == L1; }) ||
                      std::none_of(u.tokens.begin(), u.tokens.end(),
                                   [](const Token& t) { return t.lang == L2; });
    CHECK((c == 0.0) == mono);
    const auto buckets = bucket_transitions(u);
    CHECK(buckets.size() == u.size());
  }
}

TEST_CASE("edit distance examples") {
  CHECK(edit_distance(words("abc"), words("abc")) == EditCounts{0, 0, 0, 3});
  CHECK(edit_distance(words("abc"), words("axc")) == EditCounts{0, 0, 1, 3});
  CHECK(edit_distance(words("ab"), {}) == EditCounts{0, 2, 0, 2});
  CHECK(edit_distance({}, words("ab")) == EditCounts{2, 0, 0, 0});
  CHECK(wer(words("abcd"), words("abxd")) == 25.0);
  CHECK(wer(words("abcd"), words("abcd")) == 0.0);
  CHECK_THROWS_AS(wer({}, words("a")), DataError);
}

TEST_CASE("edit distance symmetry and triangle inequality") {
  Rng rng(3);
  auto random_seq = [&] {
    std::vector<std::string> s(rng.index(7));
    for (auto& w : s) w = std::string(1, static_cast<char>('a' + rng.index(3)));
    return s;
  };
  for (int k = 0; k < 400; ++k) {
    const auto x = random_seq();
    const auto y = random_seq();
    const auto z = random_seq();
    const EditCounts xy = edit_distance(x, y);
    const EditCounts yx = edit_distance(y, x);
    CHECK(xy.ins == yx.del);
    CHECK(xy.del == yx.ins);
    CHECK(xy.sub == yx.sub);
    CHECK(xy.total() == oracle::edit_distance_recursive(x, y));
    CHECK(xy.total() <= edit_distance(x, z).total() + edit_distance(z, y).total());
    CHECK(xy.total() <= x.size() + y.size());
  }
}

TEST_CASE("cer per-language split recombines to the overall rate") {
  Utterance ref;
  ref.tokens = {{"hello", L1, {}, {}}, {"北京", L2, {}, {}}, {"ok", L1, {}, {}}};
  Utterance hyp;
  hyp.tokens = {{"helo", L1, {}, {}}, {"北", L2, {}, {}}, {"okk", L1, {}, {}},
                {"x", L1, {}, {}}};
  const CerReport r = cer(ref, hyp);
  CHECK(r.counts.ref_len == 9);
  double combined = 0.0;
  for (LangTag t : {L1, L2}) {
    const double share = static_cast<double>(r.ref_chars[static_cast<int>(t)]) / 9.0;
    combined += share * r.per_language(t);
  }
  CHECK(combined == doctest::Approx(r.overall()).epsilon(1e-12));
  CHECK(r.per_language(OT) < 0.0);
  CHECK(cer(ref, ref).overall() == 0.0);

  CerReport total = r;
  total += r;
  CHECK(total.overall() == doctest::Approx(r.overall()));
}

TEST_CASE("bucket transitions") {
  using B = SegmentBucket;
  CHECK(bucket_transitions(langs({L1, L2})) == std::vector<B>{B::kL1L1, B::kL1L2});
  CHECK(bucket_transitions(langs({L2, L2, L2})) ==
        std::vector<B>{B::kL2L2, B::kL2L2, B::kL2L2});
  CHECK(bucket_transitions(langs({L1, OT})) == std::vector<B>{B::kL1L1, B::kOther});
  CHECK(bucket_transitions(langs({L2, L1})) == std::vector<B>{B::kL2L2, B::kL2L1});
}

TEST_CASE("trigger stats") {
  auto tok = [](const char* s, LangTag l, const char* pos) {
    return Token{s, l, std::string(pos), {}};
  };
  Utterance a{"a", {tok("the", L1, "DT"), tok("book", L1, "NN"), tok("很", L2, "AD")}};
  Utterance b{"b", {tok("my", L1, "PRP"), tok("phone", L1, "NN"), tok("坏", L2, "VV"),
                    tok("again", L1, "RB")}};
  const TriggerStats s = trigger_stats(Corpus({a, b}), TriggerSource::kPos);
  CHECK(s.at("L1").at("NN").count == 2);
  CHECK(s.at("L1").at("NN").ratio == 1.0);
  CHECK(s.at("L2").at("VV").count == 1);
  const TriggerStats words_only = trigger_stats(Corpus({a, b}), TriggerSource::kSurface);
  CHECK(words_only.at("L1").at("book").ratio == 0.5);
  Utterance mono{"m", {tok("a", L1, "DT"), tok("b", L1, "NN")}};
  CHECK(trigger_stats(Corpus({mono}), TriggerSource::kPos).empty());
  Utterance nopos{"n", {{"a", L1, {}, {}}, {"好", L2, {}, {}}}};
  CHECK_THROWS_AS(trigger_stats(Corpus({nopos}), TriggerSource::kPos), DataError);
}
