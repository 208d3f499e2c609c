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

#include <cmath>
#include <filesystem>
#include <map>

#include "cslab/error.h"
#include "cslab/nn/checkpoint.h"
#include "cslab/nn/ops.h"
#include "cslab/pg.h"
#include "cslab/toy.h"
#include "doctest.h"
#include "oracles.h"

using namespace cslab;
using namespace cslab::pg;
using nn::Tape;
using nn::Tensor;

namespace {

std::vector<Example> copy_task(std::size_t n) {
  const auto toy = toy::make_digit_corpus({.parallel = n, .real_train = 1, .valid = 1, .test = 1, .seed = 9});
  std::vector<Example> out;
  for (const auto& p : toy.parallel) {
    out.push_back({make_input(p.l1.surfaces(), p.l2.surfaces()), p.l1.surfaces()});
  }
  return out;
}

Tensor random_row(Rng& rng, std::size_t n) {
  Tensor t(1, n);
  for (double& v : t.data()) v = rng.uniform(-2.0, 2.0);
  return t;
}

class FixedScorer : public SequenceScorer {
 public:
  explicit FixedScorer(std::map<std::vector<std::string>, double> scores) : scores_(std::move(scores)) {}
  double log_prob(const std::vector<std::string>& words) override { return scores_.at(words); }

 private:
  std::map<std::vector<std::string>, double> scores_;
};

Hypothesis hyp(std::vector<std::string> tokens, double log_prob) {
  Hypothesis h;
  h.tokens = std::move(tokens);
  h.log_prob = log_prob;
  return h;
}

}  // namespace

TEST_CASE("make_input joins with the separator") {
  CHECK(make_input({"a", "b"}, {"c"}) == std::vector<std::string>{"a", "b", "<sep>", "c"});
}

TEST_CASE("final_dist degenerate gates") {
  Tape tape;
  auto pv = tape.constant(Tensor::row({0.1, 0.2, 0.3, 0.4}));
  auto a = tape.constant(Tensor::row({0.2, 0.3, 0.5}));
  // Input [x, x, y]: x in the vocabulary (id 3), y input-only (extended id 4).
  const std::vector<std::size_t> ids = {3, 3, 4};
  const Tensor open = final_dist(pv, a, tape.constant(Tensor::scalar(1.0)), ids, 5).value();
  CHECK(open == Tensor::row({0.1, 0.2, 0.3, 0.4, 0.0}));
  const Tensor copy = final_dist(pv, a, tape.constant(Tensor::scalar(0.0)), ids, 5).value();
  CHECK(copy[3] == 0.5);
  CHECK(copy[4] == 0.5);
  CHECK(copy[0] == 0.0);
  CHECK_THROWS_AS(final_dist(pv, a, tape.constant(Tensor::scalar(0.5)), {3, 3}, 5), ContractError);
  CHECK_THROWS_AS(final_dist(pv, a, tape.constant(Tensor::scalar(0.5)), ids, 3), ContractError);
}

TEST_CASE("final_dist is normalized and passes gradient checks") {
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    Tape tape;
    const std::size_t v = 3 + rng.index(5);
    const std::size_t n = 1 + rng.index(6);
    std::vector<std::size_t> ids(n);
    for (auto& id : ids) id = rng.index(v + 3);
    auto d = final_dist(nn::softmax(tape.constant(random_row(rng, v))),
                        nn::softmax(tape.constant(random_row(rng, n))),
                        tape.constant(Tensor::scalar(rng.uniform())), ids, v + 3)
                 .value();
    double s = 0.0;
    for (double x : d.data()) s += x;
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
  for (int k = 0; k < 20; ++k) {
    nn::Parameter lv("lv", random_row(rng, 5));
    nn::Parameter la("la", random_row(rng, 4));
    nn::Parameter lg("lg", random_row(rng, 1));
    const std::vector<std::size_t> ids = {1, 5, 1, 6};
    const std::size_t target = k % 7;
    const auto r = oracle::gradcheck(
        [&](Tape& t) {
          auto d = final_dist(nn::softmax(t.param(lv)), nn::softmax(t.param(la)),
                              nn::sigmoid(t.param(lg)), ids, 7);
          return nn::scale(nn::log(nn::pick(d, 0, target == 0 ? 1 : target)), -1.0);
        },
        {&lv, &la, &lg});
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("pointer-gen loss passes gradient checks") {
  const std::vector<Example> ex = {{{"a", "b", "<sep>", "q"}, {"a", "q"}},
                                   {{"b", "<sep>", "r", "a"}, {"r", "b", "a"}}};
  for (int k = 0; k < 4; ++k) {
    PointerGenerator m(PointerGenerator::build_vocab(ex, 2),
                       {.embed = 2, .hidden = 3, .seed = static_cast<std::uint64_t>(k)});
    const auto r = oracle::gradcheck([&](Tape& t) { return m.loss(t, ex[k % 2]); }, m.parameters());
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("unreachable targets are data errors naming the pair") {
  const std::vector<Example> ex = {{{"a", "<sep>", "b"}, {"a"}}, {{"a", "<sep>", "b"}, {"zz"}}};
  PointerGenerator m(PointerGenerator::build_vocab({ex[0]}, 1), {.embed = 4, .hidden = 4});
  try {
    train_pg(m, ex, {.epochs = 1});
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("pair 1") != std::string::npos);
    CHECK(std::string(e.what()).find("zz") != std::string::npos);
  }
}

TEST_CASE("copy task: training, decoding, beam search") {
  const auto ex = copy_task(12);
  PgConfig cfg{.embed = 16, .hidden = 16, .min_count = 2, .epochs = 60, .seed = 2};
  PointerGenerator m(PointerGenerator::build_vocab(ex, cfg.min_count), cfg);
  const auto log = train_pg(m, ex, cfg);
  for (std::size_t i = 5; i < log.size(); ++i) {
    double prev = 0.0;
    double cur = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      prev += log[i - 1 - j].loss;
      cur += log[i - j].loss;
    }
    CHECK(cur <= prev + 1e-12);
  }
  CHECK(token_accuracy(m, ex) >= 0.95);

  double p_gen = 0.0;
  std::size_t steps = 0;
  for (const Example& e : ex) {
    for (const DecodeStep& s : m.teacher_forced(e)) {
      CHECK(s.p_gen >= 0.0);
      CHECK(s.p_gen <= 1.0);
      double a = 0.0;
      for (double x : s.attention.data()) a += x;
      CHECK(std::abs(a - 1.0) <= 1e-12);
      p_gen += s.p_gen;
      ++steps;
    }
  }
  CHECK(p_gen / static_cast<double>(steps) < 0.5);

  std::size_t top_hits = 0;
  for (const Example& e : ex) {
    const Hypothesis g = m.greedy(e.input);
    const auto one = m.beam_search(e.input, {.width = 1, .n_best = 1});
    REQUIRE(one.size() == 1);
    CHECK(one[0].ids == g.ids);
    CHECK(one[0].log_prob == g.log_prob);
    const auto beams = m.beam_search(e.input, {.width = 5, .n_best = 3});
    CHECK(beams.size() <= 3);
    CHECK(beams.front().log_prob >= g.log_prob);
    for (std::size_t i = 1; i < beams.size(); ++i) CHECK(beams[i - 1].log_prob >= beams[i].log_prob);
    if (beams.front().tokens == e.target) ++top_hits;

    const auto j = attention_json(e.input, g);
    CHECK(j.at("attention").size() == g.ids.size());
    for (const auto& row : j.at("attention")) {
      CHECK(row.size() == e.input.size());
      double s = 0.0;
      for (double x : row) s += x;
      CHECK(std::abs(s - 1.0) <= 1e-9);
    }
  }
  CHECK(static_cast<double>(top_hits) >= 0.95 * static_cast<double>(ex.size()));
  CHECK_THROWS_AS(m.beam_search(ex[0].input, {.width = 2, .n_best = 3}), ContractError);

  const auto base = std::filesystem::temp_directory_path() / "cslab_pg_ckpt";
  m.save(base);
  PointerGenerator back = PointerGenerator::load(base);
  CHECK(back.greedy(ex[0].input).ids == m.greedy(ex[0].input).ids);
  std::filesystem::remove(base.string() + ".json");
  std::filesystem::remove(base.string() + ".bin");
}

TEST_CASE("training is deterministic given the seed") {
  const auto ex = copy_task(4);
  auto run = [&](std::uint64_t seed) {
    PgConfig cfg{.embed = 8, .hidden = 8, .epochs = 3, .seed = seed};
    PointerGenerator m(PointerGenerator::build_vocab(ex, 1), cfg);
    train_pg(m, ex, cfg);
    return nn::checksum(m.parameters());
  };
  CHECK(run(1) == run(1));
  CHECK(run(1) != run(2));
}

TEST_CASE("rescoring") {
  const std::vector<Hypothesis> hyps = {hyp({"a"}, -1.0), hyp({"b", "c"}, -2.0),
                                        hyp({"d", "e", "f"}, -3.0)};
  FixedScorer lm({{{"a"}, -9.0}, {{"b", "c"}, -1.0}, {{"d", "e", "f"}, -5.0}});
  {
    const auto r = rescore(hyps, lm, {.beta = 0.0, .gamma = 0.0});
    CHECK(r[0].hyp.tokens == hyps[0].tokens);
    CHECK(r[1].hyp.tokens == hyps[1].tokens);
    CHECK(r[2].hyp.tokens == hyps[2].tokens);
  }
  {
    const std::vector<Hypothesis> tied = {hyp({"a"}, -1.0), hyp({"b", "c"}, -1.0)};
    const auto r = rescore(tied, lm, {.beta = 0.1, .gamma = 0.0});
    CHECK(r[0].hyp.tokens == tied[1].tokens);
    CHECK(r[0].score == doctest::Approx(-1.0 + 0.1 * -1.0));
  }
  {
    // Equal model and LM terms: the longest hypothesis wins on sqrt(wc).
    const std::vector<Hypothesis> same = {hyp({"x"}, -2.0), hyp({"x", "y", "z"}, -2.0),
                                          hyp({"x", "y"}, -2.0)};
    FixedScorer flat({{{"x"}, -4.0}, {{"x", "y", "z"}, -4.0}, {{"x", "y"}, -4.0}});
    const auto r = rescore(same, flat, {});
    CHECK(r[0].hyp.tokens.size() == 3);
    CHECK(r[1].hyp.tokens.size() == 2);
    CHECK(r[2].hyp.tokens.size() == 1);
    CHECK(r[0].score == doctest::Approx(-2.0 - 0.4 + 0.1 * std::sqrt(3.0)).epsilon(1e-12));
  }
  Corpus c;
  c.add(tokenize("a b c"));
  const NgramModel ngram = NgramModel::fit(c, {.order = 2});
  NgramScorer scorer(ngram);
  CHECK(std::isfinite(scorer.log_prob({"never", "seen"})));
}
