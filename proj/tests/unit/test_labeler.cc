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
#include <fstream>
#include <set>

#include "cslab/error.h"
#include "cslab/labeler/combiner.h"
#include "cslab/labeler/embeddings.h"
#include "cslab/labeler/iob.h"
#include "cslab/labeler/tagger.h"
#include "cslab/nn/optim.h"
#include "doctest.h"
#include "oracles.h"

using namespace cslab;
using namespace cslab::labeler;
using nn::Tape;
using nn::Tensor;

namespace {

const std::filesystem::path kNer = std::filesystem::path(CSLAB_FIXTURES) / "ner";

std::filesystem::path write_tmp(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

EmbeddingSource random_source(const std::string& name, const std::vector<std::string>& words,
                              std::size_t dim, Rng& rng) {
  EmbeddingSource s(name, dim);
  for (const std::string& w : words) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    s.add(w, v);
  }
  return s;
}

// Keeps losses O(1) for the gradient checks.
nn::Var weighted_sum(Tape& tape, nn::Var out, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w(out.rows(), out.cols());
  for (double& x : w.data()) x = rng.uniform(-1.0, 1.0);
  return nn::sum(nn::mul(out, tape.constant(w)));
}

// Zero biases on an all-zero OOV row put ReLU inputs exactly on the kink,
// where finite differences are meaningless; check at a generic point.
void jitter(const nn::ParamList& ps, Rng& rng) {
  for (nn::Parameter* p : ps) {
    for (double& v : p->value.data()) v += rng.uniform(-0.2, 0.2);
  }
}

const std::vector<std::string> kWords = {"cat", "dog", "猫", "狗狗", "run"};

}  // namespace

TEST_CASE("embedding text files load with and without a header") {
  const auto a = write_tmp("cslab_emb_a.vec", "2 3\nx 1 2 3\ny 4 5 6\n");
  const auto b = write_tmp("cslab_emb_b.vec", "x 1 2 3\ny 4 5 6\n");
  for (const auto& p : {a, b}) {
    const auto s = EmbeddingSource::load_text(p, "t");
    CHECK(s.size() == 2);
    CHECK(s.dim() == 3);
    CHECK(s.vector("y") == std::vector<double>{4, 5, 6});
  }
  CHECK_THROWS_AS(EmbeddingSource::load_text(write_tmp("cslab_emb_c.vec", "x 1 2\ny 1\n"), "t"),
                  ParseError);
  CHECK_THROWS_AS(EmbeddingSource::load_text(write_tmp("cslab_emb_d.vec", "x 1 z\n"), "t"),
                  ParseError);
  EmbeddingSource s("t", 2);
  CHECK_THROWS_AS(s.add("w", {1.0}), ContractError);
}

TEST_CASE("OOV policies") {
  EmbeddingSource zero("z", 2, Granularity::kWord, OovPolicy::kZero);
  EmbeddingSource mean("m", 2, Granularity::kWord, OovPolicy::kMean);
  EmbeddingSource norm("n", 2, Granularity::kWord, OovPolicy::kNormalize);
  for (EmbeddingSource* s : {&zero, &mean, &norm}) {
    s->add("cool", {1.0, 2.0});
    s->add("Paris", {3.0, 6.0});
  }
  CHECK(zero.vector("Cool") == std::vector<double>{0.0, 0.0});
  CHECK(mean.vector("Cool") == std::vector<double>{2.0, 4.0});
  CHECK(norm.vector("Cool") == std::vector<double>{1.0, 2.0});
  CHECK(norm.vector("paaaaris") == std::vector<double>{3.0, 6.0});
  CHECK(norm.vector("paris") == std::vector<double>{3.0, 6.0});
  CHECK(norm.vector("berlin") == std::vector<double>{0.0, 0.0});
  CHECK(parse_oov_policy("mean") == OovPolicy::kMean);
  CHECK_THROWS_AS(parse_oov_policy("median"), DataError);
}

TEST_CASE("greedy longest-match segmentation") {
  const Vocabulary v = {"un", "unbe", "liev", "able", "a", "b"};
  CHECK(segment("unbelievable", v) == std::vector<std::string>{"unbe", "liev", "able"});
  CHECK(segment("xyz", v) == std::vector<std::string>{"xyz"});
  CHECK(segment("xab", v) == std::vector<std::string>{"a", "b"});
  CHECK(segment("北京", Vocabulary{"北"}) == std::vector<std::string>{"北"});
}

TEST_CASE("IOB repair rules") {
  CHECK(iob_repair({"B-PER", "O", "I-PER"}) == Tags{"B-PER", "I-PER", "I-PER"});
  CHECK(iob_repair({"B-LOC", "I-PER"}) == Tags{"B-PER", "I-PER"});
  CHECK(iob_repair({"O", "I-ORG", "I-ORG"}) == Tags{"O", "B-ORG", "I-ORG"});
  CHECK(iob_repair({"I-PER", "I-LOC"}) == Tags{"B-PER", "B-LOC"});
  CHECK(iob_repair({}).empty());
}

TEST_CASE("IOB repair is idempotent and leaves no orphan I tags") {
  Rng rng(11);
  const std::vector<std::string> alphabet = {"O", "B-PER", "I-PER", "B-LOC", "I-LOC"};
  for (int k = 0; k < 10000; ++k) {
    Tags t(rng.index(9));
    for (auto& x : t) x = alphabet[rng.index(alphabet.size())];
    const Tags once = iob_repair(t);
    REQUIRE(iob_repair(once) == once);
    for (std::size_t i = 0; i < once.size(); ++i) {
      if (once[i].rfind("I-", 0) == 0) {
        REQUIRE(i > 0);
        REQUIRE(once[i - 1].substr(2) == once[i].substr(2));
        REQUIRE(once[i - 1] != "O");
      }
    }
  }
}

TEST_CASE("ensemble vote") {
  CHECK(ensemble_vote({{"B-PER", "O"}, {"B-PER", "B-LOC"}, {"O", "O"}}) == Tags{"B-PER", "O"});
  // Three-way tie goes to the first model.
  CHECK(ensemble_vote({{"B-LOC"}, {"B-PER"}, {"O"}}) == Tags{"B-LOC"});
  // Two-two tie where the first model is in the tied set.
  CHECK(ensemble_vote({{"O"}, {"B-PER"}, {"B-PER"}, {"O"}}) == Tags{"O"});
  // Voting can leave an orphan; the repair runs afterwards.
  CHECK(ensemble_vote({{"O", "I-PER"}, {"O", "I-PER"}, {"B-PER", "O"}}) == Tags{"O", "B-PER"});
  CHECK_THROWS_AS(ensemble_vote({}), ContractError);
  CHECK_THROWS_AS(ensemble_vote({{"O"}, {"O", "O"}}), ContractError);
}

TEST_CASE("entity extraction and micro F1 agree with the brute-force oracle") {
  Rng rng(5);
  const std::vector<std::string> alphabet = {"O", "B-PER", "I-PER", "B-LOC", "I-LOC"};
  auto random_tags = [&](std::size_t n) {
    Tags t(n);
    for (auto& x : t) x = alphabet[rng.index(alphabet.size())];
    return t;
  };
  for (int k = 0; k < 2000; ++k) {
    std::vector<Tags> gold;
    std::vector<Tags> pred;
    std::size_t tp = 0;
    std::size_t np = 0;
    std::size_t ng = 0;
    for (int s = 0; s < 3; ++s) {
      const std::size_t n = rng.index(7);
      gold.push_back(random_tags(n));
      pred.push_back(rng.bernoulli(0.3) ? gold.back() : random_tags(n));
      REQUIRE(entities(gold.back()) == oracle::entities(gold.back()));
      const auto ge = oracle::entities(gold.back());
      const auto pe = oracle::entities(pred.back());
      for (const auto& e : pe) tp += std::count(ge.begin(), ge.end(), e);
      np += pe.size();
      ng += ge.size();
    }
    const F1Report r = entity_f1(gold, pred);
    REQUIRE(r.true_pos == tp);
    REQUIRE(r.pred == np);
    REQUIRE(r.gold == ng);
    const double p = np ? double(tp) / double(np) : 0.0;
    const double rc = ng ? double(tp) / double(ng) : 0.0;
    REQUIRE(r.f1() == doctest::Approx(p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0));
  }
  CHECK_THROWS_AS(entity_f1({{"O"}}, {{"O", "O"}}), ContractError);
}

TEST_CASE("combiner output shapes") {
  Rng rng(1);
  std::vector<EmbeddingSource> w = {random_source("a", kWords, 3, rng),
                                    random_source("b", kWords, 5, rng)};
  std::vector<EmbeddingSource> s = {random_source("sa", {"c", "a", "t"}, 2, rng),
                                    random_source("sb", {"猫", "狗"}, 4, rng)};
  const auto chars = CharInventory::build(kWords);
  const std::vector<std::string> sent = {"cat", "狗狗", "unseen"};
  struct Case {
    CombineMode mode;
    std::size_t dim;
  };
  for (const Case c : {Case{CombineMode::kConcat, 8}, Case{CombineMode::kLinear, 6},
                       Case{CombineMode::kMme, 6}, Case{CombineMode::kHme, 6 + 6 + 2 * 4}}) {
    CombinerConfig cfg{.mode = c.mode, .proj_dim = 6, .char_dim = 3, .char_hidden = 4,
                       .subword_heads = 2, .subword_ff = 8};
    Combiner comb(w, s, chars, cfg, rng);
    Tape tape;
    const auto out = comb(tape, sent);
    CHECK(comb.output_dim() == c.dim);
    CHECK(out.vectors.rows() == 3);
    CHECK(out.vectors.cols() == c.dim);
    if (c.mode == CombineMode::kConcat) CHECK(comb.parameters().empty());
  }
  CHECK_THROWS_AS(Combiner({}, {}, chars, {}, rng), ContractError);
  CHECK_THROWS_AS(Combiner(w, {}, chars, {.mode = CombineMode::kHme}, rng), ContractError);
}

TEST_CASE("MME weights: normalization, single source, identical sources, equivariance") {
  Rng rng(2);
  auto a = random_source("a", kWords, 4, rng);
  auto b = random_source("b", kWords, 3, rng);
  const std::vector<std::string> sent = {"cat", "猫", "run", "nope"};
  const auto chars = CharInventory::build(kWords);
  CombinerConfig cfg{.mode = CombineMode::kMme, .proj_dim = 5};

  Combiner ab({a, b}, {}, chars, cfg, rng);
  Tape t1;
  const auto o1 = ab(t1, sent);
  for (std::size_t i = 0; i < sent.size(); ++i) {
    CHECK(o1.word_weights(i, 0) + o1.word_weights(i, 1) == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Same sources in swapped order with the projections swapped to match.
  Combiner ba({b, a}, {}, chars, cfg, rng);
  auto pa = ab.parameters();
  auto pb = ba.parameters();
  pb[0]->value = pa[2]->value;
  pb[1]->value = pa[3]->value;
  pb[2]->value = pa[0]->value;
  pb[3]->value = pa[1]->value;
  pb[4]->value = pa[4]->value;
  Tape t2;
  const auto o2 = ba(t2, sent);
  for (std::size_t i = 0; i < sent.size(); ++i) {
    CHECK(o2.word_weights(i, 0) == doctest::Approx(o1.word_weights(i, 1)).epsilon(1e-12));
    for (std::size_t c = 0; c < 5; ++c) {
      CHECK(o2.vectors.value()(i, c) == doctest::Approx(o1.vectors.value()(i, c)).epsilon(1e-12));
    }
  }

  Combiner single({a}, {}, chars, cfg, rng);
  Tape t3;
  const auto o3 = single(t3, sent);
  auto ps = single.parameters();
  for (std::size_t i = 0; i < sent.size(); ++i) {
    CHECK(o3.word_weights(i, 0) == 1.0);
    const auto x = a.vector(sent[i]);
    for (std::size_t r = 0; r < 5; ++r) {
      double y = ps[1]->value(0, r);
      for (std::size_t c = 0; c < 4; ++c) y += ps[0]->value(r, c) * x[c];
      CHECK(o3.vectors.value()(i, r) == doctest::Approx(y).epsilon(1e-12));
    }
  }

  Combiner twin({a, a}, {}, chars, cfg, rng);
  auto pt = twin.parameters();
  pt[2]->value = pt[0]->value;
  pt[3]->value = pt[1]->value;
  Tape t4;
  const auto o4 = twin(t4, sent);
  for (std::size_t i = 0; i < sent.size(); ++i) {
    CHECK(o4.word_weights(i, 0) == 0.5);
    CHECK(o4.word_weights(i, 1) == 0.5);
  }
}

TEST_CASE("MME, HME and the char BiLSTM pass gradient checks") {
  const auto chars = CharInventory::build(kWords);
  const std::vector<std::string> sent = {"cat", "狗狗", "zz"};
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(100 + k);
    CharEncoder enc("c", chars.size(), 3, 3, rng);
    const auto ids = chars.encode(kWords[k % kWords.size()]);
    const auto r = oracle::gradcheck(
        [&](Tape& t) { return weighted_sum(t, enc.encode(t, ids), k); }, enc.parameters());
    CHECK(r.max_rel_error < 1e-4);
  }
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(200 + k);
    Combiner comb({random_source("a", kWords, 3, rng), random_source("b", kWords, 2, rng)}, {},
                  chars, {.mode = CombineMode::kMme, .proj_dim = 3}, rng);
    const auto r = oracle::gradcheck(
        [&](Tape& t) { return weighted_sum(t, comb(t, sent).vectors, k); }, comb.parameters());
    CHECK(r.max_rel_error < 1e-4);
  }
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(300 + k);
    Combiner comb({random_source("a", kWords, 3, rng), random_source("b", kWords, 2, rng)},
                  {random_source("sa", {"c", "at", "z"}, 2, rng),
                   random_source("sb", {"狗", "猫"}, 3, rng)},
                  chars,
                  {.mode = CombineMode::kHme, .proj_dim = 4, .char_dim = 2, .char_hidden = 2,
                   .subword_heads = 2, .subword_ff = 3},
                  rng);
    jitter(comb.parameters(), rng);
    const auto r = oracle::gradcheck(
        [&](Tape& t) { return weighted_sum(t, comb(t, sent).vectors, k); }, comb.parameters());
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("embedding tables stay frozen") {
  Rng rng(3);
  const auto chars = CharInventory::build(kWords);
  Combiner comb({random_source("a", kWords, 3, rng)}, {random_source("s", {"c", "a"}, 2, rng)},
                chars, {.mode = CombineMode::kHme, .proj_dim = 4, .subword_heads = 1}, rng);
  const Tensor before = comb.word_sources()[0].table().value;
  nn::ParamList ps = comb.parameters();
  ps.push_back(&comb.word_sources()[0].table());
  ps.push_back(&comb.subword_sources()[0].table());
  nn::Adam opt(0.1);
  for (int step = 0; step < 3; ++step) {
    nn::zero_grad(ps);
    Tape t;
    t.backward(weighted_sum(t, comb(t, kWords).vectors, 1));
    opt.step(ps);
  }
  for (double g : comb.word_sources()[0].table().grad.data()) CHECK(g == 0.0);
  for (double g : comb.subword_sources()[0].table().grad.data()) CHECK(g == 0.0);
  CHECK(comb.word_sources()[0].table().value.data() == before.data());
}

namespace {

std::vector<EmbeddingSource> ner_words() {
  return {EmbeddingSource::load_text(kNer / "en.vec", "en"),
          EmbeddingSource::load_text(kNer / "zh.vec", "zh")};
}

std::vector<EmbeddingSource> ner_subwords() {
  return {EmbeddingSource::load_text(kNer / "en.sub.vec", "en.sub", Granularity::kSubword),
          EmbeddingSource::load_text(kNer / "zh.sub.vec", "zh.sub", Granularity::kSubword)};
}

TaggerConfig small_tagger(CombineMode mode) {
  TaggerConfig c;
  c.combiner = {.mode = mode, .proj_dim = 16, .char_dim = 8, .char_hidden = 8,
                .subword_heads = 2, .subword_ff = 16};
  c.model_dim = 16;
  c.layers = 1;
  c.heads = 2;
  c.ff_dim = 32;
  c.dropout = 0.0;
  c.lr = 0.01;
  c.epochs = 30;
  c.seed = 4;
  return c;
}

double token_accuracy(Tagger& t, const Corpus& c) {
  std::size_t ok = 0;
  std::size_t n = 0;
  for (const Utterance& u : c.utterances()) {
    const Tags got = t.tag(u);
    for (std::size_t i = 0; i < u.size(); ++i) ok += got[i] == *u.tokens[i].ner;
    n += u.size();
  }
  return double(ok) / double(n);
}

}  // namespace

TEST_CASE("MME and HME taggers fit the toy NER fixture") {
  const Corpus train = read_conll(kNer / "train.conll");
  REQUIRE(train.size() == 20);
  for (CombineMode mode : {CombineMode::kMme, CombineMode::kHme}) {
    CAPTURE(to_string(mode));
    Tagger t(train, ner_words(), ner_subwords(), small_tagger(mode));
    CHECK_THROWS_AS(t.tag(train.utterances()[0]), ContractError);
    const auto curve = t.train(train);
    CHECK(curve.back() < curve.front());
    CHECK(token_accuracy(t, train) >= 0.95);
    CHECK(t.evaluate(train).f1() >= 0.9);
    const auto detail = t.tag(train.utterances()[0].surfaces());
    CHECK(detail.word_weights.rows() == train.utterances()[0].size());
    if (mode == CombineMode::kHme) CHECK(detail.subword_weights.cols() == 2);
  }
}

TEST_CASE("tagger checkpoints round trip") {
  const Corpus train = read_conll(kNer / "train.conll");
  auto cfg = small_tagger(CombineMode::kMme);
  cfg.epochs = 3;
  Tagger t(train, ner_words(), {}, cfg);
  t.word_specs = {{"en", kNer / "en.vec"}, {"zh", kNer / "zh.vec"}};
  CHECK_THROWS_AS(t.save(std::filesystem::temp_directory_path() / "cslab_tagger"), ContractError);
  t.train(train);
  const auto base = std::filesystem::temp_directory_path() / "cslab_tagger";
  t.save(base);
  Tagger back = Tagger::load(base);
  for (const Utterance& u : train.utterances()) CHECK(back.tag(u) == t.tag(u));
}

TEST_CASE("an all-O corpus tags everything O") {
  Corpus train;
  for (const char* text : {"hello 世界", "good morning 朋友", "我 like tea"}) {
    Utterance u = tokenize(text);
    for (Token& tok : u.tokens) tok.ner = "O";
    train.add(u);
  }
  auto cfg = small_tagger(CombineMode::kMme);
  cfg.epochs = 2;
  Tagger t(train, ner_words(), {}, cfg);
  t.train(train);
  CHECK(t.tag_set() == std::vector<std::string>{"O"});
  for (const Utterance& u : train.utterances()) {
    for (const std::string& tag : t.tag(u)) CHECK(tag == "O");
  }
  Utterance bad = tokenize("no tags");
  Corpus missing;
  missing.add(bad);
  CHECK_THROWS_AS(Tagger(missing, ner_words(), {}, cfg), DataError);
}
