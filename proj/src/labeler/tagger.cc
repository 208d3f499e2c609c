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

#include "cslab/labeler/tagger.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "cslab/error.h"
#include "cslab/nn/checkpoint.h"
#include "cslab/nn/crf.h"
#include "cslab/nn/optim.h"

namespace cslab::labeler {

using nn::Tape;
using nn::Var;

EmbeddingSource SourceSpec::load() const {
  return EmbeddingSource::load_text(path, name, granularity, policy);
}

nlohmann::json SourceSpec::to_json() const {
  return {{"name", name},
          {"path", path.string()},
          {"granularity", granularity == Granularity::kWord ? "word" : "subword"},
          {"oov", std::string(to_string(policy))}};
}

SourceSpec SourceSpec::from_json(const nlohmann::json& j) {
  SourceSpec s;
  s.name = j.at("name").get<std::string>();
  s.path = j.at("path").get<std::string>();
  s.granularity = j.at("granularity").get<std::string>() == "word" ? Granularity::kWord
                                                                   : Granularity::kSubword;
  s.policy = parse_oov_policy(j.at("oov").get<std::string>());
  return s;
}

nlohmann::json TaggerConfig::to_json() const {
  return {{"combiner", combiner.to_json()}, {"model_dim", model_dim}, {"layers", layers},
          {"heads", heads},                 {"ff_dim", ff_dim},       {"dropout", dropout},
          {"lr", lr},                       {"epochs", epochs},       {"seed", seed}};
}

TaggerConfig TaggerConfig::from_json(const nlohmann::json& j) {
  TaggerConfig c;
  c.combiner = CombinerConfig::from_json(j.at("combiner"));
  c.model_dim = j.at("model_dim").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.ff_dim = j.at("ff_dim").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.lr = j.at("lr").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

namespace {

std::vector<std::string> tag_set_of(const Corpus& train) {
  std::set<std::string> seen;
  for (const Utterance& u : train.utterances()) {
    for (const Token& t : u.tokens) {
      if (!t.ner) {
        throw DataError("utterance '" + u.id + "': token '" + t.surface + "' has no NER tag");
      }
      if (*t.ner != "O") seen.insert(*t.ner);
    }
  }
  std::vector<std::string> tags{"O"};
  tags.insert(tags.end(), seen.begin(), seen.end());
  return tags;
}

std::vector<std::string> all_words(const Corpus& train) {
  std::vector<std::string> out;
  for (const Utterance& u : train.utterances()) {
    for (const Token& t : u.tokens) out.push_back(t.surface);
  }
  return out;
}

}  // namespace

Tagger::Tagger(const Corpus& train, std::vector<EmbeddingSource> words,
               std::vector<EmbeddingSource> subwords, const TaggerConfig& config)
    : Tagger(tag_set_of(train), CharInventory::build(all_words(train)), std::move(words),
             std::move(subwords), config) {}

Tagger::Tagger(std::vector<std::string> tags, CharInventory chars,
               std::vector<EmbeddingSource> words, std::vector<EmbeddingSource> subwords,
               const TaggerConfig& config)
    : config_(config), tags_(std::move(tags)), rng_(config.seed) {
  combiner_ = Combiner(std::move(words), std::move(subwords), std::move(chars), config.combiner, rng_);
  in_proj_ = nn::Linear("tagger.in", combiner_.output_dim(), config.model_dim, rng_);
  nn::EncoderLayerConfig enc{config.model_dim, config.heads, config.ff_dim, config.dropout};
  for (std::size_t l = 0; l < config.layers; ++l) {
    layers_.emplace_back("tagger.layer" + std::to_string(l), enc, rng_);
  }
  out_ = nn::Linear("tagger.out", config.model_dim, tags_.size(), rng_);
  transitions_ = nn::Parameter("tagger.transitions", nn::Tensor(tags_.size(), tags_.size()));
}

nn::ParamList Tagger::parameters() {
  nn::ParamList out = combiner_.parameters();
  auto take = [&](nn::ParamList ps) { out.insert(out.end(), ps.begin(), ps.end()); };
  take(in_proj_.parameters());
  for (auto& l : layers_) take(l.parameters());
  take(out_.parameters());
  out.push_back(&transitions_);
  return out;
}

Var Tagger::emissions(Tape& tape, const std::vector<std::string>& words, Rng* dropout_rng,
                      CombinerOutput* detail) {
  CombinerOutput c = combiner_(tape, words);
  Var x = in_proj_(tape, c.vectors);
  x = nn::add(x, tape.constant(nn::positional_encoding(words.size(), config_.model_dim)));
  for (auto& layer : layers_) x = layer(tape, x, dropout_rng);
  if (detail) *detail = std::move(c);
  return out_(tape, x);
}

std::vector<std::size_t> Tagger::tag_ids(const Utterance& utt) const {
  std::vector<std::size_t> ids;
  for (const Token& t : utt.tokens) {
    if (!t.ner) throw DataError("utterance '" + utt.id + "': token '" + t.surface + "' has no NER tag");
    auto it = std::find(tags_.begin(), tags_.end(), *t.ner);
    if (it == tags_.end()) {
      throw DataError("utterance '" + utt.id + "': tag '" + *t.ner + "' was not seen in training");
    }
    ids.push_back(static_cast<std::size_t>(it - tags_.begin()));
  }
  return ids;
}

Var Tagger::loss(Tape& tape, const Utterance& utt, Rng* dropout_rng) {
  const auto gold = tag_ids(utt);
  return nn::crf_nll(emissions(tape, utt.surfaces(), dropout_rng, nullptr),
                     tape.param(transitions_), gold);
}

std::vector<double> Tagger::train(const Corpus& train) {
  if (train.empty()) throw DataError("empty training corpus for the tagger");
  nn::Adam opt(config_.lr);
  const nn::ParamList params = parameters();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> curve;
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    rng_.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t i : order) {
      nn::zero_grad(params);
      Tape tape;
      Var l = loss(tape, train.utterances()[i], &rng_);
      total += l.item();
      tape.backward(l);
      opt.step(params);
    }
    curve.push_back(total / static_cast<double>(train.size()));
  }
  trained_ = true;
  return curve;
}

Tagging Tagger::tag(const std::vector<std::string>& words) {
  if (!trained_) throw ContractError("state: the tagger has not been trained or loaded");
  Tagging out;
  if (words.empty()) return out;
  Tape tape;
  CombinerOutput detail;
  Var e = emissions(tape, words, nullptr, &detail);
  for (std::size_t id : nn::crf_viterbi(e.value(), transitions_.value)) out.raw.push_back(tags_[id]);
  out.tags = iob_repair(out.raw);
  out.word_weights = detail.word_weights;
  out.subword_weights = detail.subword_weights;
  return out;
}

F1Report Tagger::evaluate(const Corpus& gold) {
  std::vector<Tags> g;
  std::vector<Tags> p;
  for (const Utterance& u : gold.utterances()) {
    Tags gt;
    for (const Token& t : u.tokens) {
      if (!t.ner) throw DataError("utterance '" + u.id + "': token '" + t.surface + "' has no NER tag");
      gt.push_back(*t.ner);
    }
    g.push_back(std::move(gt));
    p.push_back(tag(u));
  }
  return entity_f1(g, p);
}

void Tagger::save(const std::filesystem::path& base) {
  if (!trained_) throw ContractError("state: refusing to save an untrained tagger");
  nlohmann::json words = nlohmann::json::array();
  nlohmann::json subwords = nlohmann::json::array();
  for (const SourceSpec& s : word_specs) words.push_back(s.to_json());
  for (const SourceSpec& s : subword_specs) subwords.push_back(s.to_json());
  nlohmann::json cfg{{"kind", "tagger"},
                     {"config", config_.to_json()},
                     {"tags", tags_},
                     {"chars", combiner_.chars().to_json()},
                     {"word_sources", words},
                     {"subword_sources", subwords}};
  nn::save_checkpoint(base, parameters(), cfg);
}

Tagger Tagger::load(const std::filesystem::path& base) {
  const nlohmann::json cfg = nn::read_checkpoint_config(base);
  if (cfg.value("kind", "") != "tagger") throw DataError(base.string() + " is not a tagger checkpoint");
  std::vector<SourceSpec> wspecs;
  std::vector<SourceSpec> sspecs;
  std::vector<EmbeddingSource> words;
  std::vector<EmbeddingSource> subwords;
  for (const auto& j : cfg.at("word_sources")) {
    wspecs.push_back(SourceSpec::from_json(j));
    words.push_back(wspecs.back().load());
  }
  for (const auto& j : cfg.at("subword_sources")) {
    sspecs.push_back(SourceSpec::from_json(j));
    subwords.push_back(sspecs.back().load());
  }
  Tagger t(cfg.at("tags").get<std::vector<std::string>>(), CharInventory::from_json(cfg.at("chars")),
           std::move(words), std::move(subwords), TaggerConfig::from_json(cfg.at("config")));
  nn::load_checkpoint(base, t.parameters());
  t.word_specs = std::move(wspecs);
  t.subword_specs = std::move(sspecs);
  t.trained_ = true;
  return t;
}

}  // namespace cslab::labeler
