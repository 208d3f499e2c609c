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

#include "cslab/lm.h"

#include <cmath>
#include <limits>
#include <map>

#include "cslab/error.h"
#include "cslab/nn/checkpoint.h"
#include "cslab/nn/optim.h"

namespace cslab::lm {

using nn::Tape;
using nn::Tensor;
using nn::Var;

TokenVocab::TokenVocab() {
  add(cslab::kUnk);
  add(cslab::kBos);
  add(cslab::kEos);
}

TokenVocab TokenVocab::build(const std::vector<const Corpus*>& corpora,
                             std::size_t min_count, bool pos) {
  std::map<std::string, std::size_t> counts;
  for (const Corpus* c : corpora) {
    for (const Utterance& u : c->utterances()) {
      for (const Token& t : u.tokens) {
        if (!pos) {
          ++counts[t.surface];
        } else if (t.pos) {
          ++counts[*t.pos];
        }
      }
    }
  }
  TokenVocab v;
  for (const auto& [w, n] : counts) {
    if (n >= min_count) v.add(w);
  }
  return v;
}

int TokenVocab::add(std::string_view word) {
  auto it = ids_.find(std::string(word));
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(words_.size());
  words_.emplace_back(word);
  ids_.emplace(words_.back(), id);
  return id;
}

int TokenVocab::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

bool TokenVocab::contains(std::string_view word) const {
  return ids_.contains(std::string(word));
}

const std::string& TokenVocab::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
    throw ContractError("vocabulary id " + std::to_string(id) + " out of range");
  }
  return words_[static_cast<std::size_t>(id)];
}

nlohmann::json TokenVocab::to_json() const { return words_; }

TokenVocab TokenVocab::from_json(const nlohmann::json& j) {
  TokenVocab v;
  const auto words = j.get<std::vector<std::string>>();
  if (words.size() < 3 || words[0] != cslab::kUnk || words[1] != cslab::kBos ||
      words[2] != cslab::kEos) {
    throw DataError("vocabulary does not start with the reserved entries");
  }
  for (const std::string& w : words) v.add(w);
  if (v.size() != words.size()) throw DataError("vocabulary holds duplicate entries");
  return v;
}

nlohmann::json LmConfig::to_json() const {
  return {{"hidden", hidden}, {"tie_weights", tie_weights}, {"multitask", multitask},
          {"pos_dim", pos_dim}, {"p", p}};
}

LmConfig LmConfig::from_json(const nlohmann::json& j) {
  LmConfig c;
  c.hidden = j.at("hidden").get<std::size_t>();
  c.tie_weights = j.at("tie_weights").get<bool>();
  c.multitask = j.at("multitask").get<bool>();
  c.pos_dim = j.at("pos_dim").get<std::size_t>();
  c.p = j.at("p").get<double>();
  return c;
}

LanguageModel::LanguageModel(TokenVocab words, TokenVocab pos, const LmConfig& config,
                             std::uint64_t seed)
    : words_(std::move(words)), pos_(std::move(pos)), config_(config) {
  if (config.hidden == 0) throw ContractError("hidden size must be positive");
  if (!(config.p >= 0.0 && config.p <= 1.0)) {
    throw ContractError("multi-task weight p must lie in [0, 1]");
  }
  Rng rng(seed);
  const std::size_t v = words_.size();
  const std::size_t d = config.hidden;
  embed_ = nn::Parameter("lm.embed", Tensor(v, d));
  for (double& x : embed_.value.data()) x = rng.uniform(-0.1, 0.1);
  if (!config.tie_weights) {
    out_weight_ = nn::Parameter("lm.out_weight", Tensor(v, d));
    for (double& x : out_weight_.value.data()) x = rng.uniform(-0.1, 0.1);
  }
  out_bias_ = nn::Parameter("lm.out_bias", Tensor(1, v));
  const std::size_t input = config.multitask ? d + config.pos_dim : d;
  lstm_ = nn::LstmParams("lm.lstm", input, d, rng);
  if (config.multitask) {
    if (config.pos_dim == 0) throw ContractError("pos_dim must be positive");
    pos_embed_ = nn::Parameter("lm.pos_embed", Tensor(pos_.size(), config.pos_dim));
    for (double& x : pos_embed_.value.data()) x = rng.uniform(-0.1, 0.1);
    pos_lstm_ = nn::LstmParams("lm.pos_lstm", config.pos_dim, d, rng);
    pos_out_ = nn::Linear("lm.pos_out", d, pos_.size(), rng);
  }
}

nn::ParamList LanguageModel::parameters() {
  nn::ParamList out = {&embed_};
  if (!config_.tie_weights) out.push_back(&out_weight_);
  out.push_back(&out_bias_);
  for (nn::Parameter* p : lstm_.parameters()) out.push_back(p);
  if (config_.multitask) {
    out.push_back(&pos_embed_);
    for (nn::Parameter* p : pos_lstm_.parameters()) out.push_back(p);
    for (nn::Parameter* p : pos_out_.parameters()) out.push_back(p);
  }
  return out;
}

void LanguageModel::check_ids(std::span<const int> ids, std::size_t limit,
                              const char* what) const {
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= limit) {
      throw ContractError(std::string(what) + " id " + std::to_string(id) +
                          " outside vocabulary of size " + std::to_string(limit));
    }
  }
}

Var LanguageModel::word_logits(Tape& tape, Var hidden) {
  Var logits = nn::matmul_nt(hidden, tape.param(output_weight()));
  return nn::add_row(logits, tape.param(out_bias_));
}

Var LanguageModel::pos_logits(Tape& tape, Var hidden) { return pos_out_(tape, hidden); }

LanguageModel::State LanguageModel::initial_state(Tape& tape) {
  State s{nn::lstm_zero_state(tape, config_.hidden), {}};
  if (config_.multitask) s.pt = nn::lstm_zero_state(tape, config_.hidden);
  return s;
}

LanguageModel::StepOutput LanguageModel::step(Tape& tape, int word, int pos,
                                              const State& state) {
  const int w[] = {word};
  check_ids(w, words_.size(), "word");
  Var x = nn::gather_rows(tape.param(embed_), {static_cast<std::size_t>(word)});
  if (!config_.multitask) {
    const nn::LstmState u = nn::lstm_step(tape, lstm_, x, state.lm);
    return {word_logits(tape, u.h), {}, {u, {}}};
  }
  const int p[] = {pos};
  check_ids(p, pos_.size(), "POS");
  Var xp = nn::gather_rows(tape.param(pos_embed_), {static_cast<std::size_t>(pos)});
  const nn::LstmState u = nn::lstm_step(tape, lstm_, nn::concat_cols({x, xp}), state.lm);
  const nn::LstmState v = nn::lstm_step(tape, pos_lstm_, xp, state.pt);
  return {word_logits(tape, nn::add(u.h, v.h)), pos_logits(tape, v.h), {u, v}};
}

LanguageModel::Heads LanguageModel::run(Tape& tape, std::span<const int> words,
                                        std::span<const int> pos) {
  check_ids(words, words_.size(), "word");
  const std::vector<std::size_t> wid(words.begin(), words.end());
  Var x = nn::gather_rows(tape.param(embed_), wid);
  if (!config_.multitask) {
    return {word_logits(tape, nn::lstm_run(tape, lstm_, x).first), {}};
  }
  if (pos.size() != words.size()) {
    throw DataError("multi-task model needs a POS stream of the same length as the words");
  }
  check_ids(pos, pos_.size(), "POS");
  const std::vector<std::size_t> pid(pos.begin(), pos.end());
  Var xp = nn::gather_rows(tape.param(pos_embed_), pid);
  Var u = nn::lstm_run(tape, lstm_, nn::concat_cols({x, xp})).first;
  Var v = nn::lstm_run(tape, pos_lstm_, xp).first;
  return {word_logits(tape, nn::add(u, v)), pos_logits(tape, v)};
}

LanguageModel::Losses LanguageModel::loss(Tape& tape, const Encoded& s) {
  if (s.words.size() < 2) throw ContractError("encoded sentence lacks <s> ... </s> framing");
  const std::size_t n = s.words.size() - 1;
  std::span<const int> words(s.words);
  std::span<const int> pos(s.pos);
  if (config_.multitask && s.pos.size() != s.words.size()) {
    throw DataError("missing POS stream for sentence '" + s.id + "'");
  }
  const Heads h = run(tape, words.first(n), config_.multitask ? pos.first(n) : pos);
  const std::vector<std::size_t> next(s.words.begin() + 1, s.words.end());
  Losses out;
  out.tokens = n;
  out.lm = nn::cross_entropy(h.words, next);
  if (!config_.multitask) {
    out.total = out.lm;
    return out;
  }
  const std::vector<std::size_t> next_pos(s.pos.begin() + 1, s.pos.end());
  out.pos = nn::cross_entropy(h.pos, next_pos);
  out.total = nn::add(nn::scale(out.lm, config_.p), nn::scale(out.pos, 1.0 - config_.p));
  return out;
}

Tensor LanguageModel::lm_forward(std::span<const int> ids) {
  if (config_.multitask) throw DataError("multi-task model needs a POS stream");
  return lm_forward(ids, {});
}

Tensor LanguageModel::lm_forward(std::span<const int> ids, std::span<const int> pos) {
  if (ids.empty()) throw ContractError("lm_forward on an empty sequence");
  Tape tape;
  return nn::softmax(run(tape, ids, pos).words).value();
}

Encoded LanguageModel::encode(const Utterance& u) const {
  Encoded e;
  e.id = u.id;
  e.words.push_back(TokenVocab::kBos);
  for (const Token& t : u.tokens) e.words.push_back(words_.id(t.surface));
  e.words.push_back(TokenVocab::kEos);
  if (config_.multitask) {
    e.pos.push_back(TokenVocab::kBos);
    for (const Token& t : u.tokens) {
      if (!t.pos) {
        throw DataError("missing POS tag on token '" + t.surface + "' in utterance '" +
                        u.id + "'");
      }
      e.pos.push_back(pos_.id(*t.pos));
    }
    e.pos.push_back(TokenVocab::kEos);
  }
  e.buckets = bucket_transitions(u);
  e.buckets.push_back(SegmentBucket::kOther);
  return e;
}

void LanguageModel::save(const std::filesystem::path& base) {
  nn::save_checkpoint(base, parameters(),
                      {{"kind", "lstm-lm"},
                       {"model", config_.to_json()},
                       {"words", words_.to_json()},
                       {"pos", pos_.to_json()}});
}

LanguageModel LanguageModel::load(const std::filesystem::path& base) {
  const nlohmann::json cfg = nn::read_checkpoint_config(base);
  if (cfg.value("kind", "") != "lstm-lm") {
    throw DataError(base.string() + " is not a language model checkpoint");
  }
  LanguageModel m(TokenVocab::from_json(cfg.at("words")), TokenVocab::from_json(cfg.at("pos")),
                  LmConfig::from_json(cfg.at("model")), 0);
  nn::load_checkpoint(base, m.parameters());
  return m;
}

PplReport neural_ppl(LanguageModel& model, const Corpus& corpus, bool split_buckets) {
  PplReport report;
  for (const Utterance& u : corpus.utterances()) {
    const Encoded e = model.encode(u);
    const std::size_t n = e.words.size() - 1;
    Tape tape;
    std::span<const int> pos(e.pos);
    const Tensor dist =
        model.lm_forward(std::span<const int>(e.words).first(n),
                         model.config().multitask ? pos.first(n) : pos);
    for (std::size_t t = 0; t < n; ++t) {
      const double nll = -std::log(dist(t, static_cast<std::size_t>(e.words[t + 1])));
      report.nll += nll;
      ++report.tokens;
      if (split_buckets) {
        BucketPpl& b = report.buckets[e.buckets[t]];
        b.nll += nll;
        ++b.tokens;
      }
    }
  }
  return report;
}

double mean_nll(LanguageModel& model, const std::vector<Encoded>& sentences) {
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const Encoded& e : sentences) {
    Tape tape;
    const auto l = model.loss(tape, e);
    nll += l.lm.item();
    tokens += l.tokens;
  }
  if (tokens == 0) throw DataError("no tokens to evaluate");
  return nll / static_cast<double>(tokens);
}

TrainLog train(LanguageModel& model, const std::vector<Encoded>& train_set,
               const std::vector<Encoded>& valid_set, const TrainConfig& config) {
  if (train_set.empty()) throw DataError("empty training set");
  const nn::ParamList params = model.parameters();
  Rng rng(config.seed);
  nn::Sgd sgd(config.lr);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainLog log;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_values;
  std::size_t bad = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    std::size_t tokens = 0;
    for (std::size_t i : order) {
      nn::zero_grad(params);
      Tape tape;
      const auto l = model.loss(tape, train_set[i]);
      tape.backward(l.total);
      nn::clip_grad_norm(params, config.clip);
      log.max_clipped_norm = std::max(log.max_clipped_norm, nn::grad_norm(params));
      sgd.step(params);
      total += l.total.item();
      tokens += l.tokens;
      ++log.steps;
    }
    EpochLog e{epoch, sgd.lr(), total / static_cast<double>(tokens), 0.0};
    e.valid_nll = valid_set.empty() ? mean_nll(model, train_set) : mean_nll(model, valid_set);
    log.epochs.push_back(e);
    if (e.valid_nll < best) {
      best = e.valid_nll;
      best_values.clear();
      for (nn::Parameter* p : params) best_values.push_back(p->value);
      bad = 0;
    } else {
      sgd.set_lr(sgd.lr() * config.decay);
      if (++bad >= config.patience) {
        log.early_stopped = true;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < params.size() && !best_values.empty(); ++i) {
    params[i]->value = best_values[i];
  }
  log.best_valid_nll = best;
  return log;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRealOnly: return "real";
    case Strategy::kGenOnly: return "gen";
    case Strategy::kConcat: return "concat";
    case Strategy::kPretrainFinetune: return "pretrain-finetune";
  }
  return "?";
}

Strategy parse_strategy(std::string_view text) {
  for (Strategy s : {Strategy::kRealOnly, Strategy::kGenOnly, Strategy::kConcat,
                     Strategy::kPretrainFinetune}) {
    if (to_string(s) == text) return s;
  }
  throw DataError("unknown strategy '" + std::string(text) + "'");
}

namespace {

std::vector<Encoded> encode_all(const LanguageModel& m, const Corpus& c) {
  std::vector<Encoded> out;
  out.reserve(c.size());
  for (const Utterance& u : c.utterances()) out.push_back(m.encode(u));
  return out;
}

void require(const std::vector<Encoded>& set, const char* name) {
  if (set.empty()) throw DataError(std::string("empty ") + name + " corpus for the selected stage");
}

}  // namespace

StrategyResult run_strategy(const TrainPlan& plan, const Corpus& gen, const Corpus& real,
                            const Corpus& valid, const Corpus& test,
                            const LmConfig& config, std::uint64_t seed) {
  const std::vector<const Corpus*> sources = {&gen, &real};
  StrategyResult r{LanguageModel(TokenVocab::build(sources, plan.min_count),
                                 TokenVocab::build(sources, 1, true), config, seed),
                   {}, {}, std::nullopt, std::nullopt, std::nullopt};
  const std::vector<Encoded> gen_set = encode_all(r.model, gen);
  const std::vector<Encoded> real_set = encode_all(r.model, real);
  const std::vector<Encoded> valid_set = encode_all(r.model, valid);
  TrainConfig opt = plan.optimizer;
  opt.seed = seed;
  auto stage = [&](const std::vector<Encoded>& data, const TrainConfig& c) {
    r.stage_sizes.push_back(data.size());
    r.stages.push_back(train(r.model, data, valid_set, c));
  };
  switch (plan.strategy) {
    case Strategy::kRealOnly:
      require(real_set, "real");
      stage(real_set, opt);
      break;
    case Strategy::kGenOnly:
      require(gen_set, "generated");
      stage(gen_set, opt);
      break;
    case Strategy::kConcat: {
      std::vector<Encoded> both = gen_set;
      both.insert(both.end(), real_set.begin(), real_set.end());
      require(both, "concatenated");
      stage(both, opt);
      break;
    }
    case Strategy::kPretrainFinetune: {
      require(gen_set, "generated");
      require(real_set, "real");
      stage(gen_set, opt);
      r.pretrain_checksum = nn::checksum(r.model.parameters());
      TrainConfig fine = opt;
      fine.lr = plan.finetune_lr;
      fine.seed = seed + 1;
      r.finetune_start_checksum = nn::checksum(r.model.parameters());
      stage(real_set, fine);
      break;
    }
  }
  if (!test.empty()) r.test = neural_ppl(r.model, test, true);
  return r;
}

}  // namespace cslab::lm
