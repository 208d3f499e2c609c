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

#include "cslab/pg.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "cslab/error.h"
#include "cslab/nn/checkpoint.h"
#include "cslab/nn/optim.h"

namespace cslab::pg {

using lm::TokenVocab;
using nn::Tape;
using nn::Tensor;
using nn::Var;

std::vector<std::string> make_input(const std::vector<std::string>& l1,
                                    const std::vector<std::string>& l2) {
  std::vector<std::string> out = l1;
  out.emplace_back(kSep);
  out.insert(out.end(), l2.begin(), l2.end());
  return out;
}

Var final_dist(Var p_vocab, Var attention, Var p_gen, const std::vector<std::size_t>& ext_ids,
               std::size_t ext_size) {
  const Tensor& pv = p_vocab.value();
  const Tensor& a = attention.value();
  if (pv.rows() != 1 || a.rows() != 1 || p_gen.rows() != 1 || p_gen.cols() != 1) {
    throw ContractError("final_dist expects row vectors and a scalar gate");
  }
  if (a.cols() != ext_ids.size()) {
    throw ContractError("final_dist: " + std::to_string(a.cols()) + " attention weights for " +
                        std::to_string(ext_ids.size()) + " input positions");
  }
  if (pv.cols() > ext_size) throw ContractError("final_dist: extended size below vocab size");
  for (std::size_t id : ext_ids) {
    if (id >= ext_size) throw ContractError("final_dist: input id beyond the extended vocabulary");
  }
  const double g = p_gen.value()[0];
  Tensor out(1, ext_size);
  for (std::size_t w = 0; w < pv.cols(); ++w) out[w] = g * pv[w];
  for (std::size_t i = 0; i < ext_ids.size(); ++i) out[ext_ids[i]] += (1.0 - g) * a[i];
  Tape* tape = p_vocab.tape();
  return tape->record(std::move(out), {p_vocab, attention, p_gen},
                      [tape, p_vocab, attention, p_gen, ext_ids](const Tensor& grad) {
                        const Tensor& pv = p_vocab.value();
                        const Tensor& a = attention.value();
                        const double g = p_gen.value()[0];
                        Tensor gv(1, pv.cols());
                        Tensor ga(1, a.cols());
                        double gg = 0.0;
                        for (std::size_t w = 0; w < pv.cols(); ++w) {
                          gv[w] = g * grad[w];
                          gg += pv[w] * grad[w];
                        }
                        for (std::size_t i = 0; i < ext_ids.size(); ++i) {
                          ga[i] = (1.0 - g) * grad[ext_ids[i]];
                          gg -= a[i] * grad[ext_ids[i]];
                        }
                        tape->accumulate(p_vocab, gv);
                        tape->accumulate(attention, ga);
                        tape->accumulate(p_gen, Tensor::scalar(gg));
                      });
}

nlohmann::json PgConfig::to_json() const {
  return {{"embed", embed},   {"hidden", hidden}, {"min_count", min_count},
          {"lr", lr},         {"decay", decay},   {"clip", clip},
          {"epochs", epochs}, {"seed", seed}};
}

PgConfig PgConfig::from_json(const nlohmann::json& j) {
  PgConfig c;
  c.embed = j.at("embed").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.min_count = j.at("min_count").get<std::size_t>();
  c.lr = j.at("lr").get<double>();
  c.decay = j.at("decay").get<double>();
  c.clip = j.at("clip").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

PointerGenerator::PointerGenerator(TokenVocab vocab, const PgConfig& config)
    : vocab_(std::move(vocab)), config_(config) {
  if (config.embed == 0 || config.hidden == 0) throw ContractError("pointer-gen sizes must be positive");
  vocab_.add(kSep);
  Rng rng(config.seed);
  const std::size_t e = config.embed;
  const std::size_t h = config.hidden;
  embed_ = nn::Parameter("pg.embed", Tensor(vocab_.size(), e));
  for (double& x : embed_.value.data()) x = rng.uniform(-0.1, 0.1);
  enc_fwd_ = nn::LstmParams("pg.enc_fwd", e, h, rng);
  enc_bwd_ = nn::LstmParams("pg.enc_bwd", e, h, rng);
  reduce_h_ = nn::Linear("pg.reduce_h", 2 * h, h, rng);
  reduce_c_ = nn::Linear("pg.reduce_c", 2 * h, h, rng);
  dec_ = nn::LstmParams("pg.dec", e, h, rng);
  attn_ = nn::Linear("pg.attn", 2 * h, h, rng, false);
  out_ = nn::Linear("pg.out", 3 * h, vocab_.size(), rng);
  gate_ = nn::Linear("pg.gate", 3 * h + e, 1, rng);
}

TokenVocab PointerGenerator::build_vocab(const std::vector<Example>& examples,
                                         std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const Example& ex : examples) {
    for (const std::string& w : ex.input) ++counts[w];
    for (const std::string& w : ex.target) ++counts[w];
  }
  TokenVocab v;
  v.add(kSep);
  for (const auto& [w, n] : counts) {
    if (n >= min_count) v.add(w);
  }
  return v;
}

nn::ParamList PointerGenerator::parameters() {
  nn::ParamList out = {&embed_};
  for (nn::LstmParams* l : {&enc_fwd_, &enc_bwd_, &dec_}) {
    for (nn::Parameter* p : l->parameters()) out.push_back(p);
  }
  for (nn::Linear* l : {&reduce_h_, &reduce_c_, &attn_, &out_, &gate_}) {
    for (nn::Parameter* p : l->parameters()) out.push_back(p);
  }
  return out;
}

SourceMap PointerGenerator::map_source(const std::vector<std::string>& input) const {
  if (input.empty()) throw ContractError("pointer-gen input is empty");
  SourceMap m;
  const std::size_t v = vocab_.size();
  for (const std::string& w : input) {
    if (vocab_.contains(w)) {
      const auto id = static_cast<std::size_t>(vocab_.id(w));
      m.vocab_ids.push_back(id);
      m.ext_ids.push_back(id);
      continue;
    }
    m.vocab_ids.push_back(TokenVocab::kUnk);
    auto it = std::find(m.oov.begin(), m.oov.end(), w);
    if (it == m.oov.end()) {
      m.oov.push_back(w);
      it = m.oov.end() - 1;
    }
    m.ext_ids.push_back(v + static_cast<std::size_t>(it - m.oov.begin()));
  }
  return m;
}

std::vector<std::size_t> PointerGenerator::map_target(const Example& ex, const SourceMap& src,
                                                      std::size_t index) const {
  std::vector<std::size_t> out;
  for (const std::string& w : ex.target) {
    if (vocab_.contains(w)) {
      out.push_back(static_cast<std::size_t>(vocab_.id(w)));
      continue;
    }
    auto it = std::find(src.oov.begin(), src.oov.end(), w);
    if (it == src.oov.end()) {
      throw DataError("pair " + std::to_string(index) + ": target word '" + w +
                      "' is neither in the vocabulary nor in the input");
    }
    out.push_back(vocab_.size() + static_cast<std::size_t>(it - src.oov.begin()));
  }
  out.push_back(TokenVocab::kEos);
  return out;
}

std::size_t PointerGenerator::input_id(std::size_t ext) const {
  return ext < vocab_.size() ? ext : static_cast<std::size_t>(TokenVocab::kUnk);
}

std::string PointerGenerator::ext_word(std::size_t ext, const SourceMap& src) const {
  if (ext < vocab_.size()) return vocab_.word(static_cast<int>(ext));
  return src.oov.at(ext - vocab_.size());
}

PointerGenerator::Encoding PointerGenerator::encode(Tape& tape, const SourceMap& src) {
  Var xs = nn::gather_rows(tape.param(embed_), src.vocab_ids);
  auto [fwd, f_last] = nn::lstm_run(tape, enc_fwd_, xs);
  auto [bwd, b_last] = nn::lstm_run(tape, enc_bwd_, xs, true);
  Encoding enc;
  enc.states = nn::concat_cols({fwd, bwd});
  enc.projected = attn_(tape, enc.states);
  enc.init.h = nn::tanh(reduce_h_(tape, nn::concat_cols({f_last.h, b_last.h})));
  enc.init.c = reduce_c_(tape, nn::concat_cols({f_last.c, b_last.c}));
  return enc;
}

PointerGenerator::Output PointerGenerator::decode_step(Tape& tape, const Encoding& enc,
                                                       const SourceMap& src, std::size_t prev_ext,
                                                       const nn::LstmState& state) {
  Var x = nn::gather_rows(tape.param(embed_), {input_id(prev_ext)});
  const nn::LstmState s = nn::lstm_step(tape, dec_, x, state);
  Var a = nn::softmax(nn::matmul_nt(s.h, enc.projected));
  Var ctx = nn::matmul(a, enc.states);
  Var p_vocab = nn::softmax(out_(tape, nn::concat_cols({s.h, ctx})));
  Var g = nn::sigmoid(gate_(tape, nn::concat_cols({ctx, s.h, x})));
  Var dist = final_dist(p_vocab, a, g, src.ext_ids, vocab_.size() + src.oov.size());
  return {dist, a, g, s};
}

Var PointerGenerator::loss(Tape& tape, const Example& ex, std::size_t index) {
  const SourceMap src = map_source(ex.input);
  const std::vector<std::size_t> target = map_target(ex, src, index);
  const Encoding enc = encode(tape, src);
  nn::LstmState state = enc.init;
  std::size_t prev = TokenVocab::kBos;
  std::vector<Var> nll;
  for (std::size_t y : target) {
    const Output out = decode_step(tape, enc, src, prev, state);
    nll.push_back(nn::log(nn::pick(out.dist, 0, y)));
    state = out.state;
    prev = y;
  }
  return nn::scale(nn::sum(nn::concat_cols(nll)), -1.0);
}

std::vector<DecodeStep> PointerGenerator::teacher_forced(const Example& ex) {
  const SourceMap src = map_source(ex.input);
  const std::vector<std::size_t> target = map_target(ex, src, 0);
  Tape tape;
  const Encoding enc = encode(tape, src);
  nn::LstmState state = enc.init;
  std::size_t prev = TokenVocab::kBos;
  std::vector<DecodeStep> out;
  for (std::size_t y : target) {
    const Output o = decode_step(tape, enc, src, prev, state);
    out.push_back({o.dist.value(), o.attention.value(), o.p_gen.item()});
    state = o.state;
    prev = y;
  }
  return out;
}

namespace {

struct Partial {
  Hypothesis hyp;
  nn::LstmState state;
  std::vector<double> attention;  // flattened rows
};

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.ids < b.ids;
}

Tensor rows_to_tensor(const std::vector<double>& flat, std::size_t cols) {
  return Tensor(cols == 0 ? 0 : flat.size() / cols, cols, flat);
}

}  // namespace

Hypothesis PointerGenerator::greedy(const std::vector<std::string>& input, std::size_t max_len) {
  const SourceMap src = map_source(input);
  Tape tape;
  const Encoding enc = encode(tape, src);
  nn::LstmState state = enc.init;
  std::size_t prev = TokenVocab::kBos;
  Hypothesis h;
  std::vector<double> attn;
  for (std::size_t t = 0; t < max_len; ++t) {
    const Output o = decode_step(tape, enc, src, prev, state);
    const Tensor& d = o.dist.value();
    std::size_t best = 0;
    for (std::size_t w = 1; w < d.cols(); ++w) {
      if (d[w] > d[best]) best = w;
    }
    h.log_prob += std::log(d[best]);
    h.ids.push_back(best);
    h.p_gens.push_back(o.p_gen.item());
    const auto& a = o.attention.value().data();
    attn.insert(attn.end(), a.begin(), a.end());
    if (best == static_cast<std::size_t>(TokenVocab::kEos)) {
      h.finished = true;
      break;
    }
    h.tokens.push_back(ext_word(best, src));
    state = o.state;
    prev = best;
  }
  h.attention = rows_to_tensor(attn, input.size());
  return h;
}

std::vector<Hypothesis> PointerGenerator::beam_search(const std::vector<std::string>& input,
                                                      const BeamConfig& config) {
  if (config.n_best < 1 || config.width < config.n_best) {
    throw ContractError("beam search needs width >= n_best >= 1");
  }
  const SourceMap src = map_source(input);
  const std::size_t n = input.size();
  Tape tape;
  const Encoding enc = encode(tape, src);
  std::vector<Partial> live = {{{}, enc.init, {}}};
  std::vector<Partial> finished;
  bool exhausted = true;
  for (std::size_t t = 0; t < config.max_len; ++t) {
    std::vector<Partial> candidates;
    for (const Partial& p : live) {
      const std::size_t prev = p.hyp.ids.empty() ? static_cast<std::size_t>(TokenVocab::kBos)
                                                 : p.hyp.ids.back();
      const Output o = decode_step(tape, enc, src, prev, p.state);
      const Tensor& d = o.dist.value();
      std::vector<std::size_t> order(d.cols());
      for (std::size_t w = 0; w < order.size(); ++w) order[w] = w;
      const std::size_t k = std::min(config.width, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t a, std::size_t b) {
                          return d[a] != d[b] ? d[a] > d[b] : a < b;
                        });
      const auto& a = o.attention.value().data();
      for (std::size_t j = 0; j < k; ++j) {
        Partial c = p;
        c.state = o.state;
        c.hyp.ids.push_back(order[j]);
        c.hyp.log_prob += std::log(d[order[j]]);
        c.hyp.p_gens.push_back(o.p_gen.item());
        c.attention.insert(c.attention.end(), a.begin(), a.end());
        if (order[j] == static_cast<std::size_t>(TokenVocab::kEos)) {
          c.hyp.finished = true;
        } else {
          c.hyp.tokens.push_back(ext_word(order[j], src));
        }
        candidates.push_back(std::move(c));
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Partial& a, const Partial& b) { return better(a.hyp, b.hyp); });
    if (candidates.size() > config.width) candidates.resize(config.width);
    live.clear();
    for (Partial& c : candidates) {
      (c.hyp.finished ? finished : live).push_back(std::move(c));
    }
    std::stable_sort(finished.begin(), finished.end(),
                     [](const Partial& a, const Partial& b) { return better(a.hyp, b.hyp); });
    // Scores only fall as hypotheses grow, so nothing live can overtake the
    // current n-best finished set.
    const bool settled = finished.size() >= config.n_best &&
                         (live.empty() ||
                          finished[config.n_best - 1].hyp.log_prob >= live.front().hyp.log_prob);
    if (live.empty() || settled) {
      exhausted = false;
      break;
    }
  }
  std::vector<Hypothesis> pool;
  for (Partial& p : finished) {
    p.hyp.attention = rows_to_tensor(p.attention, n);
    pool.push_back(std::move(p.hyp));
  }
  if (exhausted) {
    for (Partial& p : live) {
      p.hyp.attention = rows_to_tensor(p.attention, n);
      pool.push_back(std::move(p.hyp));
    }
  }
  Hypothesis g = greedy(input, config.max_len);
  if (std::none_of(pool.begin(), pool.end(), [&](const Hypothesis& h) { return h.ids == g.ids; })) {
    pool.push_back(std::move(g));
  }
  std::stable_sort(pool.begin(), pool.end(), better);
  if (pool.size() > config.n_best) pool.resize(config.n_best);
  return pool;
}

void PointerGenerator::save(const std::filesystem::path& base) {
  nn::save_checkpoint(base, parameters(),
                      {{"kind", "pointer-gen"}, {"model", config_.to_json()}, {"vocab", vocab_.to_json()}});
}

PointerGenerator PointerGenerator::load(const std::filesystem::path& base) {
  const nlohmann::json cfg = nn::read_checkpoint_config(base);
  if (cfg.value("kind", "") != "pointer-gen") {
    throw DataError(base.string() + " is not a pointer-gen checkpoint");
  }
  PointerGenerator m(TokenVocab::from_json(cfg.at("vocab")), PgConfig::from_json(cfg.at("model")));
  nn::load_checkpoint(base, m.parameters());
  return m;
}

std::vector<PgEpoch> train_pg(PointerGenerator& model, const std::vector<Example>& examples,
                              const PgConfig& config) {
  if (examples.empty()) throw DataError("no pointer-gen training pairs");
  std::size_t tokens = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    tokens += model.map_target(examples[i], model.map_source(examples[i].input), i).size();
  }
  const nn::ParamList params = model.parameters();
  nn::Sgd sgd(config.lr);
  Rng rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<PgEpoch> log;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    const double lr = sgd.lr();
    for (std::size_t i : order) {
      nn::zero_grad(params);
      Tape tape;
      Var l = model.loss(tape, examples[i], i);
      tape.backward(l);
      nn::clip_grad_norm(params, config.clip);
      sgd.step(params);
      total += l.item();
    }
    const double mean = total / static_cast<double>(tokens);
    log.push_back({epoch, lr, mean});
    if (mean < best) {
      best = mean;
    } else {
      sgd.set_lr(sgd.lr() * config.decay);
    }
  }
  return log;
}

double token_accuracy(PointerGenerator& model, const std::vector<Example>& examples,
                      std::size_t max_len) {
  std::size_t right = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto target = model.map_target(examples[i], model.map_source(examples[i].input), i);
    const Hypothesis h = model.greedy(examples[i].input, max_len);
    for (std::size_t t = 0; t < target.size(); ++t) {
      if (t < h.ids.size() && h.ids[t] == target[t]) ++right;
    }
    total += target.size();
  }
  if (total == 0) throw DataError("no target tokens to score");
  return static_cast<double>(right) / static_cast<double>(total);
}

double NgramScorer::log_prob(const std::vector<std::string>& words) {
  return model_.sentence_log_prob(words);
}

NeuralScorer::NeuralScorer(lm::LanguageModel& model) : model_(model) {
  if (model.config().multitask) {
    throw ContractError("rescoring needs a single-task language model");
  }
}

double NeuralScorer::log_prob(const std::vector<std::string>& words) {
  Utterance u;
  for (const std::string& w : words) u.tokens.push_back({w, lang_by_script(w), std::nullopt, std::nullopt});
  Tape tape;
  return -model_.loss(tape, model_.encode(u)).lm.item();
}

std::vector<Rescored> rescore(const std::vector<Hypothesis>& hyps, SequenceScorer& lm,
                              const BeamConfig& config) {
  std::vector<Rescored> out;
  for (const Hypothesis& h : hyps) {
    Rescored r{h, lm.log_prob(h.tokens), 0.0};
    r.score = config.alpha * h.log_prob + config.beta * r.lm_log_prob +
              config.gamma * std::sqrt(static_cast<double>(h.tokens.size()));
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Rescored& a, const Rescored& b) { return a.score > b.score; });
  return out;
}

nlohmann::json attention_json(const std::vector<std::string>& input, const Hypothesis& hyp) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < hyp.attention.rows(); ++r) {
    auto span = hyp.attention.row_span(r);
    rows.push_back(std::vector<double>(span.begin(), span.end()));
  }
  std::vector<std::string> output = hyp.tokens;
  if (hyp.finished) output.emplace_back(cslab::kEos);
  return {{"input", input}, {"output", output}, {"attention", rows}, {"p_gen", hyp.p_gens}};
}

}  // namespace cslab::pg
