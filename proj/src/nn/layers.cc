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

#include "cslab/nn/layers.h"

#include <cmath>

#include "cslab/error.h"

namespace cslab::nn {

void xavier_uniform(Parameter& p, Rng& rng) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  for (double& v : p.value.data()) v = rng.uniform(-bound, bound);
}

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng,
               bool with_bias)
    : weight(name + ".weight", Tensor(out, in)),
      bias(name + ".bias", Tensor(1, out)),
      has_bias(with_bias) {
  xavier_uniform(weight, rng);
}

Var Linear::operator()(Tape& tape, Var x) {
  Var y = matmul_nt(x, tape.param(weight));
  return has_bias ? add_row(y, tape.param(bias)) : y;
}

ParamList Linear::parameters() {
  if (has_bias) return {&weight, &bias};
  return {&weight};
}

LstmParams::LstmParams(const std::string& name, std::size_t input,
                       std::size_t hidden, Rng& rng)
    : w_i(name + ".w_i", Tensor(4 * hidden, input)),
      w_h(name + ".w_h", Tensor(4 * hidden, hidden)),
      b(name + ".b", Tensor(1, 4 * hidden)) {
  xavier_uniform(w_i, rng);
  xavier_uniform(w_h, rng);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b.value(0, j) = 1.0;
}

LstmState lstm_zero_state(Tape& tape, std::size_t hidden) {
  return {tape.constant(Tensor(1, hidden)), tape.constant(Tensor(1, hidden))};
}

LstmState lstm_step(Tape& tape, LstmParams& params, Var x, const LstmState& prev) {
  const std::size_t d = params.hidden();
  if (x.rows() != 1 || x.cols() != params.input()) {
    throw ContractError("lstm_step: input " + x.value().shape_string() +
                        " for input size " + std::to_string(params.input()));
  }
  if (prev.h.cols() != d || prev.c.cols() != d) {
    throw ContractError("lstm_step: state size does not match hidden size " +
                        std::to_string(d));
  }
  Var gates = add_row(add(matmul_nt(x, tape.param(params.w_i)),
                          matmul_nt(prev.h, tape.param(params.w_h))),
                      tape.param(params.b));
  Var i = sigmoid(slice_cols(gates, 0, d));
  Var f = sigmoid(slice_cols(gates, d, 2 * d));
  Var o = sigmoid(slice_cols(gates, 2 * d, 3 * d));
  Var g = tanh(slice_cols(gates, 3 * d, 4 * d));
  Var c = add(mul(f, prev.c), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, c};
}

std::pair<Var, LstmState> lstm_run(Tape& tape, LstmParams& params, Var xs,
                                   bool reverse) {
  const std::size_t n = xs.rows();
  if (n == 0) throw ContractError("lstm_run on an empty sequence");
  LstmState state = lstm_zero_state(tape, params.hidden());
  std::vector<Var> hs(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = reverse ? n - 1 - k : k;
    state = lstm_step(tape, params, row(xs, t), state);
    hs[t] = state.h;
  }
  return {concat_rows(hs), state};
}

AttentionResult scaled_dot_attention(Var q, Var k, Var v, bool causal) {
  if (q.cols() != k.cols()) {
    throw ContractError("attention: query dim " + std::to_string(q.cols()) +
                        " != key dim " + std::to_string(k.cols()));
  }
  if (k.rows() != v.rows()) {
    throw ContractError("attention: " + std::to_string(k.rows()) + " keys but " +
                        std::to_string(v.rows()) + " values");
  }
  Var scores = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(k.cols())));
  Var weights = softmax(scores, causal);
  return {matmul(weights, v), weights};
}

TransformerEncoderLayer::TransformerEncoderLayer(const std::string& name,
                                                 const EncoderLayerConfig& config,
                                                 Rng& rng)
    : config_(config) {
  if (config.heads == 0 || config.model_dim % config.heads != 0) {
    throw ContractError("model dim " + std::to_string(config.model_dim) +
                        " is not divisible by " + std::to_string(config.heads) +
                        " heads");
  }
  const std::size_t d = config.model_dim;
  wq_ = Linear(name + ".wq", d, d, rng);
  wk_ = Linear(name + ".wk", d, d, rng);
  wv_ = Linear(name + ".wv", d, d, rng);
  wo_ = Linear(name + ".wo", d, d, rng);
  ff1_ = Linear(name + ".ff1", d, config.ff_dim, rng);
  ff2_ = Linear(name + ".ff2", config.ff_dim, d, rng);
}

Var TransformerEncoderLayer::operator()(Tape& tape, Var x, Rng* dropout_rng,
                                        bool causal) {
  const std::size_t d = config_.model_dim;
  if (x.cols() != d) {
    throw ContractError("encoder layer: input width " + std::to_string(x.cols()) +
                        " != model dim " + std::to_string(d));
  }
  auto drop = [&](Var v) {
    return dropout_rng && config_.dropout > 0.0 ? dropout(v, config_.dropout, *dropout_rng)
                                                : v;
  };
  const std::size_t dh = d / config_.heads;
  Var q = wq_(tape, x);
  Var k = wk_(tape, x);
  Var v = wv_(tape, x);
  std::vector<Var> heads;
  last_attention_.clear();
  for (std::size_t h = 0; h < config_.heads; ++h) {
    auto r = scaled_dot_attention(slice_cols(q, h * dh, (h + 1) * dh),
                                  slice_cols(k, h * dh, (h + 1) * dh),
                                  slice_cols(v, h * dh, (h + 1) * dh), causal);
    heads.push_back(r.output);
    last_attention_.push_back(r.weights.value());
  }
  Var a = add(x, drop(wo_(tape, concat_cols(heads))));
  Var ff = ff2_(tape, relu(ff1_(tape, a)));
  return add(a, drop(ff));
}

ParamList TransformerEncoderLayer::parameters() {
  ParamList out;
  for (Linear* l : {&wq_, &wk_, &wv_, &wo_, &ff1_, &ff2_}) {
    for (Parameter* p : l->parameters()) out.push_back(p);
  }
  return out;
}

Tensor positional_encoding(std::size_t length, std::size_t dim) {
  Tensor pe(length, dim);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * rate;
      pe(pos, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

}  // namespace cslab::nn
