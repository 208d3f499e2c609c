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

#ifndef CSLAB_NN_LAYERS_H_
#define CSLAB_NN_LAYERS_H_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cslab/nn/ops.h"
#include "cslab/random.h"

namespace cslab::nn {

// U(-b, b) with b = sqrt(6 / (rows + cols)).
void xavier_uniform(Parameter& p, Rng& rng);

// y = x W^T + b, x holding one input per row.
struct Linear {
  Parameter weight;  // out x in
  Parameter bias;    // 1 x out
  bool has_bias = true;

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng,
         bool with_bias = true);
  Var operator()(Tape& tape, Var x);
  ParamList parameters();
  std::size_t in_dim() const { return weight.value.cols(); }
  std::size_t out_dim() const { return weight.value.rows(); }
};

struct LstmParams {
  Parameter w_i;  // 4d x inp, gate blocks i, f, o, candidate
  Parameter w_h;  // 4d x d
  Parameter b;    // 1 x 4d

  LstmParams() = default;
  LstmParams(const std::string& name, std::size_t input, std::size_t hidden,
             Rng& rng);
  std::size_t hidden() const { return w_h.value.cols(); }
  std::size_t input() const { return w_i.value.cols(); }
  ParamList parameters() { return {&w_i, &w_h, &b}; }
};

struct LstmState {
  Var h;  // 1 x d
  Var c;  // 1 x d
};

LstmState lstm_zero_state(Tape& tape, std::size_t hidden);

// One step of the gated cell. x is 1 x inp.
LstmState lstm_step(Tape& tape, LstmParams& params, Var x, const LstmState& prev);

// Runs the cell over the rows of xs (n x inp); returns the n x d hidden
// states, in input order, and the final state.
std::pair<Var, LstmState> lstm_run(Tape& tape, LstmParams& params, Var xs,
                                   bool reverse = false);

struct AttentionResult {
  Var output;   // n_q x d_v
  Var weights;  // n_q x n_k, rows sum to one
};

// softmax(Q K^T / sqrt(d_k)) V. With causal set, query i sees keys <= i.
AttentionResult scaled_dot_attention(Var q, Var k, Var v, bool causal = false);

struct EncoderLayerConfig {
  std::size_t model_dim = 16;
  std::size_t heads = 2;
  std::size_t ff_dim = 32;
  double dropout = 0.0;
};

// Multi-head self-attention and a ReLU feed-forward block, each wrapped in a
// residual connection.
class TransformerEncoderLayer {
 public:
  TransformerEncoderLayer() = default;
  // Throws ContractError unless model_dim is divisible by heads.
  TransformerEncoderLayer(const std::string& name, const EncoderLayerConfig& config,
                          Rng& rng);

  // x is L x model_dim; rng drives dropout when training.
  Var operator()(Tape& tape, Var x, Rng* dropout_rng = nullptr,
                 bool causal = false);
  // Attention weights of every head from the last call.
  const std::vector<Tensor>& last_attention() const { return last_attention_; }
  ParamList parameters();
  const EncoderLayerConfig& config() const { return config_; }

 private:
  EncoderLayerConfig config_;
  Linear wq_, wk_, wv_, wo_;
  Linear ff1_, ff2_;
  std::vector<Tensor> last_attention_;
};

// Sinusoidal position table, length x dim.
Tensor positional_encoding(std::size_t length, std::size_t dim);

}  // namespace cslab::nn

#endif  // CSLAB_NN_LAYERS_H_
