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

#ifndef CSLAB_LABELER_COMBINER_H_
#define CSLAB_LABELER_COMBINER_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cslab/labeler/embeddings.h"
#include "cslab/nn/layers.h"
#include "json.hpp"

namespace cslab::labeler {

// Character inventory shared by both languages. Id 0 is the UNK character.
class CharInventory {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr const char* kUnkSymbol = "<unk-char>";

  CharInventory();
  static CharInventory build(const std::vector<std::string>& words);

  std::size_t id(std::string_view ch) const;
  std::vector<std::size_t> encode(std::string_view word) const;
  std::size_t size() const { return chars_.size(); }

  nlohmann::json to_json() const;
  static CharInventory from_json(const nlohmann::json& j);

 private:
  void add(const std::string& ch);
  std::vector<std::string> chars_;
  std::unordered_map<std::string, std::size_t> index_;
};

// BiLSTM over the characters of a word: the final forward and backward
// hidden states, concatenated.
class CharEncoder {
 public:
  CharEncoder() = default;
  CharEncoder(const std::string& name, std::size_t chars, std::size_t char_dim,
              std::size_t hidden, Rng& rng);

  nn::Var encode(nn::Tape& tape, const std::vector<std::size_t>& char_ids);  // 1 x 2h
  std::size_t output_dim() const { return 2 * fwd_.hidden(); }
  nn::ParamList parameters();

 private:
  nn::Parameter embed_;
  nn::LstmParams fwd_;
  nn::LstmParams bwd_;
};

enum class CombineMode { kConcat, kLinear, kMme, kHme };
std::string_view to_string(CombineMode m);
CombineMode parse_combine_mode(std::string_view text);  // concat, linear, mme, hme

struct CombinerConfig {
  CombineMode mode = CombineMode::kMme;
  std::size_t proj_dim = 16;    // d' of LINEAR, MME and both HME levels
  std::size_t char_dim = 8;
  std::size_t char_hidden = 8;  // per direction
  std::size_t subword_heads = 1;
  std::size_t subword_ff = 32;

  nlohmann::json to_json() const;
  static CombinerConfig from_json(const nlohmann::json& j);
};

// Per-word attention over sources, plus the result of the mixture.
struct Mixture {
  nn::Var output;  // n x d'
  nn::Var weights;  // n x k, rows sum to one
};

// Mixture over k projected sources (each n x d'). The score of source j is
// tanh(x'_j) v^T; the weights are the row-wise softmax of the scores.
Mixture mix_sources(nn::Tape& tape, const std::vector<nn::Var>& projected, nn::Parameter& v);

struct CombinerOutput {
  nn::Var vectors;              // n x output_dim()
  nn::Tensor word_weights;      // n x k for MME and HME, empty otherwise
  nn::Tensor subword_weights;   // n x k_s for HME
};

// Turns a sentence into one vector per word from frozen pre-trained tables.
//   CONCAT  the word vectors side by side (sum of dims);
//   LINEAR  per-source projections to d', summed;
//   MME     per-source projections mixed by mix_sources;
//   HME     [MME over word sources ; mixture of subword encodings ; char BiLSTM]
// where a subword encoding is the mean over one self-attention layer run on
// the projected subword vectors of the word's segmentation.
class Combiner {
 public:
  Combiner() = default;
  // Throws ContractError without word sources, or for HME without subword
  // sources.
  Combiner(std::vector<EmbeddingSource> words, std::vector<EmbeddingSource> subwords,
           CharInventory chars, const CombinerConfig& config, Rng& rng);

  CombinerOutput operator()(nn::Tape& tape, const std::vector<std::string>& words);

  std::size_t output_dim() const;
  // Trainable parameters; the embedding tables are excluded.
  nn::ParamList parameters();
  std::vector<EmbeddingSource>& word_sources() { return words_; }
  std::vector<EmbeddingSource>& subword_sources() { return subwords_; }
  const CharInventory& chars() const { return chars_; }
  const CombinerConfig& config() const { return config_; }

 private:
  nn::Var lookup(nn::Tape& tape, EmbeddingSource& src, const std::vector<std::string>& words);
  nn::Var subword_encoding(nn::Tape& tape, std::size_t j, const std::vector<std::string>& words);

  CombinerConfig config_;
  std::vector<EmbeddingSource> words_;
  std::vector<EmbeddingSource> subwords_;
  CharInventory chars_;
  std::vector<nn::Linear> word_proj_;
  nn::Parameter word_v_;
  std::vector<nn::Linear> sub_proj_;
  std::vector<nn::TransformerEncoderLayer> sub_enc_;
  nn::Parameter sub_v_;
  CharEncoder char_enc_;
};

}  // namespace cslab::labeler

#endif  // CSLAB_LABELER_COMBINER_H_
