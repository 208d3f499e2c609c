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

#ifndef CSLAB_PG_H_
#define CSLAB_PG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cslab/lm.h"
#include "cslab/ngram.h"
#include "cslab/nn/layers.h"
#include "json.hpp"

// Pointer-generator: BiLSTM encoder, LSTM decoder with general attention,
// and a copy gate mixing vocabulary generation with copying from the input.
// The decoder does not feed the previous context vector back in.
namespace cslab::pg {

// Joins the two languages of a parallel pair into one input stream.
inline constexpr std::string_view kSep = "<sep>";

std::vector<std::string> make_input(const std::vector<std::string>& l1,
                                    const std::vector<std::string>& l2);

// Final distribution over the extended vocabulary (vocab ids, then one id
// per input-only word):
//   P(w) = p_gen * P_voc(w) + (1 - p_gen) * sum_{i: input_i = w} a_i
// p_vocab is 1 x V, attention 1 x n, p_gen 1 x 1; ext_ids[i] is the extended
// id of input position i. The result is 1 x ext_size.
nn::Var final_dist(nn::Var p_vocab, nn::Var attention, nn::Var p_gen,
                   const std::vector<std::size_t>& ext_ids, std::size_t ext_size);

struct PgConfig {
  std::size_t embed = 32;
  std::size_t hidden = 32;
  std::size_t min_count = 1;  // words rarer than this are copy-only
  double lr = 1.0;
  double decay = 0.5;  // halves lr when the epoch loss does not strictly improve
  double clip = 5.0;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static PgConfig from_json(const nlohmann::json& j);
};

struct Example {
  std::vector<std::string> input;   // already joined with kSep
  std::vector<std::string> target;  // without </s>
};

// Input ids in both spaces plus the names of input-only words.
struct SourceMap {
  std::vector<std::size_t> vocab_ids;  // input-only words become <unk>
  std::vector<std::size_t> ext_ids;
  std::vector<std::string> oov;  // extended id V + k names oov[k]
};

struct DecodeStep {
  nn::Tensor dist;       // 1 x ext_size
  nn::Tensor attention;  // 1 x n
  double p_gen = 0.0;
};

struct Hypothesis {
  std::vector<std::string> tokens;  // without </s>
  std::vector<std::size_t> ids;     // extended ids, </s> included when finished
  double log_prob = 0.0;
  bool finished = false;
  nn::Tensor attention;             // steps x input length
  std::vector<double> p_gens;
};

struct BeamConfig {
  std::size_t width = 5;
  std::size_t n_best = 3;
  std::size_t max_len = 20;
  double alpha = 1.0;
  double beta = 0.1;
  double gamma = 0.1;
};

class PointerGenerator {
 public:
  PointerGenerator(lm::TokenVocab vocab, const PgConfig& config);

  // Vocabulary from inputs and targets (words seen min_count times) plus kSep.
  static lm::TokenVocab build_vocab(const std::vector<Example>& examples,
                                    std::size_t min_count);

  SourceMap map_source(const std::vector<std::string>& input) const;
  // Extended target ids ending in </s>. Throws DataError naming the pair when
  // a word is neither in the vocabulary nor in the input.
  std::vector<std::size_t> map_target(const Example& ex, const SourceMap& src,
                                      std::size_t index) const;

  // Summed NLL of the target under the final distribution.
  nn::Var loss(nn::Tape& tape, const Example& ex, std::size_t index = 0);

  // Distributions and attention under teacher forcing, one row per target
  // step; used for inspection and tests.
  std::vector<DecodeStep> teacher_forced(const Example& ex);

  Hypothesis greedy(const std::vector<std::string>& input, std::size_t max_len = 20);
  // Hypotheses end at </s> or max_len. The greedy path joins the candidate
  // pool, so the best returned score is never below the greedy one. Ties
  // prefer the lexicographically lower id sequence.
  std::vector<Hypothesis> beam_search(const std::vector<std::string>& input,
                                      const BeamConfig& config);

  nn::ParamList parameters();
  const lm::TokenVocab& vocab() const { return vocab_; }
  const PgConfig& config() const { return config_; }

  void save(const std::filesystem::path& base);
  static PointerGenerator load(const std::filesystem::path& base);

 private:
  struct Encoding {
    nn::Var states;     // n x 2h
    nn::Var projected;  // n x h, states mapped for general attention
    nn::LstmState init;
  };
  struct Output {
    nn::Var dist;
    nn::Var attention;
    nn::Var p_gen;
    nn::LstmState state;
  };
  Encoding encode(nn::Tape& tape, const SourceMap& src);
  Output decode_step(nn::Tape& tape, const Encoding& enc, const SourceMap& src,
                     std::size_t prev_ext, const nn::LstmState& state);
  std::size_t input_id(std::size_t ext) const;
  std::string ext_word(std::size_t ext, const SourceMap& src) const;

  lm::TokenVocab vocab_;
  PgConfig config_;
  nn::Parameter embed_;
  nn::LstmParams enc_fwd_;
  nn::LstmParams enc_bwd_;
  nn::Linear reduce_h_;
  nn::Linear reduce_c_;
  nn::LstmParams dec_;
  nn::Linear attn_;  // general scoring: s_t W h_i
  nn::Linear out_;   // [s_t; c_t] -> vocabulary logits
  nn::Linear gate_;  // [c_t; s_t; x_t] -> p_gen logit
};

struct PgEpoch {
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;  // mean NLL per target token
};

// Per-example SGD with clipping; lr halves after an epoch whose loss is not
// strictly lower than the best so far.
std::vector<PgEpoch> train_pg(PointerGenerator& model, const std::vector<Example>& examples,
                              const PgConfig& config);

// Fraction of target tokens (plus </s>) reproduced at their position by
// greedy decoding.
double token_accuracy(PointerGenerator& model, const std::vector<Example>& examples,
                      std::size_t max_len = 20);

// Sentence log-probability source for rescoring.
class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;
  virtual double log_prob(const std::vector<std::string>& words) = 0;
};

// Unknown words go through the model's <unk> mapping.
class NgramScorer : public SequenceScorer {
 public:
  explicit NgramScorer(const NgramModel& model) : model_(model) {}
  double log_prob(const std::vector<std::string>& words) override;

 private:
  const NgramModel& model_;
};

// Single-task LSTM LM; includes the </s> event.
class NeuralScorer : public SequenceScorer {
 public:
  explicit NeuralScorer(lm::LanguageModel& model);
  double log_prob(const std::vector<std::string>& words) override;

 private:
  lm::LanguageModel& model_;
};

struct Rescored {
  Hypothesis hyp;
  double lm_log_prob = 0.0;
  double score = 0.0;
};

// score = alpha * log P_model + beta * log P_lm + gamma * sqrt(word count),
// stable-sorted in descending order.
std::vector<Rescored> rescore(const std::vector<Hypothesis>& hyps, SequenceScorer& lm,
                              const BeamConfig& config);

// {"input": [...], "output": [...], "attention": [[...]], "p_gen": [...]}
nlohmann::json attention_json(const std::vector<std::string>& input, const Hypothesis& hyp);

}  // namespace cslab::pg

#endif  // CSLAB_PG_H_
