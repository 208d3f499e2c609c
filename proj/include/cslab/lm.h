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

#ifndef CSLAB_LM_H_
#define CSLAB_LM_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cslab/corpus.h"
#include "cslab/metrics.h"
#include "cslab/ngram.h"
#include "cslab/nn/layers.h"
#include "json.hpp"

// LSTM language model with an optional syntax-aware multi-task head, its SGD
// trainer and the data strategies for generated code-switched text.
namespace cslab::lm {

// String <-> id map with three reserved entries: <unk>, <s>, </s>.
class TokenVocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;

  TokenVocab();
  // Surfaces (or POS tags when pos is set) seen at least min_count times.
  // Tokens without a POS tag are skipped when building a POS vocabulary.
  static TokenVocab build(const std::vector<const Corpus*>& corpora,
                          std::size_t min_count = 1, bool pos = false);

  int add(std::string_view word);
  int id(std::string_view word) const;  // kUnk when absent
  bool contains(std::string_view word) const;
  const std::string& word(int id) const;
  std::size_t size() const { return words_.size(); }

  nlohmann::json to_json() const;
  static TokenVocab from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

// One sentence as model input. words and pos are framed by <s> ... </s>;
// buckets has one entry per predicted token (the words after <s>), with
// </s> in the kOther bucket.
struct Encoded {
  std::string id;
  std::vector<int> words;
  std::vector<int> pos;  // empty when the POS stream is absent
  std::vector<SegmentBucket> buckets;
};

struct LmConfig {
  std::size_t hidden = 32;  // also the word embedding size
  bool tie_weights = true;
  bool multitask = false;
  std::size_t pos_dim = 16;
  double p = 0.5;  // LM share of the multi-task loss, in [0, 1]

  nlohmann::json to_json() const;
  static LmConfig from_json(const nlohmann::json& j);
};

class LanguageModel {
 public:
  LanguageModel(TokenVocab words, TokenVocab pos, const LmConfig& config,
                std::uint64_t seed);
  LanguageModel(LanguageModel&&) = default;
  LanguageModel& operator=(LanguageModel&&) = default;

  struct State {
    nn::LstmState lm;
    nn::LstmState pt;  // unused by the single-task model
  };
  struct StepOutput {
    nn::Var word_logits;  // 1 x |words|
    nn::Var pos_logits;   // 1 x |pos|; invalid for the single-task model
    State state;
  };
  struct Losses {
    nn::Var total;
    nn::Var lm;   // summed NLL of the next words
    nn::Var pos;  // summed NLL of the next POS tags; invalid if single-task
    std::size_t tokens = 0;
  };

  State initial_state(nn::Tape& tape);
  // One time step. The LM LSTM reads word (+) pos; the POS LSTM reads pos.
  // The word head sees the summed hidden states, the POS head only its own.
  StepOutput step(nn::Tape& tape, int word, int pos, const State& state);

  // Teacher-forced losses over a whole sentence:
  // total = p * lm + (1 - p) * pos for the multi-task model, lm otherwise.
  Losses loss(nn::Tape& tape, const Encoded& sentence);

  // Next-token distributions after each prefix of ids (rows sum to one).
  // Throws ContractError for an id outside the vocabulary and DataError when
  // the multi-task model gets no POS stream.
  nn::Tensor lm_forward(std::span<const int> ids);
  nn::Tensor lm_forward(std::span<const int> ids, std::span<const int> pos);

  // Throws DataError when the multi-task model meets a token without POS.
  Encoded encode(const Utterance& utterance) const;

  nn::ParamList parameters();
  nn::Parameter& word_embedding() { return embed_; }
  // The word embedding itself when weights are tied.
  nn::Parameter& output_weight() { return config_.tie_weights ? embed_ : out_weight_; }
  nn::Parameter& output_bias() { return out_bias_; }

  const LmConfig& config() const { return config_; }
  const TokenVocab& words() const { return words_; }
  const TokenVocab& pos_tags() const { return pos_; }

  void save(const std::filesystem::path& base);
  static LanguageModel load(const std::filesystem::path& base);

 private:
  void check_ids(std::span<const int> ids, std::size_t limit, const char* what) const;
  nn::Var inputs(nn::Tape& tape, std::span<const int> words, std::span<const int> pos);
  nn::Var word_logits(nn::Tape& tape, nn::Var hidden);
  nn::Var pos_logits(nn::Tape& tape, nn::Var hidden);
  struct Heads {
    nn::Var words;
    nn::Var pos;
  };
  Heads run(nn::Tape& tape, std::span<const int> words, std::span<const int> pos);

  TokenVocab words_;
  TokenVocab pos_;
  LmConfig config_;
  nn::Parameter embed_;      // |words| x hidden
  nn::Parameter out_weight_;  // |words| x hidden, only when untied
  nn::Parameter out_bias_;   // 1 x |words|
  nn::LstmParams lstm_;
  nn::Parameter pos_embed_;  // |pos| x pos_dim
  nn::LstmParams pos_lstm_;
  nn::Linear pos_out_;
};

// Bucketed perplexity in the same shape as the n-gram report, so the bucket
// identity exp(weighted mean NLL) = overall holds the same way.
PplReport neural_ppl(LanguageModel& model, const Corpus& corpus, bool split_buckets = false);

struct TrainConfig {
  double lr = 1.0;
  double decay = 0.75;  // applied when validation loss does not strictly improve
  double clip = 0.25;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;  // evaluations without improvement before stopping
  std::uint64_t seed = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean total loss per token
  double valid_nll = 0.0;   // mean LM NLL per token
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::size_t steps = 0;
  double max_clipped_norm = 0.0;  // largest post-clip gradient norm seen
  double best_valid_nll = 0.0;
  bool early_stopped = false;
};

// Sentence-level SGD with global-norm clipping, plateau decay and early
// stopping. The parameters of the best validation epoch are restored at the
// end. With an empty validation set the training loss stands in.
TrainLog train(LanguageModel& model, const std::vector<Encoded>& train_set,
               const std::vector<Encoded>& valid_set, const TrainConfig& config);

// Mean LM NLL per predicted token.
double mean_nll(LanguageModel& model, const std::vector<Encoded>& sentences);

enum class Strategy { kRealOnly, kGenOnly, kConcat, kPretrainFinetune };
std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);  // real, gen, concat, pretrain-finetune

struct TrainPlan {
  Strategy strategy = Strategy::kRealOnly;
  TrainConfig optimizer;
  double finetune_lr = 1.0;  // second stage of kPretrainFinetune only
  std::size_t min_count = 1;  // vocabulary threshold over gen + real
};

struct StrategyResult {
  LanguageModel model;
  std::vector<TrainLog> stages;
  std::vector<std::size_t> stage_sizes;  // training sentences per stage
  // Parameter checksums at the end of stage one and the start of stage two.
  std::optional<std::uint64_t> pretrain_checksum;
  std::optional<std::uint64_t> finetune_start_checksum;
  std::optional<PplReport> test;
};

// The vocabulary is built from gen + real whatever the strategy, so every
// strategy is scored over the same events. Throws DataError when a stage's
// training corpus is empty.
StrategyResult run_strategy(const TrainPlan& plan, const Corpus& gen, const Corpus& real,
                            const Corpus& valid, const Corpus& test,
                            const LmConfig& config, std::uint64_t seed);

}  // namespace cslab::lm

#endif  // CSLAB_LM_H_
