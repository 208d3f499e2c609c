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

#ifndef CSLAB_LABELER_TAGGER_H_
#define CSLAB_LABELER_TAGGER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cslab/corpus.h"
#include "cslab/labeler/combiner.h"
#include "cslab/labeler/iob.h"

namespace cslab::labeler {

// Where an embedding table comes from, so a saved tagger can reload it.
struct SourceSpec {
  std::string name;
  std::filesystem::path path;
  Granularity granularity = Granularity::kWord;
  OovPolicy policy = OovPolicy::kZero;

  EmbeddingSource load() const;
  nlohmann::json to_json() const;
  static SourceSpec from_json(const nlohmann::json& j);
};

struct TaggerConfig {
  CombinerConfig combiner;
  std::size_t model_dim = 200;
  std::size_t layers = 4;
  std::size_t heads = 4;
  std::size_t ff_dim = 400;
  double dropout = 0.1;
  double lr = 1e-3;  // Adam
  std::size_t epochs = 20;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static TaggerConfig from_json(const nlohmann::json& j);
};

struct Tagging {
  Tags tags;                  // after iob_repair
  Tags raw;                   // Viterbi output
  nn::Tensor word_weights;    // per-word source weights (MME, HME)
  nn::Tensor subword_weights;
};

// Combiner, linear map to model_dim, sinusoidal positions, encoder layers,
// then a linear-chain CRF over the tag set.
class Tagger {
 public:
  // The tag set is "O" plus every tag seen in train, sorted; the character
  // inventory covers the training words. Throws DataError when a training
  // token has no NER tag.
  Tagger(const Corpus& train, std::vector<EmbeddingSource> words,
         std::vector<EmbeddingSource> subwords, const TaggerConfig& config);

  // One Adam step per sentence, sentences shuffled each epoch. Returns the
  // mean CRF loss per sentence of every epoch.
  std::vector<double> train(const Corpus& train);

  // Throws ContractError while the tagger is untrained.
  Tagging tag(const std::vector<std::string>& words);
  Tags tag(const Utterance& utt) { return tag(utt.surfaces()).tags; }
  F1Report evaluate(const Corpus& gold);

  // Negative log-likelihood of the gold tags of one sentence.
  nn::Var loss(nn::Tape& tape, const Utterance& utt, Rng* dropout_rng = nullptr);

  nn::ParamList parameters();
  const std::vector<std::string>& tag_set() const { return tags_; }
  bool trained() const { return trained_; }
  Combiner& combiner() { return combiner_; }

  // Metadata written with the checkpoint so load() can find the tables.
  std::vector<SourceSpec> word_specs;
  std::vector<SourceSpec> subword_specs;

  void save(const std::filesystem::path& base);
  // Reloads the tables from the recorded specs.
  static Tagger load(const std::filesystem::path& base);

 private:
  Tagger(std::vector<std::string> tags, CharInventory chars, std::vector<EmbeddingSource> words,
         std::vector<EmbeddingSource> subwords, const TaggerConfig& config);
  nn::Tensor emissions_of(nn::Tape& tape, const std::vector<std::string>& words,
                          CombinerOutput* detail);
  nn::Var emissions(nn::Tape& tape, const std::vector<std::string>& words, Rng* dropout_rng,
                    CombinerOutput* detail);
  std::vector<std::size_t> tag_ids(const Utterance& utt) const;

  TaggerConfig config_;
  std::vector<std::string> tags_;
  Combiner combiner_;
  nn::Linear in_proj_;
  std::vector<nn::TransformerEncoderLayer> layers_;
  nn::Linear out_;
  nn::Parameter transitions_;
  Rng rng_;
  bool trained_ = false;
};

}  // namespace cslab::labeler

#endif  // CSLAB_LABELER_TAGGER_H_
