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

#ifndef CSLAB_NGRAM_H_
#define CSLAB_NGRAM_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cslab/corpus.h"
#include "cslab/metrics.h"

namespace cslab {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

enum class Smoothing { kMle, kLaplace, kKneserNey };

std::string_view to_string(Smoothing s);
Smoothing parse_smoothing(std::string_view text);

struct NgramConfig {
  int order = 3;
  Smoothing smoothing = Smoothing::kKneserNey;
  double discount = 0.75;      // Kneser-Ney only, in (0, 1)
  std::size_t unk_threshold = 1;  // words seen fewer times become <unk>
  // When set, </s> is a predicted event: it is counted at fit time, gets
  // probability mass and contributes to perplexity.
  bool eos = false;
};

// Count-based language model. Immutable once fitted.
class NgramModel {
 public:
  static NgramModel fit(const Corpus& corpus, const NgramConfig& config);

  // P(word | context). Only the last order-1 context words are used; shorter
  // contexts are left-padded with <s>. Unknown words map to <unk>. Under MLE
  // an unseen context throws DataError.
  double prob(std::span<const std::string> context, std::string_view word) const;

  // Sum of log P over the words (and </s> when eos is set).
  double sentence_log_prob(std::span<const std::string> words) const;

  const NgramConfig& config() const { return config_; }
  // Every word that can be predicted: vocabulary minus <s> (and minus </s>
  // unless eos is set). Probabilities over this set sum to one.
  std::vector<std::string> predicted_vocab() const;
  bool contains(std::string_view word) const;
  // Surface after <unk> mapping.
  std::string_view map_word(std::string_view word) const;

  std::string to_json() const;
  static NgramModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static NgramModel load(const std::filesystem::path& path);

 private:
  using Context = std::vector<int>;
  using Table = std::map<Context, std::map<int, double>>;

  NgramModel() = default;
  int id(std::string_view word) const;
  double predicted_size() const {
    return static_cast<double>(words_.size() - (config_.eos ? 1 : 2));
  }
  void build_levels();
  double kn(std::span<const int> context, int word, int level) const;

  NgramConfig config_;
  std::vector<std::string> words_;  // id -> surface; 0=<s>, 1=</s>, 2=<unk>
  std::unordered_map<std::string, int> ids_;
  // levels_[n-1] holds order-n tables: raw counts at the top order,
  // continuation counts below it.
  std::vector<Table> levels_;
  std::vector<std::map<Context, std::pair<double, std::size_t>>> totals_;
};

struct BucketPpl {
  std::size_t tokens = 0;
  double nll = 0.0;
  double ppl() const;
};

struct PplReport {
  std::size_t tokens = 0;
  double nll = 0.0;
  double ppl() const;
  std::map<SegmentBucket, BucketPpl> buckets;  // filled when split
};

// exp of the mean per-token negative log-likelihood. Throws DataError naming
// the token when a probability is zero.
PplReport ppl(const NgramModel& model, const Corpus& corpus,
              bool split_buckets = false);

}  // namespace cslab

#endif  // CSLAB_NGRAM_H_
