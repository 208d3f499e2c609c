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

#ifndef CSLAB_ALIGN_H_
#define CSLAB_ALIGN_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cslab {

struct Link {
  std::size_t src = 0;
  std::size_t tgt = 0;
  friend auto operator<=>(const Link&, const Link&) = default;
};

// Word alignment between a source (L1) and a target (L2) sentence. Links
// are unique and sorted by source then target index.
class Alignment {
 public:
  Alignment() = default;
  // Sorts and deduplicates; throws ContractError on out-of-range indices.
  Alignment(std::vector<Link> links, std::size_t src_len, std::size_t tgt_len);

  const std::vector<Link>& links() const { return links_; }
  std::size_t src_len() const { return src_len_; }
  std::size_t tgt_len() const { return tgt_len_; }
  bool empty() const { return links_.empty(); }

  friend bool operator==(const Alignment&, const Alignment&) = default;

 private:
  std::vector<Link> links_;
  std::size_t src_len_ = 0;
  std::size_t tgt_len_ = 0;
};

// Pharaoh "i-j i-j ..." text. Throws DataError on malformed or out-of-range
// links.
Alignment parse_pharaoh(std::string_view text, std::size_t src_len,
                        std::size_t tgt_len);
std::string emit_pharaoh(const Alignment& alignment);

using Sentence = std::vector<std::string>;
using SentencePair = std::pair<Sentence, Sentence>;

// Parallel corpus file: "src sentence<TAB>tgt sentence" per line, tokens
// separated by single spaces.
std::vector<SentencePair> read_parallel(const std::filesystem::path& path);
// Pharaoh file aligned line-by-line with a parallel corpus.
std::vector<Alignment> read_pharaoh_file(const std::filesystem::path& path,
                                         const std::vector<SentencePair>& pairs);

// Lexical translation table t(tgt | src); each source row sums to one.
class LexTable {
 public:
  double prob(const std::string& src, const std::string& tgt) const;
  // Probability used for unseen pairs: uniform over the target vocabulary.
  double fallback() const { return fallback_; }
  const std::unordered_map<std::string, std::unordered_map<std::string, double>>&
  rows() const {
    return t_;
  }

 private:
  friend struct Ibm1Trainer;
  std::unordered_map<std::string, std::unordered_map<std::string, double>> t_;
  double fallback_ = 0.0;
};

struct Ibm1Result {
  LexTable table;
  // Corpus log-likelihood before each EM iteration and after the last one.
  std::vector<double> log_likelihood;
  std::size_t skipped_pairs = 0;  // pairs with an empty side
};

// IBM Model 1 trained by EM from a uniform start, without a NULL word.
Ibm1Result ibm1_fit(const std::vector<SentencePair>& pairs, int iterations);

enum class AlignDirection {
  kTargetSide,  // each target word links to its best source word
  kSourceSide,  // each source word links to its best target word
};

// Viterbi links under the table; ties go to the lowest index.
Alignment viterbi_align(const LexTable& table, const Sentence& src,
                        const Sentence& tgt,
                        AlignDirection direction = AlignDirection::kTargetSide);

}  // namespace cslab

#endif  // CSLAB_ALIGN_H_
