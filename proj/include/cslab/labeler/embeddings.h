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

#ifndef CSLAB_LABELER_EMBEDDINGS_H_
#define CSLAB_LABELER_EMBEDDINGS_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cslab/corpus.h"
#include "cslab/nn/tensor.h"

namespace cslab::labeler {

enum class Granularity { kWord, kSubword };
// kNormalize retries through normalize_oov and falls back to zeros.
enum class OovPolicy { kZero, kMean, kNormalize };

std::string_view to_string(OovPolicy p);
OovPolicy parse_oov_policy(std::string_view text);  // zero, mean, normalize

// Pre-trained vectors kept as a frozen parameter. Row count = words + 1; the
// last row answers lookups of unknown words according to the policy.
class EmbeddingSource {
 public:
  EmbeddingSource(std::string name, std::size_t dim, Granularity granularity = Granularity::kWord,
                  OovPolicy policy = OovPolicy::kZero);

  // Text format: an optional "count dim" header, then "word v1 ... vd" per
  // line. Throws ParseError on ragged or non-numeric rows.
  static EmbeddingSource load_text(const std::filesystem::path& path, std::string name,
                                   Granularity granularity = Granularity::kWord,
                                   OovPolicy policy = OovPolicy::kZero);

  // Throws ContractError on a dimension mismatch. Re-adding a word
  // overwrites its vector.
  void add(const std::string& word, const std::vector<double>& vec);

  // Row of the table for word; never fails.
  std::size_t lookup(std::string_view word) const;
  std::vector<double> vector(std::string_view word) const;
  bool contains(std::string_view word) const;

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  Granularity granularity() const { return granularity_; }
  OovPolicy policy() const { return policy_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  // The frozen lookup table; refreshed after every add().
  nn::Parameter& table() { return table_; }

 private:
  void rebuild();

  std::string name_;
  std::size_t dim_;
  Granularity granularity_;
  OovPolicy policy_;
  std::vector<std::string> words_;
  std::vector<std::vector<double>> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
  Vocabulary vocab_;
  nn::Parameter table_;
};

// Greedy longest-match segmentation over a subword vocabulary. Code points
// no entry covers are skipped; an empty result falls back to the whole word.
std::vector<std::string> segment(std::string_view word, const Vocabulary& subwords);

}  // namespace cslab::labeler

#endif  // CSLAB_LABELER_EMBEDDINGS_H_
