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

#ifndef CSLAB_TOY_H_
#define CSLAB_TOY_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cslab/align.h"
#include "cslab/corpus.h"
#include "cslab/ecgen.h"

// Synthetic two-language digit grammar with gold alignments and POS tags.
//
//   L1: SUBJ VERB NP [and NP]          NP  = DIGIT{1,3} ADJ{0,2} NOUN
//   L2: SUBJ NP2 [和 NP2] VERB          NP2 = DIGIT{1,3} 个 ADJ2{0,2} NOUN2
//
// The verb moves to the end in L2, so its link crosses the noun phrases.
// Adjectives and nouns are open classes drawn from a Zipf distribution,
// which leaves a long tail of rare words. Real code-switched sentences come
// from a fixed switching process that favours noun-phrase insertions.
namespace cslab::toy {

struct DigitGrammarConfig {
  std::size_t parallel = 300;
  std::size_t real_train = 40;
  std::size_t valid = 40;
  std::size_t test = 80;
  std::size_t open_class = 24;  // adjectives and nouns per language
  std::uint64_t seed = 2026;
};

struct ParallelPair {
  Utterance l1;
  Utterance l2;
  Alignment alignment;
};

struct DigitCorpus {
  std::vector<ParallelPair> parallel;
  // Parallel sentences behind real_train, index for index.
  std::vector<ParallelPair> real_sources;
  Corpus real_train;
  Corpus valid;
  Corpus test;
};

DigitCorpus make_digit_corpus(const DigitGrammarConfig& config = {});

// Files: l1.conll, l2.conll, parallel.align, real_l1.conll, real_l2.conll,
// real.align, real_train.conll, valid.conll, test.conll.
void write_digit_corpus(const DigitCorpus& corpus, const std::filesystem::path& dir);
DigitCorpus read_digit_corpus(const std::filesystem::path& dir);

// Runs ecgen over every pair and collects the outputs in pair order.
Corpus generate_corpus(const std::vector<ParallelPair>& pairs, const GenConfig& config);

// Monolingual corpora of one side of the parallel data.
Corpus l1_side(const std::vector<ParallelPair>& pairs);
Corpus l2_side(const std::vector<ParallelPair>& pairs);

}  // namespace cslab::toy

#endif  // CSLAB_TOY_H_
