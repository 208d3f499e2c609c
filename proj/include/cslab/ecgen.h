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

#ifndef CSLAB_ECGEN_H_
#define CSLAB_ECGEN_H_

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "cslab/align.h"
#include "cslab/corpus.h"

namespace cslab {

struct GenConfig {
  std::size_t max_switches = 2;          // substituted spans per output
  std::size_t max_outputs_per_pair = 100;  // 0 means no cap
  std::uint64_t seed = 0;
};

// Indices into a.links() of every crossing link pair, (i, j) with i < j.
std::vector<std::pair<std::size_t, std::size_t>> crossing_pairs(
    const Alignment& a);

// One substituted region. Half-open ranges.
struct SpanSubstitution {
  std::size_t src_begin = 0;
  std::size_t src_end = 0;
  std::size_t tgt_begin = 0;
  std::size_t tgt_end = 0;
  std::size_t out_begin = 0;  // where the tgt tokens start in the output
  friend bool operator==(const SpanSubstitution&, const SpanSubstitution&) = default;
};

struct Generated {
  Utterance utterance;
  std::vector<SpanSubstitution> spans;  // ordered by position
};

// Source spans that may be replaced by their aligned target span: the span
// has at least one link, no link from outside it lands inside its target
// range, and none of its links cross an outside link.
std::vector<SpanSubstitution> substitutable_spans(const Alignment& a);

// Code-switched variants of src: up to max_switches non-overlapping
// substitutable spans replaced by target tokens tagged L2. Outputs are
// distinct by surface sequence. Above the cap a seeded sample is kept, in
// enumeration order. Throws DataError when the alignment lengths disagree
// with the sentences.
std::vector<Generated> generate(const Utterance& src, const Utterance& tgt,
                                const Alignment& a, const GenConfig& config);

// Distinct n-grams of gen missing from ref, as a percentage of the distinct
// n-grams of ref. Can exceed 100.
double novel_ngram_rate(const Corpus& gen, const Corpus& ref, std::size_t n);

}  // namespace cslab

#endif  // CSLAB_ECGEN_H_
