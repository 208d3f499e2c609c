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

#ifndef CSLAB_METRICS_H_
#define CSLAB_METRICS_H_

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cslab/corpus.h"

namespace cslab {

// Switch points between adjacent language-tagged tokens. kOther tokens are
// transparent: the comparison skips over them to the nearest tagged token.
std::size_t switch_points(const Utterance& utterance);

// Number of tokens tagged kL1 or kL2.
std::size_t tagged_token_count(const Utterance& utterance);

enum class SpfDenominator {
  kTokens,      // N(W), the tagged token count
  kBoundaries,  // N(W) - 1
};

// Switch-point fraction. Throws DataError on a zero denominator.
double spf(const Utterance& utterance,
           SpfDenominator denominator = SpfDenominator::kTokens);

// Code-mixing index (N - max_lang + P) / N over tagged tokens. Throws
// DataError when the utterance has no tagged token.
double cmi(const Utterance& utterance);

// Corpus means over utterances with at least one tagged token (and at least
// two for the boundary denominator). Throws DataError if none qualifies.
double mean_spf(const Corpus& corpus,
                SpfDenominator denominator = SpfDenominator::kTokens);
double mean_cmi(const Corpus& corpus);

struct EditCounts {
  std::size_t ins = 0;
  std::size_t del = 0;
  std::size_t sub = 0;
  std::size_t ref_len = 0;

  std::size_t total() const { return ins + del + sub; }
  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

// Minimal-cost Levenshtein decomposition with unit costs. Among optimal
// alignments the one with the most substitutions is chosen, so the result
// is unique and swapping the arguments swaps ins and del. Backtracking
// prefers sub, then ins, then del.
EditCounts edit_distance(const std::vector<std::string>& ref,
                         const std::vector<std::string>& hyp);

// Word error rate in percent. Throws DataError on an empty reference.
double wer(const std::vector<std::string>& ref,
           const std::vector<std::string>& hyp);

// Character error rate with a per-language breakdown. Every edit is charged
// to one reference language: substitutions and deletions to the language of
// the reference character, insertions to the nearest preceding reference
// character (the following one at the start). Hence
//   overall = sum_lang (ref_chars[lang] / N) * per_lang[lang].
struct CerReport {
  EditCounts counts;
  std::array<std::size_t, 3> ref_chars{};  // indexed by LangTag
  std::array<std::size_t, 3> errors{};     // indexed by LangTag

  double overall() const;
  // Percent; negative when the reference has no character of that language.
  double per_language(LangTag lang) const;
};

// Characters are code points of the token surfaces; whitespace is not a
// character. Each reference character inherits its token's language tag.
CerReport cer(const Utterance& ref, const Utterance& hyp);
// Sums counts of several utterance pairs (corpus-level CER).
CerReport& operator+=(CerReport& a, const CerReport& b);

enum class SegmentBucket { kL1L1, kL2L2, kL1L2, kL2L1, kOther };
inline constexpr std::array<SegmentBucket, 5> kAllBuckets = {
    SegmentBucket::kL1L1, SegmentBucket::kL2L2, SegmentBucket::kL1L2,
    SegmentBucket::kL2L1, SegmentBucket::kOther};
std::string_view to_string(SegmentBucket bucket);

// One bucket per token: token t >= 1 by (lang(t-1), lang(t)), token 0 by
// (lang(0), lang(0)). Any transition touching kOther lands in kOther.
std::vector<SegmentBucket> bucket_transitions(const Utterance& utterance);

enum class TriggerSource { kPos, kSurface };

struct TriggerCount {
  std::size_t count = 0;
  double ratio = 0.0;
};

// Keyed by the language of the trigger token ("L1"/"L2"), then by its POS
// tag or surface. A trigger is the tagged token immediately before a switch
// point. Ratios are normalized within each language side.
using TriggerStats = std::map<std::string, std::map<std::string, TriggerCount>>;

TriggerStats trigger_stats(const Corpus& corpus, TriggerSource source);

}  // namespace cslab

#endif  // CSLAB_METRICS_H_
