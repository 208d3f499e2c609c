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

#include "cslab/metrics.h"

#include <algorithm>
#include <optional>
#include <utility>

#include "cslab/error.h"
#include "cslab/unicode.h"

namespace cslab {

namespace {

std::size_t lang_index(LangTag tag) { return static_cast<std::size_t>(tag); }

// Languages of tagged tokens in order, with their positions.
std::vector<std::pair<std::size_t, LangTag>> tagged(const Utterance& u) {
  std::vector<std::pair<std::size_t, LangTag>> out;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u.tokens[i].lang != LangTag::kOther) out.emplace_back(i, u.tokens[i].lang);
  }
  return out;
}

enum class Op { kMatch, kSub, kIns, kDel };

// (total cost, insertions + deletions), compared lexicographically.
using Cost = std::pair<std::size_t, std::size_t>;

template <typename T>
std::vector<Op> align_ops(const std::vector<T>& ref, const std::vector<T>& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<Cost> dp((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> Cost& {
    return dp[i * (m + 1) + j];
  };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = {i, i};
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = {j, j};
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const Cost diag = at(i - 1, j - 1);
      Cost best{diag.first + (ref[i - 1] == hyp[j - 1] ? 0 : 1), diag.second};
      const Cost ins{at(i, j - 1).first + 1, at(i, j - 1).second + 1};
      const Cost del{at(i - 1, j).first + 1, at(i - 1, j).second + 1};
      best = std::min({best, ins, del});
      at(i, j) = best;
    }
  }
  std::vector<Op> ops;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const Cost here = at(i, j);
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      const Cost diag = at(i - 1, j - 1);
      if (Cost{diag.first + (same ? 0 : 1), diag.second} == here) {
        ops.push_back(same ? Op::kMatch : Op::kSub);
        --i;
        --j;
        continue;
      }
    }
    if (j > 0) {
      const Cost left = at(i, j - 1);
      if (Cost{left.first + 1, left.second + 1} == here) {
        ops.push_back(Op::kIns);
        --j;
        continue;
      }
    }
    ops.push_back(Op::kDel);
    --i;
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

template <typename T>
EditCounts count_ops(const std::vector<T>& ref, const std::vector<T>& hyp) {
  EditCounts counts;
  counts.ref_len = ref.size();
  for (Op op : align_ops(ref, hyp)) {
    if (op == Op::kSub) ++counts.sub;
    if (op == Op::kIns) ++counts.ins;
    if (op == Op::kDel) ++counts.del;
  }
  return counts;
}

}  // namespace

std::size_t switch_points(const Utterance& utterance) {
  std::size_t switches = 0;
  std::optional<LangTag> previous;
  for (const Token& t : utterance.tokens) {
    if (t.lang == LangTag::kOther) continue;
    if (previous && *previous != t.lang) ++switches;
    previous = t.lang;
  }
  return switches;
}

std::size_t tagged_token_count(const Utterance& utterance) {
  return std::count_if(utterance.tokens.begin(), utterance.tokens.end(),
                       [](const Token& t) { return t.lang != LangTag::kOther; });
}

double spf(const Utterance& utterance, SpfDenominator denominator) {
  std::size_t n = tagged_token_count(utterance);
  if (denominator == SpfDenominator::kBoundaries && n > 0) --n;
  if (n == 0) throw DataError("spf: zero denominator");
  return static_cast<double>(switch_points(utterance)) / static_cast<double>(n);
}

double cmi(const Utterance& utterance) {
  const auto langs = tagged(utterance);
  if (langs.empty()) throw DataError("cmi: utterance has no tagged token");
  std::size_t l1 = 0;
  for (const auto& [pos, lang] : langs) l1 += lang == LangTag::kL1 ? 1 : 0;
  const std::size_t n = langs.size();
  const std::size_t dominant = std::max(l1, n - l1);
  const std::size_t p = switch_points(utterance);
  return static_cast<double>(n - dominant + p) / static_cast<double>(n);
}

double mean_spf(const Corpus& corpus, SpfDenominator denominator) {
  const std::size_t min_tagged =
      denominator == SpfDenominator::kBoundaries ? 2 : 1;
  double sum = 0.0;
  std::size_t used = 0;
  for (const Utterance& u : corpus.utterances()) {
    if (tagged_token_count(u) < min_tagged) continue;
    sum += spf(u, denominator);
    ++used;
  }
  if (used == 0) throw DataError("mean_spf: no utterance with tagged tokens");
  return sum / static_cast<double>(used);
}

double mean_cmi(const Corpus& corpus) {
  double sum = 0.0;
  std::size_t used = 0;
  for (const Utterance& u : corpus.utterances()) {
    if (tagged_token_count(u) == 0) continue;
    sum += cmi(u);
    ++used;
  }
  if (used == 0) throw DataError("mean_cmi: no utterance with tagged tokens");
  return sum / static_cast<double>(used);
}

EditCounts edit_distance(const std::vector<std::string>& ref,
                         const std::vector<std::string>& hyp) {
  return count_ops(ref, hyp);
}

double wer(const std::vector<std::string>& ref,
           const std::vector<std::string>& hyp) {
  if (ref.empty()) throw DataError("wer: empty reference");
  const EditCounts c = edit_distance(ref, hyp);
  return 100.0 * static_cast<double>(c.total()) / static_cast<double>(ref.size());
}

double CerReport::overall() const {
  if (counts.ref_len == 0) throw DataError("cer: empty reference");
  return 100.0 * static_cast<double>(counts.total()) /
         static_cast<double>(counts.ref_len);
}

double CerReport::per_language(LangTag lang) const {
  const std::size_t n = ref_chars[lang_index(lang)];
  if (n == 0) return -1.0;
  return 100.0 * static_cast<double>(errors[lang_index(lang)]) /
         static_cast<double>(n);
}

CerReport cer(const Utterance& ref, const Utterance& hyp) {
  std::vector<char32_t> ref_chars;
  std::vector<LangTag> ref_langs;
  for (const Token& t : ref.tokens) {
    for (char32_t cp : unicode::decode(t.surface)) {
      if (unicode::is_space(cp)) continue;
      ref_chars.push_back(cp);
      ref_langs.push_back(t.lang);
    }
  }
  if (ref_chars.empty()) throw DataError("cer: empty reference");
  std::vector<char32_t> hyp_chars;
  for (const Token& t : hyp.tokens) {
    for (char32_t cp : unicode::decode(t.surface)) {
      if (!unicode::is_space(cp)) hyp_chars.push_back(cp);
    }
  }

  CerReport report;
  report.counts.ref_len = ref_chars.size();
  for (LangTag lang : ref_langs) ++report.ref_chars[lang_index(lang)];
  std::size_t i = 0;  // reference position
  for (Op op : align_ops(ref_chars, hyp_chars)) {
    switch (op) {
      case Op::kMatch:
        ++i;
        break;
      case Op::kSub:
        ++report.counts.sub;
        ++report.errors[lang_index(ref_langs[i])];
        ++i;
        break;
      case Op::kDel:
        ++report.counts.del;
        ++report.errors[lang_index(ref_langs[i])];
        ++i;
        break;
      case Op::kIns:
        ++report.counts.ins;
        ++report.errors[lang_index(ref_langs[i > 0 ? i - 1 : 0])];
        break;
    }
  }
  return report;
}

CerReport& operator+=(CerReport& a, const CerReport& b) {
  a.counts.ins += b.counts.ins;
  a.counts.del += b.counts.del;
  a.counts.sub += b.counts.sub;
  a.counts.ref_len += b.counts.ref_len;
  for (std::size_t k = 0; k < 3; ++k) {
    a.ref_chars[k] += b.ref_chars[k];
    a.errors[k] += b.errors[k];
  }
  return a;
}

std::string_view to_string(SegmentBucket bucket) {
  switch (bucket) {
    case SegmentBucket::kL1L1:
      return "L1L1";
    case SegmentBucket::kL2L2:
      return "L2L2";
    case SegmentBucket::kL1L2:
      return "L1L2";
    case SegmentBucket::kL2L1:
      return "L2L1";
    case SegmentBucket::kOther:
      return "OTHER";
  }
  return "OTHER";
}

std::vector<SegmentBucket> bucket_transitions(const Utterance& utterance) {
  std::vector<SegmentBucket> out;
  out.reserve(utterance.size());
  for (std::size_t t = 0; t < utterance.size(); ++t) {
    const LangTag cur = utterance.tokens[t].lang;
    const LangTag prev = t == 0 ? cur : utterance.tokens[t - 1].lang;
    if (cur == LangTag::kOther || prev == LangTag::kOther) {
      out.push_back(SegmentBucket::kOther);
    } else if (prev == LangTag::kL1) {
      out.push_back(cur == LangTag::kL1 ? SegmentBucket::kL1L1
                                        : SegmentBucket::kL1L2);
    } else {
      out.push_back(cur == LangTag::kL2 ? SegmentBucket::kL2L2
                                        : SegmentBucket::kL2L1);
    }
  }
  return out;
}

TriggerStats trigger_stats(const Corpus& corpus, TriggerSource source) {
  TriggerStats stats;
  for (const Utterance& u : corpus.utterances()) {
    const auto langs = tagged(u);
    for (std::size_t k = 1; k < langs.size(); ++k) {
      if (langs[k].second == langs[k - 1].second) continue;
      const Token& trigger = u.tokens[langs[k - 1].first];
      std::string key;
      if (source == TriggerSource::kPos) {
        if (!trigger.pos) {
          throw DataError("trigger_stats: token '" + trigger.surface +
                          "' has no POS tag");
        }
        key = *trigger.pos;
      } else {
        key = trigger.surface;
      }
      ++stats[std::string(to_string(trigger.lang))][key].count;
    }
  }
  for (auto& [side, table] : stats) {
    std::size_t total = 0;
    for (const auto& [key, entry] : table) total += entry.count;
    for (auto& [key, entry] : table) {
      entry.ratio = static_cast<double>(entry.count) / static_cast<double>(total);
    }
  }
  return stats;
}

}  // namespace cslab
