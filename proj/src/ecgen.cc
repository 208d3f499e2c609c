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

#include "cslab/ecgen.h"

#include <algorithm>
#include <set>
#include <span>
#include <string>

#include "cslab/error.h"
#include "cslab/random.h"

namespace cslab {

namespace {

bool crosses(const Link& x, const Link& y) {
  return (x.src < y.src && x.tgt > y.tgt) || (x.src > y.src && x.tgt < y.tgt);
}

void choose(const std::vector<SpanSubstitution>& spans, std::size_t from,
            std::size_t min_begin, std::size_t left,
            std::vector<SpanSubstitution>& current,
            std::vector<std::vector<SpanSubstitution>>& out) {
  for (std::size_t k = from; k < spans.size(); ++k) {
    if (spans[k].src_begin < min_begin) continue;
    current.push_back(spans[k]);
    out.push_back(current);
    if (left > 1) choose(spans, k + 1, spans[k].src_end, left - 1, current, out);
    current.pop_back();
  }
}

std::set<std::vector<std::string>> ngram_types(const Corpus& corpus,
                                               std::size_t n) {
  std::set<std::vector<std::string>> out;
  for (const Utterance& u : corpus.utterances()) {
    const auto words = u.surfaces();
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
      out.emplace(words.begin() + static_cast<std::ptrdiff_t>(i),
                  words.begin() + static_cast<std::ptrdiff_t>(i + n));
    }
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> crossing_pairs(
    const Alignment& a) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto& links = a.links();
  for (std::size_t i = 0; i < links.size(); ++i) {
    for (std::size_t j = i + 1; j < links.size(); ++j) {
      if (crosses(links[i], links[j])) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<SpanSubstitution> substitutable_spans(const Alignment& a) {
  std::vector<SpanSubstitution> out;
  const auto& links = a.links();
  for (std::size_t b = 0; b < a.src_len(); ++b) {
    for (std::size_t e = b + 1; e <= a.src_len(); ++e) {
      std::vector<const Link*> inside;
      std::vector<const Link*> outside;
      for (const Link& l : links) {
        (l.src >= b && l.src < e ? inside : outside).push_back(&l);
      }
      if (inside.empty()) continue;
      std::size_t t1 = inside.front()->tgt;
      std::size_t t2 = t1;
      for (const Link* l : inside) {
        t1 = std::min(t1, l->tgt);
        t2 = std::max(t2, l->tgt);
      }
      bool ok = true;
      for (const Link* o : outside) {
        if (o->tgt >= t1 && o->tgt <= t2) {
          ok = false;
          break;
        }
        for (const Link* in : inside) {
          if (crosses(*in, *o)) {
            ok = false;
            break;
          }
        }
        if (!ok) break;
      }
      if (ok) out.push_back({b, e, t1, t2 + 1, 0});
    }
  }
  return out;
}

std::vector<Generated> generate(const Utterance& src, const Utterance& tgt,
                                const Alignment& a, const GenConfig& config) {
  if (config.max_switches < 1) throw ContractError("max_switches must be >= 1");
  if (a.src_len() != src.size() || a.tgt_len() != tgt.size()) {
    throw DataError("alignment lengths " + std::to_string(a.src_len()) + "/" +
                    std::to_string(a.tgt_len()) + " do not match sentence pair '" +
                    src.id + "' of lengths " + std::to_string(src.size()) + "/" +
                    std::to_string(tgt.size()));
  }
  const auto spans = substitutable_spans(a);
  std::vector<std::vector<SpanSubstitution>> choices;
  std::vector<SpanSubstitution> current;
  choose(spans, 0, 0, config.max_switches, current, choices);

  std::vector<Generated> out;
  std::set<std::vector<std::string>> seen;
  for (auto& choice : choices) {
    Generated g;
    std::size_t pos = 0;
    for (SpanSubstitution& s : choice) {
      for (; pos < s.src_begin; ++pos) g.utterance.tokens.push_back(src.tokens[pos]);
      s.out_begin = g.utterance.tokens.size();
      for (std::size_t t = s.tgt_begin; t < s.tgt_end; ++t) {
        Token tok = tgt.tokens[t];
        tok.lang = LangTag::kL2;
        g.utterance.tokens.push_back(std::move(tok));
      }
      pos = s.src_end;
    }
    for (; pos < src.size(); ++pos) g.utterance.tokens.push_back(src.tokens[pos]);
    if (!seen.insert(g.utterance.surfaces()).second) continue;
    g.spans = std::move(choice);
    out.push_back(std::move(g));
  }

  if (config.max_outputs_per_pair > 0 && out.size() > config.max_outputs_per_pair) {
    std::vector<std::size_t> order(out.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(config.seed);
    rng.shuffle(std::span<std::size_t>(order));
    order.resize(config.max_outputs_per_pair);
    std::sort(order.begin(), order.end());
    std::vector<Generated> kept;
    kept.reserve(order.size());
    for (std::size_t i : order) kept.push_back(std::move(out[i]));
    out = std::move(kept);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].utterance.id = src.id + "#" + std::to_string(i);
  }
  return out;
}

double novel_ngram_rate(const Corpus& gen, const Corpus& ref, std::size_t n) {
  if (n < 1) throw ContractError("novel_ngram_rate: n must be >= 1");
  if (gen.empty() || ref.empty()) throw DataError("novel_ngram_rate: empty corpus");
  const auto ref_types = ngram_types(ref, n);
  if (ref_types.empty()) throw DataError("novel_ngram_rate: reference has no n-grams");
  std::size_t novel = 0;
  for (const auto& g : ngram_types(gen, n)) novel += ref_types.contains(g) ? 0 : 1;
  return 100.0 * static_cast<double>(novel) / static_cast<double>(ref_types.size());
}

}  // namespace cslab
