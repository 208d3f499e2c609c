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

#include "cslab/toy.h"

#include <array>
#include <fstream>
#include <sstream>
#include <string>

#include "cslab/error.h"
#include "cslab/random.h"

namespace cslab::toy {

namespace {

struct Entry {
  std::string l1;
  std::string l2;
};

const std::vector<Entry> kSubjects = {
    {"i", "我"}, {"you", "你"}, {"we", "我们"}, {"they", "他们"}};
const std::vector<Entry> kVerbs = {
    {"see", "看见"}, {"buy", "买"}, {"want", "要"}, {"have", "有"}, {"count", "数"}};
const std::vector<Entry> kDigits = {
    {"zero", "零"}, {"one", "一"}, {"two", "二"},   {"three", "三"}, {"four", "四"},
    {"five", "五"}, {"six", "六"}, {"seven", "七"}, {"eight", "八"}, {"nine", "九"}};

constexpr std::array<const char*, 8> kOnsets = {"b", "k", "m", "t", "n", "r", "s", "l"};
constexpr std::array<const char*, 5> kVowels = {"a", "o", "i", "u", "e"};
constexpr std::array<const char*, 20> kHanzi = {
    "山", "水", "花", "石", "月", "风", "云", "木", "火", "金",
    "草", "鱼", "鸟", "田", "竹", "星", "雨", "雪", "海", "林"};

// Pseudo-words: index -> two syllables; nouns take an "s" ending.
std::string latin_word(std::size_t i, bool noun) {
  const std::size_t n = kOnsets.size() * kVowels.size();
  const std::size_t a = (i * 7 + (noun ? 3 : 0)) % n;
  const std::size_t b = (i * 13 + 5 + (noun ? 11 : 0)) % n;
  std::string w = std::string(kOnsets[a / kVowels.size()]) + kVowels[a % kVowels.size()] +
                  kOnsets[b / kVowels.size()] + kVowels[b % kVowels.size()];
  w += noun ? "s" : "n";
  return w;
}

std::string hanzi_word(std::size_t i, bool noun) {
  const std::size_t n = kHanzi.size();
  const std::size_t first = (i + (noun ? 10 : 0)) % n;
  const std::size_t second = (i / n + i * 3 + (noun ? 1 : 7)) % n;
  return std::string(kHanzi[first]) + kHanzi[second] + (noun ? "子" : "的");
}

std::vector<Entry> open_class(std::size_t count, bool noun) {
  std::vector<Entry> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({latin_word(i, noun), hanzi_word(i, noun)});
  }
  return out;
}

class Sampler {
 public:
  Sampler(const DigitGrammarConfig& config)
      : rng_(config.seed),
        adjectives_(open_class(config.open_class, false)),
        nouns_(open_class(config.open_class, true)) {
    double total = 0.0;
    for (std::size_t i = 0; i < config.open_class; ++i) {
      total += 1.0 / static_cast<double>(i + 1);
      zipf_.push_back(total);
    }
    for (double& z : zipf_) z /= total;
  }

  ParallelPair sentence(const std::string& id) {
    Builder b;
    const Entry& subj = pick(kSubjects);
    const Entry& verb = pick(kVerbs);
    const std::size_t s1 = b.l1_token(subj.l1, "PRP_EN");
    const std::size_t v1 = b.l1_token(verb.l1, "VB_EN");
    const std::size_t s2 = b.l2_token(subj.l2, "PN_ZH");
    b.links.push_back({s1, s2});
    noun_phrase(b);
    if (rng_.bernoulli(0.3)) {
      const std::size_t c1 = b.l1_token("and", "CC_EN");
      const std::size_t c2 = b.l2_token("和", "CC_ZH");
      b.links.push_back({c1, c2});
      noun_phrase(b);
    }
    const std::size_t v2 = b.l2_token(verb.l2, "VV_ZH");
    b.links.push_back({v1, v2});
    b.l1.id = id;
    b.l2.id = id;
    const std::size_t n1 = b.l1.size();
    const std::size_t n2 = b.l2.size();
    return {std::move(b.l1), std::move(b.l2), Alignment(std::move(b.links), n1, n2)};
  }

  // One switched span, weighted towards whole noun phrases and bare nouns.
  // Replacing the whole sentence would leave it monolingual, so that span is
  // never chosen.
  Utterance code_switch(const ParallelPair& p, const std::string& id) {
    const auto outputs =
        generate(p.l1, p.l2, p.alignment, {.max_switches = 1, .max_outputs_per_pair = 0});
    std::vector<double> weights;
    double total = 0.0;
    for (const Generated& g : outputs) {
      const SpanSubstitution& s = g.spans.front();
      const std::string& first = *p.l1.tokens[s.src_begin].pos;
      const std::string& last = *p.l1.tokens[s.src_end - 1].pos;
      double w = s.src_begin == 0 && s.src_end == p.l1.size() ? 0.0 : 1.0;
      if (last == "NNS_EN" && first == "CD_EN") w = 6.0;
      if (last == "NNS_EN" && s.src_end - s.src_begin == 1) w = 4.0;
      total += w;
      weights.push_back(total);
    }
    const double r = rng_.uniform() * total;
    std::size_t k = 0;
    while (k + 1 < weights.size() && weights[k] <= r) ++k;
    Utterance u = outputs[k].utterance;
    u.id = id;
    return u;
  }

 private:
  struct Builder {
    Utterance l1;
    Utterance l2;
    std::vector<Link> links;
    std::size_t l1_token(const std::string& s, const char* pos) {
      l1.tokens.push_back({s, LangTag::kL1, pos, std::nullopt});
      return l1.size() - 1;
    }
    std::size_t l2_token(const std::string& s, const char* pos) {
      l2.tokens.push_back({s, LangTag::kL2, pos, std::nullopt});
      return l2.size() - 1;
    }
  };

  const Entry& pick(const std::vector<Entry>& items) { return items[rng_.index(items.size())]; }
  const Entry& zipf_pick(const std::vector<Entry>& items) {
    const double r = rng_.uniform();
    std::size_t k = 0;
    while (k + 1 < zipf_.size() && zipf_[k] <= r) ++k;
    return items[k];
  }

  void noun_phrase(Builder& b) {
    const std::size_t digits = 1 + rng_.index(3);
    for (std::size_t i = 0; i < digits; ++i) {
      const Entry& d = pick(kDigits);
      b.links.push_back({b.l1_token(d.l1, "CD_EN"), b.l2_token(d.l2, "CD_ZH")});
    }
    b.l2_token("个", "M_ZH");
    const std::size_t adjectives = rng_.index(3);
    for (std::size_t i = 0; i < adjectives; ++i) {
      const Entry& a = zipf_pick(adjectives_);
      b.links.push_back({b.l1_token(a.l1, "JJ_EN"), b.l2_token(a.l2, "JJ_ZH")});
    }
    const Entry& n = zipf_pick(nouns_);
    b.links.push_back({b.l1_token(n.l1, "NNS_EN"), b.l2_token(n.l2, "NN_ZH")});
  }

  Rng rng_;
  std::vector<Entry> adjectives_;
  std::vector<Entry> nouns_;
  std::vector<double> zipf_;
};

Corpus switched(Sampler& sampler, std::size_t count, const std::string& prefix,
                std::vector<ParallelPair>* sources = nullptr) {
  Corpus out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string id = prefix + std::to_string(i);
    ParallelPair p = sampler.sentence(id);
    out.add(sampler.code_switch(p, id));
    if (sources) sources->push_back(std::move(p));
  }
  return out;
}

void write_pairs(const std::vector<ParallelPair>& pairs, const std::filesystem::path& dir,
                 const std::string& prefix, const std::string& align_name) {
  write_conll(l1_side(pairs), dir / (prefix + "l1.conll"));
  write_conll(l2_side(pairs), dir / (prefix + "l2.conll"));
  std::ofstream align(dir / align_name);
  if (!align) throw DataError("cannot write " + (dir / align_name).string());
  for (const ParallelPair& p : pairs) align << emit_pharaoh(p.alignment) << '\n';
}

std::vector<ParallelPair> read_pairs(const std::filesystem::path& dir, const std::string& prefix,
                                     const std::string& align_name) {
  const Corpus l1 = read_conll(dir / (prefix + "l1.conll"));
  const Corpus l2 = read_conll(dir / (prefix + "l2.conll"));
  if (l1.size() != l2.size()) {
    throw DataError(prefix + "l1.conll and " + prefix + "l2.conll hold different sentence counts");
  }
  std::ifstream align(dir / align_name);
  if (!align) throw DataError("cannot read " + (dir / align_name).string());
  std::vector<ParallelPair> out;
  std::string line;
  for (std::size_t i = 0; i < l1.size(); ++i) {
    if (!std::getline(align, line)) throw ParseError(i + 1, "missing alignment line");
    const Utterance& a = l1.utterances()[i];
    const Utterance& b = l2.utterances()[i];
    out.push_back({a, b, parse_pharaoh(line, a.size(), b.size())});
  }
  return out;
}

}  // namespace

DigitCorpus make_digit_corpus(const DigitGrammarConfig& config) {
  if (config.open_class == 0) throw ContractError("digit grammar needs open-class words");
  Sampler sampler(config);
  DigitCorpus out;
  for (std::size_t i = 0; i < config.parallel; ++i) {
    out.parallel.push_back(sampler.sentence("p" + std::to_string(i)));
  }
  out.real_train = switched(sampler, config.real_train, "r", &out.real_sources);
  out.valid = switched(sampler, config.valid, "v");
  out.test = switched(sampler, config.test, "t");
  return out;
}

void write_digit_corpus(const DigitCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_pairs(corpus.parallel, dir, "", "parallel.align");
  write_pairs(corpus.real_sources, dir, "real_", "real.align");
  write_conll(corpus.real_train, dir / "real_train.conll");
  write_conll(corpus.valid, dir / "valid.conll");
  write_conll(corpus.test, dir / "test.conll");
}

DigitCorpus read_digit_corpus(const std::filesystem::path& dir) {
  DigitCorpus out;
  out.parallel = read_pairs(dir, "", "parallel.align");
  out.real_sources = read_pairs(dir, "real_", "real.align");
  out.real_train = read_conll(dir / "real_train.conll");
  out.valid = read_conll(dir / "valid.conll");
  out.test = read_conll(dir / "test.conll");
  if (out.real_sources.size() != out.real_train.size()) {
    throw DataError("real.align does not cover real_train.conll");
  }
  return out;
}

Corpus generate_corpus(const std::vector<ParallelPair>& pairs, const GenConfig& config) {
  Corpus out;
  for (const ParallelPair& p : pairs) {
    for (Generated& g : generate(p.l1, p.l2, p.alignment, config)) out.add(std::move(g.utterance));
  }
  return out;
}

Corpus l1_side(const std::vector<ParallelPair>& pairs) {
  Corpus out;
  for (const ParallelPair& p : pairs) out.add(p.l1);
  return out;
}

Corpus l2_side(const std::vector<ParallelPair>& pairs) {
  Corpus out;
  for (const ParallelPair& p : pairs) out.add(p.l2);
  return out;
}

}  // namespace cslab::toy
