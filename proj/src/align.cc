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

#include "cslab/align.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "cslab/error.h"

namespace cslab {

namespace {

Sentence split_spaces(std::string_view text) {
  Sentence out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_index(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

}  // namespace

Alignment::Alignment(std::vector<Link> links, std::size_t src_len,
                     std::size_t tgt_len)
    : links_(std::move(links)), src_len_(src_len), tgt_len_(tgt_len) {
  for (const Link& l : links_) {
    if (l.src >= src_len_ || l.tgt >= tgt_len_) {
      throw ContractError("alignment link " + std::to_string(l.src) + "-" +
                          std::to_string(l.tgt) + " out of range");
    }
  }
  std::sort(links_.begin(), links_.end());
  links_.erase(std::unique(links_.begin(), links_.end()), links_.end());
}

Alignment parse_pharaoh(std::string_view text, std::size_t src_len,
                        std::size_t tgt_len) {
  std::vector<Link> links;
  for (const std::string& item : split_spaces(text)) {
    const std::size_t dash = item.find('-');
    Link l;
    if (dash == std::string::npos ||
        !parse_index(std::string_view(item).substr(0, dash), l.src) ||
        !parse_index(std::string_view(item).substr(dash + 1), l.tgt)) {
      throw DataError("malformed alignment link '" + item + "'");
    }
    if (l.src >= src_len || l.tgt >= tgt_len) {
      throw DataError("alignment link '" + item + "' out of range for lengths " +
                      std::to_string(src_len) + "/" + std::to_string(tgt_len));
    }
    links.push_back(l);
  }
  return Alignment(std::move(links), src_len, tgt_len);
}

std::string emit_pharaoh(const Alignment& alignment) {
  std::string out;
  for (const Link& l : alignment.links()) {
    if (!out.empty()) out.push_back(' ');
    out += std::to_string(l.src) + "-" + std::to_string(l.tgt);
  }
  return out;
}

std::vector<SentencePair> read_parallel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<SentencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(line_no, "expected src<TAB>tgt");
    }
    pairs.emplace_back(split_spaces(std::string_view(line).substr(0, tab)),
                       split_spaces(std::string_view(line).substr(tab + 1)));
  }
  return pairs;
}

std::vector<Alignment> read_pharaoh_file(const std::filesystem::path& path,
                                         const std::vector<SentencePair>& pairs) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<Alignment> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t n = out.size();
    if (n >= pairs.size()) {
      throw ParseError(n + 1, "more alignment lines than sentence pairs");
    }
    try {
      out.push_back(parse_pharaoh(line, pairs[n].first.size(),
                                  pairs[n].second.size()));
    } catch (const DataError& e) {
      throw ParseError(n + 1, e.what());
    }
  }
  if (out.size() != pairs.size()) {
    throw DataError("alignment file has " + std::to_string(out.size()) +
                    " lines for " + std::to_string(pairs.size()) + " pairs");
  }
  return out;
}

double LexTable::prob(const std::string& src, const std::string& tgt) const {
  auto row = t_.find(src);
  if (row == t_.end()) return fallback_;
  auto cell = row->second.find(tgt);
  return cell == row->second.end() ? 0.0 : cell->second;
}

struct Ibm1Trainer {
  static Ibm1Result run(const std::vector<SentencePair>& pairs, int iterations) {
    if (iterations < 1) throw ContractError("ibm1_fit needs iterations >= 1");
    if (pairs.empty()) throw DataError("ibm1_fit on zero sentence pairs");

    Ibm1Result result;
    std::vector<const SentencePair*> usable;
    std::set<std::string> tgt_vocab;
    for (const SentencePair& p : pairs) {
      if (p.first.empty() || p.second.empty()) {
        ++result.skipped_pairs;
        continue;
      }
      usable.push_back(&p);
      tgt_vocab.insert(p.second.begin(), p.second.end());
    }
    if (usable.empty()) throw DataError("ibm1_fit: every pair has an empty side");

    LexTable& table = result.table;
    table.fallback_ = 1.0 / static_cast<double>(tgt_vocab.size());
    // Uniform start restricted to co-occurring pairs; absent cells are read
    // through the same uniform value on the first pass.
    for (const SentencePair* p : usable) {
      for (const std::string& s : p->first) {
        for (const std::string& t : p->second) {
          table.t_[s][t] = table.fallback_;
        }
      }
    }

    auto log_likelihood = [&] {
      double ll = 0.0;
      for (const SentencePair* p : usable) {
        const double l = static_cast<double>(p->first.size());
        for (const std::string& t : p->second) {
          double sum = 0.0;
          for (const std::string& s : p->first) sum += table.prob(s, t);
          ll += std::log(sum / l);
        }
      }
      return ll;
    };

    for (int it = 0; it < iterations; ++it) {
      result.log_likelihood.push_back(log_likelihood());
      std::unordered_map<std::string, std::unordered_map<std::string, double>> counts;
      for (const SentencePair* p : usable) {
        for (const std::string& t : p->second) {
          double denom = 0.0;
          for (const std::string& s : p->first) denom += table.prob(s, t);
          for (const std::string& s : p->first) {
            counts[s][t] += table.prob(s, t) / denom;
          }
        }
      }
      for (auto& [s, row] : counts) {
        double total = 0.0;
        for (const auto& [t, c] : row) total += c;
        auto& out = table.t_[s];
        out.clear();
        for (const auto& [t, c] : row) out[t] = c / total;
      }
    }
    result.log_likelihood.push_back(log_likelihood());
    return result;
  }
};

Ibm1Result ibm1_fit(const std::vector<SentencePair>& pairs, int iterations) {
  return Ibm1Trainer::run(pairs, iterations);
}

Alignment viterbi_align(const LexTable& table, const Sentence& src,
                        const Sentence& tgt, AlignDirection direction) {
  std::vector<Link> links;
  if (src.empty() || tgt.empty()) return Alignment({}, src.size(), tgt.size());
  if (direction == AlignDirection::kTargetSide) {
    for (std::size_t j = 0; j < tgt.size(); ++j) {
      std::size_t best = 0;
      double best_p = -1.0;
      for (std::size_t i = 0; i < src.size(); ++i) {
        const double p = table.prob(src[i], tgt[j]);
        if (p > best_p) {
          best_p = p;
          best = i;
        }
      }
      links.push_back({best, j});
    }
  } else {
    for (std::size_t i = 0; i < src.size(); ++i) {
      std::size_t best = 0;
      double best_p = -1.0;
      for (std::size_t j = 0; j < tgt.size(); ++j) {
        const double p = table.prob(src[i], tgt[j]);
        if (p > best_p) {
          best_p = p;
          best = j;
        }
      }
      links.push_back({i, best});
    }
  }
  return Alignment(std::move(links), src.size(), tgt.size());
}

}  // namespace cslab
