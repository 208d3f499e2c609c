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

#include "cslab/labeler/embeddings.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cslab/error.h"
#include "cslab/unicode.h"

namespace cslab::labeler {

std::string_view to_string(OovPolicy p) {
  switch (p) {
    case OovPolicy::kZero: return "zero";
    case OovPolicy::kMean: return "mean";
    case OovPolicy::kNormalize: return "normalize";
  }
  return "?";
}

OovPolicy parse_oov_policy(std::string_view text) {
  for (OovPolicy p : {OovPolicy::kZero, OovPolicy::kMean, OovPolicy::kNormalize}) {
    if (to_string(p) == text) return p;
  }
  throw DataError("unknown OOV policy '" + std::string(text) + "'");
}

EmbeddingSource::EmbeddingSource(std::string name, std::size_t dim, Granularity granularity,
                                 OovPolicy policy)
    : name_(std::move(name)), dim_(dim), granularity_(granularity), policy_(policy) {
  if (dim == 0) throw ContractError("embedding dimension must be positive");
  rebuild();
}

namespace {

std::vector<std::string> fields(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string f;
  while (in >> f) out.push_back(f);
  return out;
}

double number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "'" + s + "' is not a number");
  }
  return v;
}

}  // namespace

EmbeddingSource EmbeddingSource::load_text(const std::filesystem::path& path, std::string name,
                                           Granularity granularity, OovPolicy policy) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read embeddings " + path.string());
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::string line;
  std::size_t n = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto f = fields(line);
    if (f.empty()) continue;
    if (n == 1 && f.size() == 2) {
      // "count dim" header, skipped once it parses as two integers.
      bool header = true;
      for (const std::string& s : f) {
        header = header && s.find_first_not_of("0123456789") == std::string::npos;
      }
      if (header) continue;
    }
    if (f.size() < 2) throw ParseError(n, "embedding row without values");
    std::vector<double> v;
    for (std::size_t i = 1; i < f.size(); ++i) v.push_back(number(f[i], n));
    if (dim == 0) dim = v.size();
    if (v.size() != dim) {
      throw ParseError(n, "expected " + std::to_string(dim) + " values, got " +
                              std::to_string(v.size()));
    }
    rows.emplace_back(f[0], std::move(v));
  }
  if (rows.empty()) throw DataError("no vectors in " + path.string());
  EmbeddingSource src(std::move(name), dim, granularity, policy);
  for (auto& [w, v] : rows) {
    auto it = src.index_.find(w);
    if (it != src.index_.end()) {
      src.vectors_[it->second] = std::move(v);
      continue;
    }
    src.index_.emplace(w, src.words_.size());
    src.words_.push_back(w);
    src.vectors_.push_back(std::move(v));
    src.vocab_.insert(w);
  }
  src.rebuild();
  return src;
}

void EmbeddingSource::add(const std::string& word, const std::vector<double>& vec) {
  if (vec.size() != dim_) {
    throw ContractError("vector for '" + word + "' has dim " + std::to_string(vec.size()) +
                        ", table '" + name_ + "' has " + std::to_string(dim_));
  }
  auto it = index_.find(word);
  if (it != index_.end()) {
    vectors_[it->second] = vec;
  } else {
    index_.emplace(word, words_.size());
    words_.push_back(word);
    vectors_.push_back(vec);
    vocab_.insert(word);
  }
  rebuild();
}

void EmbeddingSource::rebuild() {
  nn::Tensor t(words_.size() + 1, dim_);
  for (std::size_t r = 0; r < vectors_.size(); ++r) {
    for (std::size_t c = 0; c < dim_; ++c) t(r, c) = vectors_[r][c];
  }
  if (policy_ == OovPolicy::kMean && !vectors_.empty()) {
    for (std::size_t r = 0; r < vectors_.size(); ++r) {
      for (std::size_t c = 0; c < dim_; ++c) t(words_.size(), c) += vectors_[r][c];
    }
    for (std::size_t c = 0; c < dim_; ++c) t(words_.size(), c) /= static_cast<double>(vectors_.size());
  }
  table_ = nn::Parameter("emb." + name_, std::move(t));
  table_.frozen = true;
}

std::size_t EmbeddingSource::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it != index_.end()) return it->second;
  if (policy_ == OovPolicy::kNormalize) {
    auto n = index_.find(normalize_oov(word, vocab_));
    if (n != index_.end()) return n->second;
  }
  return words_.size();
}

std::vector<double> EmbeddingSource::vector(std::string_view word) const {
  auto r = table_.value.row_span(lookup(word));
  return {r.begin(), r.end()};
}

bool EmbeddingSource::contains(std::string_view word) const {
  return index_.contains(std::string(word));
}

std::vector<std::string> segment(std::string_view word, const Vocabulary& subwords) {
  const std::vector<std::string> cps = unicode::characters(word);
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < cps.size()) {
    std::size_t best = 0;
    std::string piece;
    for (std::size_t j = i; j < cps.size(); ++j) {
      piece += cps[j];
      if (subwords.contains(piece)) best = j + 1 - i;
    }
    if (best == 0) {
      ++i;
      continue;
    }
    std::string match;
    for (std::size_t j = i; j < i + best; ++j) match += cps[j];
    out.push_back(std::move(match));
    i += best;
  }
  if (out.empty()) out.emplace_back(word);
  return out;
}

}  // namespace cslab::labeler
