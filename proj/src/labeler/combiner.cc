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

#include "cslab/labeler/combiner.h"

#include "cslab/error.h"
#include "cslab/unicode.h"

namespace cslab::labeler {

using nn::Tape;
using nn::Var;

CharInventory::CharInventory() { add(kUnkSymbol); }

void CharInventory::add(const std::string& ch) {
  if (index_.contains(ch)) return;
  index_.emplace(ch, chars_.size());
  chars_.push_back(ch);
}

CharInventory CharInventory::build(const std::vector<std::string>& words) {
  CharInventory inv;
  for (const std::string& w : words) {
    for (const std::string& ch : unicode::characters(w)) inv.add(ch);
  }
  return inv;
}

std::size_t CharInventory::id(std::string_view ch) const {
  auto it = index_.find(std::string(ch));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> CharInventory::encode(std::string_view word) const {
  std::vector<std::size_t> out;
  for (const std::string& ch : unicode::characters(word)) out.push_back(id(ch));
  if (out.empty()) out.push_back(kUnk);
  return out;
}

nlohmann::json CharInventory::to_json() const { return chars_; }

CharInventory CharInventory::from_json(const nlohmann::json& j) {
  const auto chars = j.get<std::vector<std::string>>();
  if (chars.empty() || chars.front() != kUnkSymbol) {
    throw DataError("character inventory does not start with the UNK character");
  }
  CharInventory inv;
  for (const std::string& ch : chars) inv.add(ch);
  return inv;
}

CharEncoder::CharEncoder(const std::string& name, std::size_t chars, std::size_t char_dim,
                         std::size_t hidden, Rng& rng)
    : embed_(name + ".embed", nn::Tensor(chars, char_dim)),
      fwd_(name + ".fwd", char_dim, hidden, rng),
      bwd_(name + ".bwd", char_dim, hidden, rng) {
  for (double& v : embed_.value.data()) v = rng.uniform(-0.1, 0.1);
}

Var CharEncoder::encode(Tape& tape, const std::vector<std::size_t>& char_ids) {
  Var xs = nn::gather_rows(tape.param(embed_), char_ids);
  const auto f = nn::lstm_run(tape, fwd_, xs, false);
  const auto b = nn::lstm_run(tape, bwd_, xs, true);
  return nn::concat_cols({f.second.h, b.second.h});
}

nn::ParamList CharEncoder::parameters() {
  nn::ParamList out{&embed_};
  for (nn::Parameter* p : fwd_.parameters()) out.push_back(p);
  for (nn::Parameter* p : bwd_.parameters()) out.push_back(p);
  return out;
}

std::string_view to_string(CombineMode m) {
  switch (m) {
    case CombineMode::kConcat: return "concat";
    case CombineMode::kLinear: return "linear";
    case CombineMode::kMme: return "mme";
    case CombineMode::kHme: return "hme";
  }
  return "?";
}

CombineMode parse_combine_mode(std::string_view text) {
  for (CombineMode m :
       {CombineMode::kConcat, CombineMode::kLinear, CombineMode::kMme, CombineMode::kHme}) {
    if (to_string(m) == text) return m;
  }
  throw DataError("unknown combiner '" + std::string(text) + "'");
}

nlohmann::json CombinerConfig::to_json() const {
  return {{"mode", std::string(to_string(mode))}, {"proj_dim", proj_dim},
          {"char_dim", char_dim},                 {"char_hidden", char_hidden},
          {"subword_heads", subword_heads},       {"subword_ff", subword_ff}};
}

CombinerConfig CombinerConfig::from_json(const nlohmann::json& j) {
  CombinerConfig c;
  c.mode = parse_combine_mode(j.at("mode").get<std::string>());
  c.proj_dim = j.at("proj_dim").get<std::size_t>();
  c.char_dim = j.at("char_dim").get<std::size_t>();
  c.char_hidden = j.at("char_hidden").get<std::size_t>();
  c.subword_heads = j.at("subword_heads").get<std::size_t>();
  c.subword_ff = j.at("subword_ff").get<std::size_t>();
  return c;
}

Mixture mix_sources(Tape& tape, const std::vector<Var>& projected, nn::Parameter& v) {
  if (projected.empty()) throw ContractError("mixture over zero sources");
  std::vector<Var> scores;
  for (Var p : projected) scores.push_back(nn::matmul_nt(nn::tanh(p), tape.param(v)));
  Var weights = nn::softmax(nn::concat_cols(scores));
  const std::size_t d = projected.front().cols();
  Var ones = tape.constant(nn::Tensor(1, d, 1.0));
  Var out;
  for (std::size_t j = 0; j < projected.size(); ++j) {
    // Broadcast the weight column across d' by an outer product with ones.
    Var term = nn::mul(nn::matmul(nn::slice_cols(weights, j, j + 1), ones), projected[j]);
    out = out.valid() ? nn::add(out, term) : term;
  }
  return {out, weights};
}

Combiner::Combiner(std::vector<EmbeddingSource> words, std::vector<EmbeddingSource> subwords,
                   CharInventory chars, const CombinerConfig& config, Rng& rng)
    : config_(config),
      words_(std::move(words)),
      subwords_(std::move(subwords)),
      chars_(std::move(chars)) {
  if (words_.empty()) throw ContractError("combiner needs at least one word embedding source");
  const std::size_t d = config_.proj_dim;
  if (config_.mode != CombineMode::kConcat) {
    for (std::size_t j = 0; j < words_.size(); ++j) {
      word_proj_.emplace_back("comb.word" + std::to_string(j), words_[j].dim(), d, rng);
    }
    word_v_ = nn::Parameter("comb.word_v", nn::Tensor(1, d));
    nn::xavier_uniform(word_v_, rng);
  }
  if (config_.mode == CombineMode::kHme) {
    if (subwords_.empty()) throw ContractError("HME needs at least one subword source");
    nn::EncoderLayerConfig enc{d, config_.subword_heads, config_.subword_ff, 0.0};
    for (std::size_t j = 0; j < subwords_.size(); ++j) {
      sub_proj_.emplace_back("comb.sub" + std::to_string(j), subwords_[j].dim(), d, rng);
      sub_enc_.emplace_back("comb.sub" + std::to_string(j) + ".enc", enc, rng);
    }
    sub_v_ = nn::Parameter("comb.sub_v", nn::Tensor(1, d));
    nn::xavier_uniform(sub_v_, rng);
    char_enc_ = CharEncoder("comb.char", chars_.size(), config_.char_dim, config_.char_hidden, rng);
  }
}

std::size_t Combiner::output_dim() const {
  switch (config_.mode) {
    case CombineMode::kConcat: {
      std::size_t total = 0;
      for (const EmbeddingSource& s : words_) total += s.dim();
      return total;
    }
    case CombineMode::kLinear:
    case CombineMode::kMme: return config_.proj_dim;
    case CombineMode::kHme: return 2 * config_.proj_dim + 2 * config_.char_hidden;
  }
  return 0;
}

nn::ParamList Combiner::parameters() {
  nn::ParamList out;
  auto take = [&](nn::ParamList ps) { out.insert(out.end(), ps.begin(), ps.end()); };
  for (nn::Linear& l : word_proj_) take(l.parameters());
  // LINEAR sums with equal weights, so word_v_ only exists for the mixtures.
  if (config_.mode == CombineMode::kMme || config_.mode == CombineMode::kHme) {
    out.push_back(&word_v_);
  }
  if (config_.mode == CombineMode::kHme) {
    for (nn::Linear& l : sub_proj_) take(l.parameters());
    for (nn::TransformerEncoderLayer& e : sub_enc_) take(e.parameters());
    out.push_back(&sub_v_);
    take(char_enc_.parameters());
  }
  return out;
}

Var Combiner::lookup(Tape& tape, EmbeddingSource& src, const std::vector<std::string>& words) {
  std::vector<std::size_t> rows;
  rows.reserve(words.size());
  for (const std::string& w : words) rows.push_back(src.lookup(w));
  return nn::gather_rows(tape.param(src.table()), rows);
}

Var Combiner::subword_encoding(Tape& tape, std::size_t j, const std::vector<std::string>& words) {
  EmbeddingSource& src = subwords_[j];
  std::vector<Var> per_word;
  for (const std::string& w : words) {
    std::vector<std::size_t> rows;
    for (const std::string& piece : segment(w, src.vocabulary())) rows.push_back(src.lookup(piece));
    Var x = sub_proj_[j](tape, nn::gather_rows(tape.param(src.table()), rows));
    Var h = sub_enc_[j](tape, x);
    per_word.push_back(nn::scale(nn::sum_rows(h), 1.0 / static_cast<double>(rows.size())));
  }
  return nn::concat_rows(per_word);
}

CombinerOutput Combiner::operator()(Tape& tape, const std::vector<std::string>& words) {
  if (words.empty()) throw ContractError("combiner on an empty sentence");
  CombinerOutput out;
  std::vector<Var> raw;
  for (EmbeddingSource& s : words_) raw.push_back(lookup(tape, s, words));
  if (config_.mode == CombineMode::kConcat) {
    out.vectors = nn::concat_cols(raw);
    return out;
  }
  std::vector<Var> projected;
  for (std::size_t j = 0; j < raw.size(); ++j) projected.push_back(word_proj_[j](tape, raw[j]));
  if (config_.mode == CombineMode::kLinear) {
    Var sum = projected.front();
    for (std::size_t j = 1; j < projected.size(); ++j) sum = nn::add(sum, projected[j]);
    out.vectors = sum;
    return out;
  }
  const Mixture word_mix = mix_sources(tape, projected, word_v_);
  out.word_weights = word_mix.weights.value();
  if (config_.mode == CombineMode::kMme) {
    out.vectors = word_mix.output;
    return out;
  }
  std::vector<Var> encoded;
  for (std::size_t j = 0; j < subwords_.size(); ++j) encoded.push_back(subword_encoding(tape, j, words));
  const Mixture sub_mix = mix_sources(tape, encoded, sub_v_);
  out.subword_weights = sub_mix.weights.value();
  std::vector<Var> chars;
  for (const std::string& w : words) chars.push_back(char_enc_.encode(tape, chars_.encode(w)));
  out.vectors = nn::concat_cols({word_mix.output, sub_mix.output, nn::concat_rows(chars)});
  return out;
}

}  // namespace cslab::labeler
