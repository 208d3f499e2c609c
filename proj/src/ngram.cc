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

#include "cslab/ngram.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cslab/error.h"
#include "json.hpp"

namespace cslab {

namespace {

constexpr int kBosId = 0;
constexpr int kEosId = 1;
constexpr int kUnkId = 2;
constexpr int kFormatVersion = 1;

}  // namespace

std::string_view to_string(Smoothing s) {
  switch (s) {
    case Smoothing::kMle:
      return "mle";
    case Smoothing::kLaplace:
      return "laplace";
    case Smoothing::kKneserNey:
      return "kn";
  }
  return "kn";
}

Smoothing parse_smoothing(std::string_view text) {
  if (text == "mle") return Smoothing::kMle;
  if (text == "laplace") return Smoothing::kLaplace;
  if (text == "kn" || text == "kneser-ney") return Smoothing::kKneserNey;
  throw DataError("unknown smoothing '" + std::string(text) + "'");
}

NgramModel NgramModel::fit(const Corpus& corpus, const NgramConfig& config) {
  if (config.order < 1 || config.order > 5) {
    throw ContractError("ngram order must be in [1, 5]");
  }
  if (config.smoothing == Smoothing::kKneserNey &&
      !(config.discount > 0.0 && config.discount < 1.0)) {
    throw ContractError("Kneser-Ney discount must be in (0, 1)");
  }
  if (corpus.token_count() == 0) throw DataError("ngram fit on empty corpus");

  NgramModel model;
  model.config_ = config;
  model.words_ = {std::string(kBos), std::string(kEos), std::string(kUnk)};
  for (const auto& [surface, count] : corpus.vocab()) {
    if (count < config.unk_threshold) continue;
    if (surface == kBos || surface == kEos || surface == kUnk) continue;
    model.words_.push_back(surface);
  }
  for (std::size_t i = 0; i < model.words_.size(); ++i) {
    model.ids_.emplace(model.words_[i], static_cast<int>(i));
  }

  const std::size_t k = static_cast<std::size_t>(config.order);
  model.levels_.assign(k, {});
  Table& top = model.levels_[k - 1];
  for (const Utterance& u : corpus.utterances()) {
    std::vector<int> seq(k - 1, kBosId);
    for (const Token& t : u.tokens) seq.push_back(model.id(t.surface));
    if (config.eos) seq.push_back(kEosId);
    for (std::size_t i = k - 1; i < seq.size(); ++i) {
      Context ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - (k - 1)),
                  seq.begin() + static_cast<std::ptrdiff_t>(i));
      top[ctx][seq[i]] += 1.0;
    }
  }
  model.build_levels();
  return model;
}

void NgramModel::build_levels() {
  const std::size_t k = levels_.size();
  // Continuation counts: the number of distinct one-word left extensions of
  // each lower-order n-gram among the types one order up.
  for (std::size_t n = k - 1; n >= 1; --n) {
    const Table& upper = levels_[n];
    Table& lower = levels_[n - 1];
    lower.clear();
    for (const auto& [ctx, row] : upper) {
      const Context suffix(ctx.begin() + 1, ctx.end());
      for (const auto& [w, c] : row) {
        if (c > 0.0) lower[suffix][w] += 1.0;
      }
    }
  }
  totals_.assign(k, {});
  for (std::size_t n = 0; n < k; ++n) {
    for (const auto& [ctx, row] : levels_[n]) {
      double sum = 0.0;
      for (const auto& [w, c] : row) sum += c;
      totals_[n][ctx] = {sum, row.size()};
    }
  }
}

int NgramModel::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnkId : it->second;
}

bool NgramModel::contains(std::string_view word) const {
  return ids_.contains(std::string(word));
}

std::string_view NgramModel::map_word(std::string_view word) const {
  return words_[static_cast<std::size_t>(id(word))];
}

std::vector<std::string> NgramModel::predicted_vocab() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (static_cast<int>(i) == kBosId) continue;
    if (static_cast<int>(i) == kEosId && !config_.eos) continue;
    out.push_back(words_[i]);
  }
  return out;
}

double NgramModel::kn(std::span<const int> context, int word, int level) const {
  if (level == 0) {
    return 1.0 / predicted_size();
  }
  const std::size_t n = static_cast<std::size_t>(level);
  const Context ctx(context.end() - static_cast<std::ptrdiff_t>(n - 1),
                    context.end());
  const auto& totals = totals_[n - 1];
  auto tot = totals.find(ctx);
  if (tot == totals.end() || tot->second.first <= 0.0) {
    return kn(context, word, level - 1);
  }
  const auto& row = levels_[n - 1].at(ctx);
  auto hit = row.find(word);
  const double c = hit == row.end() ? 0.0 : hit->second;
  const double d = config_.discount;
  const double total = tot->second.first;
  const double types = static_cast<double>(tot->second.second);
  return std::max(c - d, 0.0) / total +
         d * types / total * kn(context, word, level - 1);
}

double NgramModel::prob(std::span<const std::string> context,
                        std::string_view word) const {
  const std::size_t k = static_cast<std::size_t>(config_.order);
  Context ctx(k - 1, kBosId);
  const std::size_t take = std::min(context.size(), k - 1);
  for (std::size_t i = 0; i < take; ++i) {
    ctx[k - 1 - take + i] = id(context[context.size() - take + i]);
  }
  int w = id(word);
  if (w == kBosId) throw ContractError("<s> is not a predictable word");
  if (w == kEosId && !config_.eos) w = kUnkId;

  if (config_.smoothing == Smoothing::kKneserNey) {
    return kn(ctx, w, config_.order);
  }
  const auto& totals = totals_[k - 1];
  auto tot = totals.find(ctx);
  const double total = tot == totals.end() ? 0.0 : tot->second.first;
  double c = 0.0;
  if (total > 0.0) {
    const auto& row = levels_[k - 1].at(ctx);
    if (auto hit = row.find(w); hit != row.end()) c = hit->second;
  }
  if (config_.smoothing == Smoothing::kMle) {
    if (total <= 0.0) throw DataError("MLE model has no mass for this context");
    return c / total;
  }
  return (c + 1.0) / (total + predicted_size());
}

double NgramModel::sentence_log_prob(std::span<const std::string> words) const {
  std::vector<std::string> history;
  double lp = 0.0;
  for (const std::string& w : words) {
    lp += std::log(prob(history, w));
    history.push_back(w);
  }
  if (config_.eos) lp += std::log(prob(history, kEos));
  return lp;
}

std::string NgramModel::to_json() const {
  nlohmann::json j;
  j["format"] = "cs-lab-ngram";
  j["version"] = kFormatVersion;
  j["order"] = config_.order;
  j["smoothing"] = std::string(to_string(config_.smoothing));
  j["discount"] = config_.discount;
  j["unk_threshold"] = config_.unk_threshold;
  j["eos"] = config_.eos;
  j["vocab"] = words_;
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& [ctx, row] : levels_.back()) {
    for (const auto& [w, c] : row) {
      nlohmann::json ctx_words = nlohmann::json::array();
      for (int id : ctx) ctx_words.push_back(words_[static_cast<std::size_t>(id)]);
      counts.push_back({ctx_words, words_[static_cast<std::size_t>(w)], c});
    }
  }
  j["counts"] = std::move(counts);
  return j.dump();
}

NgramModel NgramModel::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("ngram model: ") + e.what());
  }
  if (j.value("format", "") != "cs-lab-ngram") {
    throw DataError("ngram model: not a cs-lab-ngram file");
  }
  if (j.value("version", 0) != kFormatVersion) {
    throw DataError("ngram model: unsupported version");
  }
  NgramModel model;
  try {
    model.config_.order = j.at("order").get<int>();
    model.config_.smoothing = parse_smoothing(j.at("smoothing").get<std::string>());
    model.config_.discount = j.at("discount").get<double>();
    model.config_.unk_threshold = j.at("unk_threshold").get<std::size_t>();
    model.config_.eos = j.at("eos").get<bool>();
    model.words_ = j.at("vocab").get<std::vector<std::string>>();
    if (model.words_.size() < 3 || model.words_[0] != kBos ||
        model.words_[1] != kEos || model.words_[2] != kUnk) {
      throw DataError("ngram model: vocabulary must start with <s> </s> <unk>");
    }
    for (std::size_t i = 0; i < model.words_.size(); ++i) {
      model.ids_.emplace(model.words_[i], static_cast<int>(i));
    }
    const std::size_t k = static_cast<std::size_t>(model.config_.order);
    if (k < 1 || k > 5) throw DataError("ngram model: bad order");
    model.levels_.assign(k, {});
    for (const auto& entry : j.at("counts")) {
      Context ctx;
      for (const auto& w : entry.at(0)) ctx.push_back(model.id(w.get<std::string>()));
      if (ctx.size() != k - 1) throw DataError("ngram model: bad context length");
      model.levels_[k - 1][ctx][model.id(entry.at(1).get<std::string>())] +=
          entry.at(2).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("ngram model: ") + e.what());
  }
  model.build_levels();
  return model;
}

void NgramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json() << '\n';
}

NgramModel NgramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

double BucketPpl::ppl() const {
  return tokens == 0 ? 0.0 : std::exp(nll / static_cast<double>(tokens));
}

double PplReport::ppl() const {
  if (tokens == 0) throw DataError("perplexity over zero tokens");
  return std::exp(nll / static_cast<double>(tokens));
}

PplReport ppl(const NgramModel& model, const Corpus& corpus, bool split_buckets) {
  PplReport report;
  for (const Utterance& u : corpus.utterances()) {
    const auto buckets = bucket_transitions(u);
    std::vector<std::string> history;
    auto score = [&](std::string_view word, SegmentBucket bucket) {
      const double p = model.prob(history, word);
      if (!(p > 0.0)) {
        throw DataError("zero probability for token '" + std::string(word) +
                        "' in utterance '" + u.id + "'");
      }
      const double nll = -std::log(p);
      report.nll += nll;
      ++report.tokens;
      if (split_buckets) {
        BucketPpl& b = report.buckets[bucket];
        b.nll += nll;
        ++b.tokens;
      }
    };
    for (std::size_t t = 0; t < u.size(); ++t) {
      score(u.tokens[t].surface, buckets[t]);
      history.push_back(u.tokens[t].surface);
    }
    if (model.config().eos) score(kEos, SegmentBucket::kOther);
  }
  return report;
}

}  // namespace cslab
