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

#ifndef CSLAB_CORPUS_H_
#define CSLAB_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cslab {

// Language of a token. kOther marks language-neutral tokens: placeholders,
// punctuation, numbers written with digits, emoji.
enum class LangTag { kL1, kL2, kOther };

std::string_view to_string(LangTag tag);
// Accepts "L1", "L2" and "OTHER". Throws DataError otherwise.
LangTag parse_lang_tag(std::string_view text);

// True for "O" and "B-<cat>" / "I-<cat>" with a non-empty category.
bool is_valid_iob(std::string_view tag);

struct Token {
  std::string surface;
  LangTag lang = LangTag::kOther;
  std::optional<std::string> pos;
  std::optional<std::string> ner;

  friend bool operator==(const Token&, const Token&) = default;
};

// Throws ContractError when the token breaks its invariants.
void validate(const Token& token);

struct Utterance {
  std::string id;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  std::vector<std::string> surfaces() const;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

// Ordered utterances plus a surface frequency table kept in sync with them.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Utterance> utterances);

  void add(Utterance utterance);

  const std::vector<Utterance>& utterances() const { return utterances_; }
  const std::map<std::string, std::size_t>& vocab() const { return vocab_; }
  std::size_t size() const { return utterances_.size(); }
  bool empty() const { return utterances_.empty(); }
  std::size_t token_count() const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.utterances_ == b.utterances_;
  }

 private:
  std::vector<Utterance> utterances_;
  std::map<std::string, std::size_t> vocab_;
};

using Vocabulary = std::set<std::string, std::less<>>;

// Script-based language id: any CJK code point gives kL2, otherwise any Latin
// letter gives kL1, otherwise kOther.
LangTag lang_by_script(std::string_view surface);

struct TokenizeOptions {
  // Split every maximal run of CJK code points into single characters.
  bool cjk_split = false;
  // Remove punctuation except apostrophes; tokens left empty are dropped.
  bool strip_punctuation = false;
};

// Whitespace tokenization with script-based language tags. Throws DataError
// when the text holds no tokens.
Utterance tokenize(std::string_view text, const TokenizeOptions& options = {},
                   std::string id = {});

// Mentions and hashtags become "USR", URLs become "URL"; both tagged kOther.
Utterance replace_special(const Utterance& utterance);
bool looks_like_url(std::string_view surface);

// Maps an out-of-vocabulary word onto an in-vocabulary spelling by trying, in
// order: first letter capitalized, lowercased, lowercased with repeats
// collapsed, capitalized with repeats collapsed. In-vocabulary input and
// words with no match are returned unchanged.
std::string normalize_oov(std::string_view word, const Vocabulary& vocab);

// Character-run collapse used by normalize_oov: runs of three or more equal
// code points shrink to one.
std::string collapse_char_runs(std::string_view word);
// Collapses adjacent repeats of units with the given code point length,
// "lolololol" with unit 2 becomes "lol".
std::string collapse_unit_repeats(std::string_view word, std::size_t unit);

enum class OovLevel { kType, kToken };

// Fraction of surfaces (distinct by default) absent from vocab.
double oov_rate(const Corpus& corpus, const Vocabulary& vocab,
                OovLevel level = OovLevel::kType);

// Tab-separated one-token-per-line format:
//   surface<TAB>lang[<TAB>pos[<TAB>ner]]
// with a blank line after each utterance and an optional "# id = <id>"
// comment line before it. "_" stands for an absent pos when ner is present.
Corpus parse_conll(std::istream& in);
Corpus read_conll(const std::filesystem::path& path);
std::string to_conll(const Corpus& corpus);
void write_conll(const Corpus& corpus, const std::filesystem::path& path);

// One word per line, UTF-8. Blank lines are ignored.
Vocabulary read_vocabulary(const std::filesystem::path& path);

}  // namespace cslab

#endif  // CSLAB_CORPUS_H_
