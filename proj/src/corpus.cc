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

#include "cslab/corpus.h"

#include <fstream>
#include <istream>
#include <sstream>

#include "cslab/error.h"
#include "cslab/unicode.h"

namespace cslab {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == 0x2019; }

std::string capitalize_first(std::string_view word) {
  std::u32string cps = unicode::decode(word);
  if (!cps.empty()) cps[0] = unicode::to_upper(cps[0]);
  return unicode::encode(cps);
}

}  // namespace

std::string_view to_string(LangTag tag) {
  switch (tag) {
    case LangTag::kL1:
      return "L1";
    case LangTag::kL2:
      return "L2";
    case LangTag::kOther:
      return "OTHER";
  }
  return "OTHER";
}

LangTag parse_lang_tag(std::string_view text) {
  if (text == "L1") return LangTag::kL1;
  if (text == "L2") return LangTag::kL2;
  if (text == "OTHER") return LangTag::kOther;
  throw DataError("unknown language tag '" + std::string(text) + "'");
}

bool is_valid_iob(std::string_view tag) {
  if (tag == "O") return true;
  return tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-';
}

void validate(const Token& token) {
  if (token.surface.empty()) throw ContractError("token surface is empty");
  if (token.ner && !is_valid_iob(*token.ner)) {
    throw ContractError("invalid IOB tag '" + *token.ner + "'");
  }
}

std::vector<std::string> Utterance::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.surface);
  return out;
}

Corpus::Corpus(std::vector<Utterance> utterances) {
  utterances_.reserve(utterances.size());
  for (Utterance& u : utterances) add(std::move(u));
}

void Corpus::add(Utterance utterance) {
  for (const Token& t : utterance.tokens) ++vocab_[t.surface];
  utterances_.push_back(std::move(utterance));
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const Utterance& u : utterances_) n += u.size();
  return n;
}

LangTag lang_by_script(std::string_view surface) {
  bool latin = false;
  for (char32_t cp : unicode::decode(surface)) {
    if (unicode::is_cjk(cp)) return LangTag::kL2;
    latin = latin || unicode::is_latin_letter(cp);
  }
  return latin ? LangTag::kL1 : LangTag::kOther;
}

Utterance tokenize(std::string_view text, const TokenizeOptions& options,
                   std::string id) {
  const std::u32string cps = unicode::decode(text);
  Utterance utt{std::move(id), {}};
  auto emit = [&](const std::u32string& piece) {
    if (piece.empty()) return;
    std::string surface = unicode::encode(piece);
    const LangTag lang = lang_by_script(surface);
    utt.tokens.push_back(Token{std::move(surface), lang, {}, {}});
  };
  // Splits a whitespace-delimited word into CJK characters and non-CJK runs.
  auto emit_word = [&](const std::u32string& word) {
    if (!options.cjk_split) {
      emit(word);
      return;
    }
    std::u32string run;
    for (char32_t cp : word) {
      if (unicode::is_cjk(cp)) {
        emit(run);
        run.clear();
        emit(std::u32string(1, cp));
      } else {
        run.push_back(cp);
      }
    }
    emit(run);
  };

  std::u32string word;
  for (char32_t cp : cps) {
    if (unicode::is_space(cp)) {
      emit_word(word);
      word.clear();
      continue;
    }
    if (options.strip_punctuation && unicode::is_punctuation(cp) &&
        !is_apostrophe(cp)) {
      continue;
    }
    word.push_back(cp);
  }
  emit_word(word);
  if (utt.tokens.empty()) throw DataError("empty utterance");
  return utt;
}

bool looks_like_url(std::string_view s) {
  auto starts = [&](std::string_view prefix) {
    if (s.size() <= prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      const char c = s[i];
      const char lower = (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c;
      if (lower != prefix[i]) return false;
    }
    return true;
  };
  return starts("http://") || starts("https://") || starts("www.");
}

Utterance replace_special(const Utterance& utterance) {
  Utterance out = utterance;
  for (Token& t : out.tokens) {
    if (t.surface.size() > 1 && (t.surface[0] == '@' || t.surface[0] == '#')) {
      t.surface = "USR";
      t.lang = LangTag::kOther;
    } else if (looks_like_url(t.surface)) {
      t.surface = "URL";
      t.lang = LangTag::kOther;
    }
  }
  return out;
}

std::string collapse_char_runs(std::string_view word) {
  const std::u32string cps = unicode::decode(word);
  std::u32string out;
  std::size_t i = 0;
  while (i < cps.size()) {
    std::size_t j = i;
    while (j < cps.size() && cps[j] == cps[i]) ++j;
    const std::size_t run = j - i;
    out.append(run >= 3 ? 1 : run, cps[i]);
    i = j;
  }
  return unicode::encode(out);
}

std::string collapse_unit_repeats(std::string_view word, std::size_t unit) {
  const std::u32string cps = unicode::decode(word);
  if (unit == 0) return std::string(word);
  std::u32string out;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (i + 2 * unit <= cps.size()) {
      std::size_t copies = 1;
      while (i + (copies + 1) * unit <= cps.size() &&
             cps.compare(i + copies * unit, unit, cps, i, unit) == 0) {
        ++copies;
      }
      if (copies >= 2) {
        out.append(cps, i, unit);
        i += copies * unit;
        continue;
      }
    }
    out.push_back(cps[i]);
    ++i;
  }
  return unicode::encode(out);
}

std::string normalize_oov(std::string_view word, const Vocabulary& vocab) {
  if (vocab.contains(word)) return std::string(word);
  auto in_vocab = [&](const std::string& w) { return vocab.contains(w); };

  const std::string capitalized = capitalize_first(word);
  if (in_vocab(capitalized)) return capitalized;
  const std::string lowered = unicode::to_lower(word);
  if (in_vocab(lowered)) return lowered;

  // Collapsed candidates: character runs first, then repeated 2-3 grams.
  auto collapsed_match = [&](const std::string& base,
                             bool capitalize) -> std::optional<std::string> {
    auto shape = [&](std::string s) {
      return capitalize ? capitalize_first(s) : s;
    };
    const std::string runs = collapse_char_runs(base);
    if (in_vocab(shape(runs))) return shape(runs);
    for (std::size_t unit : {2, 3}) {
      const std::string units = collapse_unit_repeats(runs, unit);
      if (in_vocab(shape(units))) return shape(units);
    }
    return std::nullopt;
  };
  if (auto m = collapsed_match(lowered, false)) return *m;
  if (auto m = collapsed_match(lowered, true)) return *m;
  return std::string(word);
}

double oov_rate(const Corpus& corpus, const Vocabulary& vocab, OovLevel level) {
  if (corpus.token_count() == 0) throw DataError("oov_rate on empty corpus");
  std::size_t total = 0;
  std::size_t missing = 0;
  for (const auto& [surface, count] : corpus.vocab()) {
    const std::size_t weight = level == OovLevel::kType ? 1 : count;
    total += weight;
    if (!vocab.contains(surface)) missing += weight;
  }
  return static_cast<double>(missing) / static_cast<double>(total);
}

Corpus parse_conll(std::istream& in) {
  Corpus corpus;
  Utterance current;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) corpus.add(std::move(current));
    current = Utterance{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.find('\t') == std::string::npos) {
      if (line.rfind("# id = ", 0) == 0 && current.tokens.empty()) {
        current.id = line.substr(7);
        continue;
      }
      if (line.rfind("# ", 0) == 0) continue;
      throw ParseError(line_no, "expected surface<TAB>lang");
    }
    const auto fields = split_tabs(line);
    if (fields.size() > 4) {
      throw ParseError(line_no, "expected at most 4 fields, got " +
                                    std::to_string(fields.size()));
    }
    Token token;
    token.surface = std::string(fields[0]);
    if (token.surface.empty()) throw ParseError(line_no, "empty surface");
    try {
      unicode::decode(token.surface);
      token.lang = parse_lang_tag(fields[1]);
    } catch (const DataError& e) {
      throw ParseError(line_no, e.what());
    }
    if (fields.size() >= 3 && fields[2] != "_" && !fields[2].empty()) {
      token.pos = std::string(fields[2]);
    }
    if (fields.size() == 4) {
      if (!is_valid_iob(fields[3])) {
        throw ParseError(line_no,
                         "invalid IOB tag '" + std::string(fields[3]) + "'");
      }
      token.ner = std::string(fields[3]);
    }
    current.tokens.push_back(std::move(token));
  }
  flush();
  return corpus;
}

Corpus read_conll(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return parse_conll(in);
}

std::string to_conll(const Corpus& corpus) {
  std::ostringstream out;
  for (const Utterance& u : corpus.utterances()) {
    if (!u.id.empty()) out << "# id = " << u.id << '\n';
    for (const Token& t : u.tokens) {
      if (t.surface.find_first_of("\t\n") != std::string::npos) {
        throw ContractError("surface contains tab or newline");
      }
      out << t.surface << '\t' << to_string(t.lang);
      if (t.pos || t.ner) out << '\t' << (t.pos ? *t.pos : "_");
      if (t.ner) out << '\t' << *t.ner;
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

void write_conll(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_conll(corpus);
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) vocab.insert(line);
  }
  return vocab;
}

}  // namespace cslab
