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

#ifndef CSLAB_UNICODE_H_
#define CSLAB_UNICODE_H_

#include <string>
#include <string_view>
#include <vector>

namespace cslab::unicode {

// Decodes UTF-8 into code points. Throws DataError on malformed input.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view cps);
std::string encode(char32_t cp);

// Splits text into one string per code point.
std::vector<std::string> characters(std::string_view text);

bool is_space(char32_t cp);
// Han ideographs, kana and Hangul syllables.
bool is_cjk(char32_t cp);
bool is_latin_letter(char32_t cp);
bool is_punctuation(char32_t cp);

// Case mapping covers ASCII and the Latin-1 supplement.
char32_t to_lower(char32_t cp);
char32_t to_upper(char32_t cp);
std::string to_lower(std::string_view text);

}  // namespace cslab::unicode

#endif  // CSLAB_UNICODE_H_
