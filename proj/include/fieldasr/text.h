// fieldasr/text.h
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

#ifndef FIELDASR_TEXT_H_
#define FIELDASR_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace fieldasr::text {

// Unicode helpers over UTF-8 strings, backed by ICU.

std::string nfc(std::string_view utf8);

// Extended grapheme clusters of the NFC form of `utf8`.
std::vector<std::string> graphemes(std::string_view utf8);

std::vector<char32_t> code_points(std::string_view utf8);
std::string to_utf8(char32_t cp);

bool contains_digit(std::string_view utf8);
bool contains_cyrillic(std::string_view utf8);
// True when every code point is punctuation or white space (and there is at
// least one).
bool is_punctuation_only(std::string_view utf8);

// Replaces each listed code point with an ASCII space.
std::string map_to_space(std::string_view utf8,
                         const std::vector<char32_t> &code_points);

// Any run of white space becomes one ASCII space; leading/trailing removed.
std::string collapse_whitespace(std::string_view utf8);

std::string to_lower(std::string_view utf8);

std::vector<std::string> split_words(std::string_view utf8);

}  // namespace fieldasr::text

#endif  // FIELDASR_TEXT_H_
