// tests/test_text.cc
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

#include "doctest.h"

#include "fieldasr/text.h"

using namespace fieldasr;

TEST_CASE("NFC composes combining marks") {
  CHECK(text::nfc("di\xCC\x84") == "d\xC4\xAB");
  CHECK(text::graphemes("di\xCC\x84").size() == 2);
  const auto g = text::graphemes("po\xCA\x94to");
  CHECK(g.size() == 5);
  CHECK(g[2] == "\xCA\x94");
}

TEST_CASE("character classes") {
  CHECK(text::contains_digit("3 po"));
  CHECK_FALSE(text::contains_digit("po"));
  CHECK(text::contains_cyrillic("\xD0\xBE\xD0\xBD"));
  CHECK_FALSE(text::contains_cyrillic("on"));
  CHECK(text::is_punctuation_only("..."));
  CHECK(text::is_punctuation_only("?! ,"));
  CHECK_FALSE(text::is_punctuation_only(""));
  CHECK_FALSE(text::is_punctuation_only("a."));
}

TEST_CASE("whitespace helpers") {
  CHECK(text::collapse_whitespace("  a \t b  ") == "a b");
  CHECK(text::map_to_space("a\xC2\xA0" "b", {0x00A0}) == "a b");
  CHECK(text::to_lower("CouGH") == "cough");
  const auto w = text::split_words("ej ku  pi");
  REQUIRE(w.size() == 3);
  CHECK(w[2] == "pi");
  CHECK(text::code_points("a\xC4\xAB") == std::vector<char32_t>{U'a', U'ī'});
  CHECK(text::to_utf8(U'ī') == "\xC4\xAB");
}
