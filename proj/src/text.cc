// text.cc
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

#include "fieldasr/text.h"

#include <memory>

#include <unicode/brkiter.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "fieldasr/common.h"

namespace fieldasr::text {

namespace {

icu::UnicodeString from_utf8(std::string_view utf8) {
  return icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
}

std::string to_std(const icu::UnicodeString &s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

template <typename Pred>
bool any_code_point(std::string_view utf8, Pred pred) {
  for (char32_t cp : code_points(utf8)) {
    if (pred(static_cast<UChar32>(cp))) return true;
  }
  return false;
}

}  // namespace

std::string nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2 *norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw UsageError("ICU NFC normalizer unavailable");
  icu::UnicodeString out = norm->normalize(from_utf8(utf8), status);
  if (U_FAILURE(status)) throw FormatError("NFC normalization failed");
  return to_std(out);
}

std::vector<std::string> graphemes(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::UnicodeString str = from_utf8(nfc(utf8));
  std::unique_ptr<icu::BreakIterator> it(
      icu::BreakIterator::createCharacterInstance(icu::Locale::getRoot(),
                                                  status));
  if (U_FAILURE(status)) throw UsageError("ICU break iterator unavailable");
  it->setText(str);
  std::vector<std::string> out;
  int32_t start = it->first();
  for (int32_t end = it->next(); end != icu::BreakIterator::DONE;
       start = end, end = it->next()) {
    out.push_back(to_std(str.tempSubStringBetween(start, end)));
  }
  return out;
}

std::vector<char32_t> code_points(std::string_view utf8) {
  std::vector<char32_t> out;
  out.reserve(utf8.size());
  const auto *s = reinterpret_cast<const uint8_t *>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? char32_t(0xFFFD) : char32_t(c));
  }
  return out;
}

std::string to_utf8(char32_t cp) {
  return to_std(icu::UnicodeString(static_cast<UChar32>(cp)));
}

bool contains_digit(std::string_view utf8) {
  return any_code_point(utf8, [](UChar32 c) { return u_isdigit(c) != 0; });
}

bool contains_cyrillic(std::string_view utf8) {
  return any_code_point(utf8, [](UChar32 c) {
    UErrorCode status = U_ZERO_ERROR;
    return uscript_getScript(c, &status) == USCRIPT_CYRILLIC;
  });
}

bool is_punctuation_only(std::string_view utf8) {
  const auto cps = code_points(utf8);
  if (cps.empty()) return false;
  for (char32_t cp : cps) {
    const auto c = static_cast<UChar32>(cp);
    if (!u_ispunct(c) && !u_isUWhiteSpace(c)) return false;
  }
  return true;
}

std::string map_to_space(std::string_view utf8,
                         const std::vector<char32_t> &targets) {
  std::string out;
  out.reserve(utf8.size());
  for (char32_t cp : code_points(utf8)) {
    bool hit = false;
    for (char32_t t : targets) hit = hit || (t == cp);
    out += hit ? std::string(" ") : to_utf8(cp);
  }
  return out;
}

std::string collapse_whitespace(std::string_view utf8) {
  std::string out;
  bool pending_space = false;
  for (char32_t cp : code_points(utf8)) {
    if (u_isUWhiteSpace(static_cast<UChar32>(cp))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += to_utf8(cp);
  }
  return out;
}

std::string to_lower(std::string_view utf8) {
  icu::UnicodeString s = from_utf8(utf8);
  s.toLower(icu::Locale::getRoot());
  return to_std(s);
}

std::vector<std::string> split_words(std::string_view utf8) {
  std::vector<std::string> words;
  std::string current;
  for (char c : utf8) {
    if (c == ' ') {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

}  // namespace fieldasr::text
