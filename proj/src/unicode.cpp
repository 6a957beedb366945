/*
 * Copyright 2026 The AQA Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "aqa/unicode.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cstdint>

namespace aqa {

std::optional<Language> parse_language(std::string_view name) {
  if (name == "en" || name == "english") return Language::kEn;
  if (name == "fi" || name == "finnish") return Language::kFi;
  if (name == "ja" || name == "japanese") return Language::kJa;
  return std::nullopt;
}

std::string_view language_tag(Language language) {
  switch (language) {
    case Language::kEn:
      return "en";
    case Language::kFi:
      return "fi";
    case Language::kJa:
      return "ja";
  }
  return "??";
}

namespace unicode {

std::u32string decode(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(utf8.data());
  const int32_t length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

std::string encode(char32_t c) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t n = 0;
  UBool error = false;
  U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
  if (error) return "\xEF\xBF\xBD";
  return std::string(reinterpret_cast<const char*>(buf), n);
}

std::string encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) out += encode(c);
  return out;
}

bool is_punct(char32_t c) { return u_ispunct(static_cast<UChar32>(c)); }

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

char32_t fold(char32_t c) {
  return static_cast<char32_t>(
      u_foldCase(static_cast<UChar32>(c), U_FOLD_CASE_DEFAULT));
}

std::u32string fold(std::u32string_view text) {
  std::u32string out(text);
  for (char32_t& c : out) c = fold(c);
  return out;
}

std::string fold(std::string_view utf8) { return encode(fold(decode(utf8))); }

}  // namespace unicode
}  // namespace aqa
