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

#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace aqa {

enum class Language { kEn, kFi, kJa };

// Accepts both short tags ("fi") and the full names used by TyDiQA
// derivatives ("finnish"). Returns nullopt for any other language.
std::optional<Language> parse_language(std::string_view name);
std::string_view language_tag(Language language);

namespace unicode {

// Invalid UTF-8 sequences decode to U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view text);
std::string encode(char32_t c);

bool is_punct(char32_t c);  // general category P*
bool is_space(char32_t c);
char32_t fold(char32_t c);
std::u32string fold(std::u32string_view text);
std::string fold(std::string_view utf8);

}  // namespace unicode
}  // namespace aqa
