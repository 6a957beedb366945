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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "aqa/unicode.hpp"

namespace aqa {

// A word token with code-point offsets into its source text.
struct Token {
  std::string text;  // UTF-8
  std::size_t char_start = 0;
  std::size_t char_end = 0;  // exclusive

  bool operator==(const Token&) const = default;
};

// en/fi: whitespace split, with every maximal run of punctuation split off
// as its own token. ja: one token per non-space character.
std::vector<Token> word_tokenize(std::u32string_view text, Language language);
std::vector<Token> word_tokenize(std::string_view utf8, Language language);

// Lookup form of a token: case-folded for en/fi, unchanged for ja.
std::string normalize_token(std::string_view utf8, Language language);

struct SubwordModel {
  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, int32_t> vocab;
  std::vector<std::pair<std::string, std::string>> merges;  // rank order
  std::map<std::pair<std::string, std::string>, std::size_t> merge_rank;
  std::vector<float> embeddings;  // V x dim, row-major, row = token id
  std::size_t dim = 0;
  int32_t unk_id = 0;

  std::size_t vocab_size() const { return id_to_token.size(); }
  std::span<const float> row(int32_t id) const {
    return {embeddings.data() + static_cast<std::size_t>(id) * dim, dim};
  }
};

inline constexpr std::size_t kPaperBpeVocabSize = 25000;
inline constexpr std::size_t kPaperBpeDim = 100;

// Vocab: one token per line (id = line index). Merges: "left right" per
// line, rank = order of appearance; blank lines and lines starting with '#'
// are skipped. Embeddings: word2vec text format with a "V E" header.
// Unknown symbols map to "<unk>" when the vocabulary has it, id 0 otherwise.
SubwordModel load_subword_model(const std::filesystem::path& vocab_path,
                                const std::filesystem::path& merges_path,
                                const std::filesystem::path& embeddings_path);

// Throws FormatError when the parts are inconsistent.
void validate_subword_model(const SubwordModel& model);

// Splits one already-normalized word into BPE symbols.
std::vector<std::string> apply_merges(std::u32string_view word,
                                      const SubwordModel& model);

std::vector<int32_t> subword_tokenize(std::string_view utf8,
                                      const SubwordModel& model,
                                      Language language = Language::kEn);

}  // namespace aqa
