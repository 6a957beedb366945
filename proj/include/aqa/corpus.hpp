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
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aqa/iob.hpp"
#include "aqa/tokenization.hpp"
#include "aqa/unicode.hpp"

namespace aqa {

struct Answer {
  std::string text;         // UTF-8
  std::size_t start = 0;    // code-point index into the context
  std::size_t length = 0;   // in code points

  std::size_t end() const { return start + length; }
  bool operator==(const Answer&) const = default;
};

struct QASample {
  std::string id;
  Language language = Language::kEn;
  std::string question_text;
  std::string context_text;
  std::optional<Answer> answer;

  bool answerable() const { return answer.has_value(); }
  bool operator==(const QASample&) const = default;
};

enum class Strictness { kSkipWithWarning, kAbort };

// One JSON object per line: id, language, question_text, document_plaintext,
// annotations [{answer_text, answer_start}], answer_start = -1 meaning no
// answer. The first annotation with answer_start >= 0 wins. Samples in other
// languages are dropped; input order is kept.
std::vector<QASample> load_dataset(const std::filesystem::path& path,
                                   const std::set<Language>& languages,
                                   Strictness strictness =
                                       Strictness::kSkipWithWarning);

// Same as load_dataset but over an in-memory JSONL buffer.
std::vector<QASample> parse_dataset(std::string_view jsonl,
                                    const std::set<Language>& languages,
                                    Strictness strictness =
                                        Strictness::kSkipWithWarning);

// Checks the answer offset invariants; throws ValidationError.
void validate_sample(const QASample& sample);

// Tokens overlapping the answer range get B (first) then I; all else O.
std::vector<IobLabel> derive_gold_iob(const QASample& sample,
                                      std::span<const Token> tokens);

enum class Split { kTrain, kValidation };

struct CorpusStats {
  Language language = Language::kEn;
  Split split = Split::kTrain;
  std::size_t n_samples = 0;
  std::size_t n_answerable = 0;
  std::map<std::string, std::size_t> first_token_freq;
  std::map<std::string, std::size_t> last_token_freq;
};

CorpusStats token_position_stats(std::span<const QASample> samples,
                                 Language language, Split split);

// Token maps are emitted as [[token, count], ...] sorted by descending
// count, then token.
std::string stats_to_json(const CorpusStats& stats, int indent = 2);

std::vector<std::pair<std::string, std::size_t>> sorted_frequencies(
    const std::map<std::string, std::size_t>& freq);

}  // namespace aqa
