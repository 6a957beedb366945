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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aqa/iob.hpp"
#include "aqa/matrix.hpp"
#include "aqa/tokenization.hpp"

namespace aqa {

// Label-sequence rules enforced during decoding; each one is independent.
struct LegalityConfig {
  bool no_leading_inside = false;        // (a) no I at position 0
  bool no_inside_after_outside = false;  // (b) no I right after O
  bool single_begin = false;             // (c) at most one B

  // "a,b,c" style list; empty string or "none" disables everything.
  static LegalityConfig parse(std::string_view list);
  std::string to_string() const;
  bool any() const {
    return no_leading_inside || no_inside_after_outside || single_begin;
  }
};

bool is_legal(std::span<const IobLabel> labels, const LegalityConfig& rules);

struct Decoded {
  std::vector<IobLabel> labels;
  double score = 0;  // sum of the chosen labels' log-probabilities
};

// Beam search over T x 3 label log-probabilities keeping the k best legal
// prefixes per step. Prefixes the enabled rules cannot tell apart are
// recombined (only the best survives), so k >= 4 is exact. Equal scores are
// ordered by the label sequences compared position by position with
// O < B < I, so k = 1 without rules is the per-token argmax.
Decoded decode(const Matrix<double>& logprobs, std::size_t k,
               const LegalityConfig& rules = {});

struct AnswerSpan {
  std::size_t token_start = 0;
  std::size_t token_end = 0;  // inclusive
  std::size_t char_start = 0;
  std::size_t char_end = 0;  // exclusive
  std::string text;
  double score = 0;  // mean log-probability of the span's labels

  bool operator==(const AnswerSpan&) const = default;
};

// Every B opens a span that runs through the following I labels; any other
// label closes it and I runs without a B are ignored. Tokens before
// `first_candidate` (question tokens) never open a span.
std::vector<AnswerSpan> extract_spans(std::span<const IobLabel> labels,
                                      const Matrix<double>& logprobs,
                                      std::span<const Token> tokens,
                                      std::u32string_view context,
                                      std::size_t first_candidate = 0);

}  // namespace aqa
