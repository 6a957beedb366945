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

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "aqa/iob.hpp"
#include "aqa/unicode.hpp"

namespace aqa {

double accuracy(std::span<const int> predictions, std::span<const int> golds);

struct PrPoint {
  double threshold = 0;
  double precision = 0;
  double recall = 0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // ascending threshold
  double average_precision = 0;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// One point per distinct score, predicting positive for score >= threshold.
// AP = sum_n (R_n - R_{n-1}) P_n over the descending threshold sweep.
PrCurve pr_curve(std::span<const double> scores, std::span<const int> golds);

// counts[gold][predicted] over {O, B, I}.
struct ConfusionMatrix3 {
  std::array<std::array<std::size_t, 3>, 3> counts{};

  std::size_t total() const;
  nlohmann::json to_json() const;
};

ConfusionMatrix3 confusion(std::span<const IobLabel> gold,
                           std::span<const IobLabel> predicted);

struct TokenF1 {
  std::array<double, 3> per_label{};
  std::array<bool, 3> included{};  // label occurs in gold or prediction
  double macro = 0;                // mean over included labels

  nlohmann::json to_json() const;
};

TokenF1 token_f1(const ConfusionMatrix3& matrix);
TokenF1 token_f1(std::span<const IobLabel> gold,
                 std::span<const IobLabel> predicted);

struct SquadScore {
  double f1 = 0;
  double exact = 0;
};

// Case-folded, punctuation stripped, English articles dropped, whitespace
// collapsed.
std::string squad_normalize(std::string_view text, Language language);
std::vector<std::string> squad_tokens(std::string_view text, Language language);

// nullopt stands for "unanswerable".
SquadScore squad_v2(const std::optional<std::string>& predicted,
                    const std::optional<std::string>& gold, Language language);

double perplexity(std::span<const double> token_nll);

// One row of the encoder exporter's NLL output:
// {"id": ..., "target": "questions"|"documents", "nlls": [...]}.
struct NllRecord {
  std::string id;
  std::string target;
  std::vector<double> nlls;
};

// Throws ParseError (1-based line) on malformed rows, unknown targets and
// negative or non-finite NLLs. Blank lines are skipped.
std::vector<NllRecord> parse_nll_jsonl(std::string_view jsonl);
std::vector<NllRecord> load_nll_jsonl(const std::filesystem::path& path);

struct PerplexityRow {
  std::string target;
  std::size_t texts = 0;
  std::size_t tokens = 0;
  double ppl = 0;  // over all tokens of the target pooled
};

// One row per target with at least one token, ordered by target name.
std::vector<PerplexityRow> perplexity_by_target(std::span<const NllRecord> records);

}  // namespace aqa
