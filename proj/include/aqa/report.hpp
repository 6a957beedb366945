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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "aqa/corpus.hpp"
#include "aqa/unicode.hpp"

namespace aqa {

// Seeded draw of n distinct indices from [0, population), returned in
// ascending order. n is clamped to the population with a warning.
std::vector<std::size_t> draw_samples(std::size_t population, std::size_t n,
                                      uint64_t seed);

struct SamplePrediction {
  bool answerable = false;
  std::optional<std::string> answer_text;  // nullopt = no span
};

using SamplePredictor = std::function<SamplePrediction(const QASample&)>;

struct CrosslingualRow {
  Language train = Language::kEn;
  Language eval = Language::kEn;
  std::size_t n = 0;
  double accuracy = 0;     // answerability
  double squad_f1 = 0;     // extraction, mean over samples
  double squad_exact = 0;
};

struct CrosslingualReport {
  std::vector<CrosslingualRow> rows;
  uint64_t seed = 0;

  std::string to_text() const;
  nlohmann::json to_json() const;
};

struct EvalLanguage {
  Language language = Language::kEn;
  std::vector<QASample> samples;
  SamplePredictor predict;
};

CrosslingualReport crosslingual_report(Language train,
                                       std::span<const EvalLanguage> evals,
                                       std::size_t n, uint64_t seed);

}  // namespace aqa
