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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "aqa/answerability.hpp"
#include "aqa/corpus.hpp"
#include "aqa/features.hpp"
#include "aqa/neural.hpp"

namespace aqa {

inline constexpr std::size_t kDefaultIgSteps = 256;

struct Attribution {
  std::string sample_id;
  std::vector<double> values;  // one per input dimension
  double f_input = 0;
  double f_baseline = 0;
  double completeness_gap = 0;  // |sum(values) - (F(x) - F(baseline))|
};

// Right-endpoint Riemann sum of the path integral from `baseline` to `x`
// using m points at k/m, k = 1..m.
Attribution integrated_gradients(const ScalarFunction& fn,
                                 std::span<const double> x,
                                 std::span<const double> baseline,
                                 std::size_t m = kDefaultIgSteps);

// F(x) = answerable probability with its exact input gradient.
template <typename T>
ScalarFunction classifier_function(const BasicAnswerabilityModel<T>& model);

struct RankedFeature {
  std::size_t index = 0;
  std::string name;
  double value = 0;
};

using FeatureNamer = std::function<std::string(std::size_t)>;

// Mean attribution per dimension over one class, top_n by descending mean,
// ties by ascending index.
std::vector<RankedFeature> salient_features(
    std::span<const std::vector<double>> attributions, const FeatureNamer& name,
    std::size_t top_n);

using SubstitutionMap = std::map<char32_t, std::u32string>;

SubstitutionMap default_substitution();  // '.' -> '?', ',' -> '-'

std::string adversarial_substitute(std::string_view text,
                                   const SubstitutionMap& mapping);

// Substitutes question and context; the answer offsets follow the context.
QASample perturb(const QASample& sample, const SubstitutionMap& mapping);

struct AttackReport {
  std::vector<std::string> ids;
  std::vector<double> before;
  std::vector<double> after;
  std::size_t flip_count = 0;  // after < 0.5
  std::size_t n = 0;

  nlohmann::json to_json() const;
  // bin_start,bin_end,before,after over 10 equal confidence bins.
  std::string histogram_csv() const;
};

using SampleFeaturizer = std::function<FeatureVector(const QASample&)>;

// Every sample must be predicted answerable (p >= 0.5) before the attack;
// otherwise PreconditionError naming the sample.
AttackReport attack_report(const AnswerabilityModel& model,
                           const SampleFeaturizer& featurize,
                           std::span<const QASample> samples,
                           const SubstitutionMap& mapping);

}  // namespace aqa
