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

#include "aqa/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/fmt/fmt.h>

#include "aqa/error.hpp"
#include "aqa/unicode.hpp"

namespace aqa {

Attribution integrated_gradients(const ScalarFunction& fn,
                                 std::span<const double> x,
                                 std::span<const double> baseline,
                                 std::size_t m) {
  if (x.size() != baseline.size()) {
    throw ShapeError("input and baseline differ in dimension");
  }
  if (m < 1) throw PreconditionError("integrated gradients needs m >= 1");
  const std::size_t d = x.size();
  std::vector<double> point(d), grad(d), sum(d, 0.0), scratch(d);
  for (std::size_t k = 1; k <= m; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(m);
    for (std::size_t i = 0; i < d; ++i) {
      point[i] = baseline[i] + alpha * (x[i] - baseline[i]);
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    fn(point, grad);
    for (std::size_t i = 0; i < d; ++i) sum[i] += grad[i];
  }
  Attribution out;
  out.values.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.values[i] = (x[i] - baseline[i]) * sum[i] / static_cast<double>(m);
  }
  out.f_input = fn(x, scratch);
  out.f_baseline = fn(baseline, scratch);
  const double total = std::accumulate(out.values.begin(), out.values.end(), 0.0);
  out.completeness_gap = std::abs(total - (out.f_input - out.f_baseline));
  return out;
}

template <typename T>
ScalarFunction classifier_function(const BasicAnswerabilityModel<T>& model) {
  return [&model](std::span<const double> x, std::span<double> grad) {
    std::vector<T> xt(x.begin(), x.end());
    std::vector<T> g(x.size());
    const double p = proba_input_gradient<T>(model, xt, g);
    std::copy(g.begin(), g.end(), grad.begin());
    return p;
  };
}

template ScalarFunction classifier_function<float>(
    const BasicAnswerabilityModel<float>&);
template ScalarFunction classifier_function<double>(
    const BasicAnswerabilityModel<double>&);

std::vector<RankedFeature> salient_features(
    std::span<const std::vector<double>> attributions, const FeatureNamer& name,
    std::size_t top_n) {
  if (attributions.empty()) throw PreconditionError("empty attribution class");
  const std::size_t d = attributions.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& a : attributions) {
    if (a.size() != d) throw ShapeError("attribution lengths differ");
    for (std::size_t i = 0; i < d; ++i) mean[i] += a[i];
  }
  for (double& v : mean) v /= static_cast<double>(attributions.size());
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t keep = std::min(top_n, d);
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (mean[a] != mean[b]) return mean[a] > mean[b];
                      return a < b;
                    });
  std::vector<RankedFeature> out;
  for (std::size_t r = 0; r < keep; ++r) {
    const std::size_t i = order[r];
    out.push_back({i, name ? name(i) : std::to_string(i), mean[i]});
  }
  return out;
}

SubstitutionMap default_substitution() {
  return {{U'.', U"?"}, {U',', U"-"}};
}

namespace {

std::u32string substitute(std::u32string_view text,
                          const SubstitutionMap& mapping) {
  std::u32string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    auto it = mapping.find(c);
    if (it == mapping.end()) {
      out.push_back(c);
    } else {
      out += it->second;
    }
  }
  return out;
}

}  // namespace

std::string adversarial_substitute(std::string_view text,
                                   const SubstitutionMap& mapping) {
  if (mapping.empty()) return std::string(text);
  return unicode::encode(substitute(unicode::decode(text), mapping));
}

QASample perturb(const QASample& sample, const SubstitutionMap& mapping) {
  QASample out = sample;
  out.question_text = adversarial_substitute(sample.question_text, mapping);
  const std::u32string context = unicode::decode(sample.context_text);
  out.context_text = unicode::encode(substitute(context, mapping));
  if (sample.answer) {
    const std::u32string_view ctx(context);
    const std::u32string prefix =
        substitute(ctx.substr(0, sample.answer->start), mapping);
    const std::u32string span = substitute(
        ctx.substr(sample.answer->start, sample.answer->length), mapping);
    out.answer->start = prefix.size();
    out.answer->length = span.size();
    out.answer->text = unicode::encode(span);
  }
  return out;
}

nlohmann::json AttackReport::to_json() const {
  return {{"n", n},
          {"flip_count", flip_count},
          {"ids", ids},
          {"before", before},
          {"after", after},
          {"substitution_applies_to", {"question", "context"}}};
}

std::string AttackReport::histogram_csv() const {
  constexpr int kBins = 10;
  std::array<std::size_t, kBins> b{}, a{};
  auto bin = [](double p) {
    return std::clamp(static_cast<int>(p * kBins), 0, kBins - 1);
  };
  for (double p : before) ++b[bin(p)];
  for (double p : after) ++a[bin(p)];
  std::string out = "bin_start,bin_end,before,after\n";
  for (int i = 0; i < kBins; ++i) {
    out += fmt::format("{:.1f},{:.1f},{},{}\n", i / 10.0, (i + 1) / 10.0, b[i],
                       a[i]);
  }
  return out;
}

AttackReport attack_report(const AnswerabilityModel& model,
                           const SampleFeaturizer& featurize,
                           std::span<const QASample> samples,
                           const SubstitutionMap& mapping) {
  AttackReport report;
  report.n = samples.size();
  for (const QASample& sample : samples) {
    const double before = predict_proba(model, featurize(sample));
    if (before < 0.5) {
      throw PreconditionError("sample '" + sample.id +
                              "' is not predicted answerable (p = " +
                              std::to_string(before) + ")");
    }
    const double after = predict_proba(model, featurize(perturb(sample, mapping)));
    report.ids.push_back(sample.id);
    report.before.push_back(before);
    report.after.push_back(after);
    report.flip_count += after < 0.5;
  }
  return report;
}

}  // namespace aqa
