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

#include "aqa/report.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <spdlog/fmt/fmt.h>

#include "aqa/error.hpp"
#include "aqa/evaluate.hpp"
#include "aqa/log.hpp"

namespace aqa {

std::vector<std::size_t> draw_samples(std::size_t population, std::size_t n,
                                      uint64_t seed) {
  if (n > population) {
    logger().warn("requested {} samples from {}; using all of them", n,
                  population);
    n = population;
  }
  std::vector<std::size_t> all(population);
  std::iota(all.begin(), all.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(n);
  std::sort(all.begin(), all.end());
  return all;
}

CrosslingualReport crosslingual_report(Language train,
                                       std::span<const EvalLanguage> evals,
                                       std::size_t n, uint64_t seed) {
  CrosslingualReport report;
  report.seed = seed;
  for (const EvalLanguage& eval : evals) {
    if (!eval.predict) {
      throw PreconditionError("no predictor for " +
                              std::string(language_tag(eval.language)));
    }
    const std::vector<std::size_t> picked =
        draw_samples(eval.samples.size(), n, seed);
    CrosslingualRow row{train, eval.language, picked.size()};
    if (picked.empty()) {
      report.rows.push_back(row);
      continue;
    }
    std::size_t correct = 0;
    double f1 = 0, exact = 0;
    for (std::size_t i : picked) {
      const QASample& sample = eval.samples[i];
      const SamplePrediction p = eval.predict(sample);
      correct += p.answerable == sample.answerable();
      std::optional<std::string> gold;
      if (sample.answer) gold = sample.answer->text;
      const SquadScore s = squad_v2(p.answer_text, gold, eval.language);
      f1 += s.f1;
      exact += s.exact;
    }
    const double count = static_cast<double>(picked.size());
    row.accuracy = static_cast<double>(correct) / count;
    row.squad_f1 = f1 / count;
    row.squad_exact = exact / count;
    report.rows.push_back(row);
  }
  return report;
}

std::string CrosslingualReport::to_text() const {
  std::string out = fmt::format("{:<6}{:<6}{:>6}{:>10}{:>10}{:>10}\n", "train",
                                "eval", "n", "acc[%]", "F1[%]", "EM[%]");
  for (const CrosslingualRow& r : rows) {
    out += fmt::format("{:<6}{:<6}{:>6}{:>10.1f}{:>10.1f}{:>10.1f}\n",
                       language_tag(r.train), language_tag(r.eval), r.n,
                       100 * r.accuracy, 100 * r.squad_f1, 100 * r.squad_exact);
  }
  return out;
}

nlohmann::json CrosslingualReport::to_json() const {
  nlohmann::json out = {{"seed", seed}, {"rows", nlohmann::json::array()}};
  for (const CrosslingualRow& r : rows) {
    out["rows"].push_back({{"train", language_tag(r.train)},
                           {"eval", language_tag(r.eval)},
                           {"n", r.n},
                           {"accuracy", r.accuracy},
                           {"squad_f1", r.squad_f1},
                           {"squad_exact", r.squad_exact}});
  }
  return out;
}

}  // namespace aqa
