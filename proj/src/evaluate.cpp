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

#include "aqa/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "aqa/error.hpp"

namespace aqa {

double accuracy(std::span<const int> predictions, std::span<const int> golds) {
  if (predictions.size() != golds.size()) {
    throw ShapeError("prediction and gold counts differ");
  }
  if (golds.empty()) throw PreconditionError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) hits += predictions[i] == golds[i];
  return static_cast<double>(hits) / static_cast<double>(golds.size());
}

PrCurve pr_curve(std::span<const double> scores, std::span<const int> golds) {
  if (scores.size() != golds.size()) throw ShapeError("score/gold count differ");
  const auto positives = static_cast<std::size_t>(
      std::count_if(golds.begin(), golds.end(), [](int g) { return g != 0; }));
  if (positives == 0) throw PreconditionError("PR curve needs a positive gold");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  PrCurve curve;
  std::size_t tp = 0, predicted = 0;
  double prev_recall = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      tp += golds[order[i]] != 0;
      ++predicted;
      ++i;
    }
    const double precision =
        predicted == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(predicted);
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    curve.average_precision += (recall - prev_recall) * precision;
    prev_recall = recall;
    curve.points.push_back({threshold, precision, recall});
  }
  std::reverse(curve.points.begin(), curve.points.end());
  return curve;
}

std::string PrCurve::to_csv() const {
  std::ostringstream out;
  out << "threshold,precision,recall\n" << std::setprecision(17);
  for (const PrPoint& p : points) {
    out << p.threshold << ',' << p.precision << ',' << p.recall << '\n';
  }
  return out.str();
}

nlohmann::json PrCurve::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const PrPoint& p : points) {
    pts.push_back({{"threshold", p.threshold},
                   {"precision", p.precision},
                   {"recall", p.recall}});
  }
  return {{"average_precision", average_precision}, {"points", pts}};
}

std::size_t ConfusionMatrix3::total() const {
  std::size_t sum = 0;
  for (const auto& row : counts) sum += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return sum;
}

nlohmann::json ConfusionMatrix3::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : counts) rows.push_back(row);
  return {{"labels", {"O", "B", "I"}}, {"gold_by_predicted", rows}};
}

ConfusionMatrix3 confusion(std::span<const IobLabel> gold,
                           std::span<const IobLabel> predicted) {
  if (gold.size() != predicted.size()) {
    throw ShapeError("gold and predicted label sequences differ in length");
  }
  ConfusionMatrix3 m;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    ++m.counts[index_of(gold[t])][index_of(predicted[t])];
  }
  return m;
}

TokenF1 token_f1(const ConfusionMatrix3& m) {
  TokenF1 out;
  double sum = 0;
  std::size_t included = 0;
  for (int l = 0; l < kNumIobLabels; ++l) {
    const double tp = static_cast<double>(m.counts[l][l]);
    double fp = 0, fn = 0;
    for (int o = 0; o < kNumIobLabels; ++o) {
      if (o == l) continue;
      fp += static_cast<double>(m.counts[o][l]);
      fn += static_cast<double>(m.counts[l][o]);
    }
    out.included[l] = tp + fp + fn > 0;
    if (!out.included[l]) continue;
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    out.per_label[l] = precision + recall > 0
                           ? 2 * precision * recall / (precision + recall)
                           : 0.0;
    sum += out.per_label[l];
    ++included;
  }
  out.macro = included > 0 ? sum / static_cast<double>(included) : 0.0;
  return out;
}

TokenF1 token_f1(std::span<const IobLabel> gold,
                 std::span<const IobLabel> predicted) {
  return token_f1(confusion(gold, predicted));
}

nlohmann::json TokenF1::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  const char* names[] = {"O", "B", "I"};
  for (int l = 0; l < kNumIobLabels; ++l) {
    per[names[l]] = included[l] ? nlohmann::json(per_label[l]) : nlohmann::json();
  }
  return {{"macro", macro}, {"per_label", per}};
}

std::string squad_normalize(std::string_view text, Language language) {
  std::u32string folded = unicode::fold(unicode::decode(text));
  std::erase_if(folded, unicode::is_punct);
  std::vector<std::u32string> words;
  std::u32string current;
  for (char32_t c : folded) {
    if (unicode::is_space(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  if (language == Language::kEn) {
    std::erase_if(words, [](const std::u32string& w) {
      return w == U"a" || w == U"an" || w == U"the";
    });
  }
  std::u32string joined;
  for (const auto& w : words) {
    if (!joined.empty()) joined.push_back(U' ');
    joined += w;
  }
  return unicode::encode(joined);
}

std::vector<std::string> squad_tokens(std::string_view text, Language language) {
  const std::string normalized = squad_normalize(text, language);
  std::vector<std::string> tokens;
  if (language == Language::kJa) {
    for (char32_t c : unicode::decode(normalized)) {
      if (!unicode::is_space(c)) tokens.push_back(unicode::encode(c));
    }
    return tokens;
  }
  std::istringstream words(normalized);
  std::string w;
  while (words >> w) tokens.push_back(w);
  return tokens;
}

SquadScore squad_v2(const std::optional<std::string>& predicted,
                    const std::optional<std::string>& gold, Language language) {
  if (!predicted && !gold) return {1.0, 1.0};
  if (!predicted || !gold) return {0.0, 0.0};
  SquadScore score;
  score.exact = squad_normalize(*predicted, language) ==
                        squad_normalize(*gold, language)
                    ? 1.0
                    : 0.0;
  const auto pred_tokens = squad_tokens(*predicted, language);
  const auto gold_tokens = squad_tokens(*gold, language);
  if (pred_tokens.empty() || gold_tokens.empty()) {
    score.f1 = pred_tokens == gold_tokens ? 1.0 : 0.0;
    return score;
  }
  std::map<std::string, int> counts;
  for (const auto& t : gold_tokens) ++counts[t];
  std::size_t common = 0;
  for (const auto& t : pred_tokens) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return score;
  const double precision = static_cast<double>(common) / pred_tokens.size();
  const double recall = static_cast<double>(common) / gold_tokens.size();
  score.f1 = 2 * precision * recall / (precision + recall);
  return score;
}

double perplexity(std::span<const double> token_nll) {
  if (token_nll.empty()) throw PreconditionError("perplexity of no tokens");
  double sum = 0;
  for (double nll : token_nll) {
    if (!std::isfinite(nll) || nll < 0) {
      throw PreconditionError("token NLLs must be finite and non-negative");
    }
    sum += nll;
  }
  return std::exp(sum / static_cast<double>(token_nll.size()));
}

std::vector<NllRecord> parse_nll_jsonl(std::string_view jsonl) {
  std::vector<NllRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    NllRecord rec;
    try {
      const nlohmann::json row = nlohmann::json::parse(line);
      rec.id = row.at("id").get<std::string>();
      rec.target = row.at("target").get<std::string>();
      rec.nlls = row.at("nlls").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    if (rec.target != "questions" && rec.target != "documents") {
      throw ParseError(line_no, "unknown target '" + rec.target + "'");
    }
    for (double v : rec.nlls) {
      if (!std::isfinite(v) || v < 0) {
        throw ParseError(line_no, "NLL values must be finite and non-negative");
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<NllRecord> load_nll_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_nll_jsonl(buffer.str());
}

std::vector<PerplexityRow> perplexity_by_target(std::span<const NllRecord> records) {
  std::map<std::string, std::pair<std::size_t, std::vector<double>>> pooled;
  for (const NllRecord& rec : records) {
    auto& [texts, nlls] = pooled[rec.target];
    ++texts;
    nlls.insert(nlls.end(), rec.nlls.begin(), rec.nlls.end());
  }
  std::vector<PerplexityRow> rows;
  for (const auto& [target, entry] : pooled) {
    if (entry.second.empty()) continue;
    rows.push_back({target, entry.first, entry.second.size(), perplexity(entry.second)});
  }
  return rows;
}

}  // namespace aqa
