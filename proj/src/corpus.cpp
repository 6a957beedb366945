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

#include "aqa/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "aqa/error.hpp"
#include "aqa/log.hpp"

namespace aqa {

using nlohmann::json;

namespace {

QASample sample_from_json(const json& obj, Language language) {
  QASample sample;
  sample.id = obj.at("id").get<std::string>();
  sample.language = language;
  sample.question_text = obj.at("question_text").get<std::string>();
  sample.context_text = obj.at("document_plaintext").get<std::string>();
  for (const json& annotation : obj.at("annotations")) {
    const auto start = annotation.at("answer_start").get<int64_t>();
    if (start < 0) continue;
    Answer answer;
    answer.text = annotation.at("answer_text").get<std::string>();
    answer.start = static_cast<std::size_t>(start);
    answer.length = unicode::decode(answer.text).size();
    sample.answer = std::move(answer);
    break;
  }
  return sample;
}

}  // namespace

void validate_sample(const QASample& sample) {
  if (!sample.answer) return;
  const std::u32string context = unicode::decode(sample.context_text);
  const Answer& answer = *sample.answer;
  if (answer.end() > context.size()) {
    throw ValidationError(sample.id, "answer range [" +
                                         std::to_string(answer.start) + "," +
                                         std::to_string(answer.end()) +
                                         ") exceeds context length " +
                                         std::to_string(context.size()));
  }
  if (unicode::encode(std::u32string_view(context).substr(
          answer.start, answer.length)) != answer.text) {
    throw ValidationError(sample.id,
                          "context slice does not match answer_text");
  }
}

std::vector<QASample> parse_dataset(std::string_view jsonl,
                                    const std::set<Language>& languages,
                                    Strictness strictness) {
  std::vector<QASample> samples;
  std::size_t line_no = 0;
  std::size_t skipped = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t eol = jsonl.find('\n', pos);
    if (eol == std::string_view::npos) eol = jsonl.size();
    std::string_view line = jsonl.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    QASample sample;
    try {
      const json obj = json::parse(line);
      const auto language =
          parse_language(obj.at("language").get<std::string>());
      if (!language || !languages.contains(*language)) continue;
      sample = sample_from_json(obj, *language);
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    try {
      validate_sample(sample);
    } catch (const ValidationError& e) {
      if (strictness == Strictness::kAbort) throw;
      logger().warn("skipping line {}: {}", line_no, e.what());
      ++skipped;
      continue;
    }
    samples.push_back(std::move(sample));
  }
  if (skipped > 0) logger().warn("skipped {} misaligned samples", skipped);
  return samples;
}

std::vector<QASample> load_dataset(const std::filesystem::path& path,
                                   const std::set<Language>& languages,
                                   Strictness strictness) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read dataset " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), languages, strictness);
}

std::vector<IobLabel> derive_gold_iob(const QASample& sample,
                                      std::span<const Token> tokens) {
  std::vector<IobLabel> labels(tokens.size(), IobLabel::kO);
  if (!sample.answer) return labels;
  const std::size_t lo = sample.answer->start;
  const std::size_t hi = sample.answer->end();
  bool inside = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool overlaps = tokens[i].char_start < hi && lo < tokens[i].char_end;
    if (!overlaps) continue;
    labels[i] = inside ? IobLabel::kI : IobLabel::kB;
    inside = true;
  }
  if (!inside) {
    throw ValidationError(sample.id, "answer range overlaps no token");
  }
  return labels;
}

CorpusStats token_position_stats(std::span<const QASample> samples,
                                 Language language, Split split) {
  CorpusStats stats;
  stats.language = language;
  stats.split = split;
  for (const QASample& sample : samples) {
    ++stats.n_samples;
    if (sample.answerable()) ++stats.n_answerable;
    const auto tokens = word_tokenize(sample.question_text, sample.language);
    if (tokens.empty()) continue;
    ++stats.first_token_freq[unicode::fold(tokens.front().text)];
    const auto last = std::find_if(tokens.rbegin(), tokens.rend(),
                                   [](const Token& t) {
                                     const auto cps = unicode::decode(t.text);
                                     return !std::all_of(cps.begin(), cps.end(),
                                                         unicode::is_punct);
                                   });
    if (last != tokens.rend()) ++stats.last_token_freq[unicode::fold(last->text)];
  }
  return stats;
}

std::vector<std::pair<std::string, std::size_t>> sorted_frequencies(
    const std::map<std::string, std::size_t>& freq) {
  std::vector<std::pair<std::string, std::size_t>> items(freq.begin(),
                                                         freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  return items;
}

std::string stats_to_json(const CorpusStats& stats, int indent) {
  json out = json::object();
  out["language"] = std::string(language_tag(stats.language));
  out["split"] = stats.split == Split::kTrain ? "train" : "validation";
  out["n_samples"] = stats.n_samples;
  out["n_answerable"] = stats.n_answerable;
  for (const auto& [key, freq] :
       {std::pair{"first_token_freq", &stats.first_token_freq},
        std::pair{"last_token_freq", &stats.last_token_freq}}) {
    json entries = json::array();
    for (const auto& [token, count] : sorted_frequencies(*freq)) {
      entries.push_back(json::array({token, count}));
    }
    out[key] = std::move(entries);
  }
  return out.dump(indent);
}

}  // namespace aqa
