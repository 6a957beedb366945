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

#include "aqa/decode.hpp"

#include <algorithm>
#include <array>

#include "aqa/error.hpp"

namespace aqa {

namespace {

constexpr std::array<IobLabel, 3> kLabels = {IobLabel::kO, IobLabel::kB,
                                             IobLabel::kI};

bool may_follow(std::span<const IobLabel> prefix, bool begin_used,
                IobLabel next, const LegalityConfig& rules) {
  if (next == IobLabel::kI) {
    if (prefix.empty()) return !rules.no_leading_inside;
    if (prefix.back() == IobLabel::kO) return !rules.no_inside_after_outside;
  }
  if (next == IobLabel::kB && begin_used) return !rules.single_begin;
  return true;
}

struct Hypothesis {
  std::vector<IobLabel> labels;
  double score = 0;
  bool begin_used = false;
};

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.labels < b.labels;
}

// The part of a prefix the enabled rules can still see. Two hypotheses with
// the same state have the same legal continuations, so only the better one
// can end up best; the other is dropped before it takes a beam slot.
int legality_state(const Hypothesis& h, const LegalityConfig& rules) {
  const bool after_o = rules.no_inside_after_outside &&
                       (h.labels.empty() || h.labels.back() == IobLabel::kO);
  const bool used = rules.single_begin && h.begin_used;
  return (after_o ? 1 : 0) | (used ? 2 : 0);
}

}  // namespace

LegalityConfig LegalityConfig::parse(std::string_view list) {
  LegalityConfig rules;
  if (list.empty() || list == "none") return rules;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    const std::string_view item = list.substr(pos, comma - pos);
    if (item == "a") {
      rules.no_leading_inside = true;
    } else if (item == "b") {
      rules.no_inside_after_outside = true;
    } else if (item == "c") {
      rules.single_begin = true;
    } else {
      throw ConfigError("unknown constraint '" + std::string(item) +
                        "' (expected a, b or c)");
    }
    pos = comma + 1;
  }
  return rules;
}

std::string LegalityConfig::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(no_leading_inside, "a");
  add(no_inside_after_outside, "b");
  add(single_begin, "c");
  return out.empty() ? "none" : out;
}

bool is_legal(std::span<const IobLabel> labels, const LegalityConfig& rules) {
  bool begin_used = false;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (!may_follow(labels.first(t), begin_used, labels[t], rules)) return false;
    begin_used = begin_used || labels[t] == IobLabel::kB;
  }
  return true;
}

Decoded decode(const Matrix<double>& logprobs, std::size_t k,
               const LegalityConfig& rules) {
  if (k < 1) throw PreconditionError("beam width must be >= 1");
  if (logprobs.cols() != kNumIobLabels) {
    throw ShapeError("decode expects T x 3 log-probabilities");
  }
  std::vector<Hypothesis> beam(1);
  std::vector<Hypothesis> candidates;
  for (std::size_t t = 0; t < logprobs.rows(); ++t) {
    candidates.clear();
    for (const Hypothesis& hyp : beam) {
      for (IobLabel label : kLabels) {
        if (!may_follow(hyp.labels, hyp.begin_used, label, rules)) continue;
        Hypothesis next = hyp;
        next.labels.push_back(label);
        next.score += logprobs(t, static_cast<std::size_t>(index_of(label)));
        next.begin_used = hyp.begin_used || label == IobLabel::kB;
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(), better);
    std::array<bool, 4> taken{};
    beam.clear();
    for (Hypothesis& hyp : candidates) {
      if (beam.size() == k) break;
      const int state = legality_state(hyp, rules);
      if (taken[state]) continue;
      taken[state] = true;
      beam.push_back(std::move(hyp));
    }
  }
  return {std::move(beam.front().labels), beam.front().score};
}

std::vector<AnswerSpan> extract_spans(std::span<const IobLabel> labels,
                                      const Matrix<double>& logprobs,
                                      std::span<const Token> tokens,
                                      std::u32string_view context,
                                      std::size_t first_candidate) {
  if (labels.size() != tokens.size() || logprobs.rows() != labels.size()) {
    throw ShapeError("labels, log-probabilities and tokens must align");
  }
  std::vector<AnswerSpan> spans;
  std::size_t t = 0;
  while (t < labels.size()) {
    if (labels[t] != IobLabel::kB || t < first_candidate) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end + 1 < labels.size() && labels[end + 1] == IobLabel::kI) ++end;
    AnswerSpan span;
    span.token_start = t;
    span.token_end = end;
    span.char_start = tokens[t].char_start;
    span.char_end = tokens[end].char_end;
    if (span.char_end > context.size() || span.char_start > span.char_end) {
      throw ShapeError("token offsets fall outside the context");
    }
    span.text = unicode::encode(
        context.substr(span.char_start, span.char_end - span.char_start));
    double sum = 0;
    for (std::size_t i = t; i <= end; ++i) {
      sum += logprobs(i, static_cast<std::size_t>(index_of(labels[i])));
    }
    span.score = sum / static_cast<double>(end - t + 1);
    spans.push_back(std::move(span));
    t = end + 1;
  }
  return spans;
}

}  // namespace aqa
