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

#include "aqa/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "aqa/cvec.hpp"
#include "aqa/error.hpp"

namespace aqa {

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens,
                                   std::size_t max_size) {
  Vocabulary vocab(max_size);
  for (const std::string& token : tokens) {
    if (!vocab.add(token)) {
      throw FormatError("duplicate or excess vocabulary token '" + token + "'");
    }
  }
  vocab.freeze();
  return vocab;
}

bool Vocabulary::add(const std::string& token) {
  if (frozen_) throw PreconditionError("vocabulary is frozen");
  if (tokens_.size() >= max_size_ || index_.contains(token)) return false;
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
  return true;
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary fit_bow_vocab(std::span<const QASample> samples,
                         std::size_t max_size) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const QASample& sample : samples) {
    for (const std::string_view text :
         {std::string_view(sample.question_text),
          std::string_view(sample.context_text)}) {
      for (const Token& token : word_tokenize(text, sample.language)) {
        ++counts[normalize_token(token.text, sample.language)];
      }
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary vocab(max_size);
  for (const auto& entry : ranked) {
    if (vocab.size() == max_size) break;
    vocab.add(entry.first);
  }
  vocab.freeze();
  return vocab;
}

void validate_features(const FeatureVector& features) {
  std::size_t expected_start = 0;
  for (const FeatureBlock& block : features.schema) {
    if (block.start != expected_start) {
      throw ShapeError("feature block '" + block.name + "' is not contiguous");
    }
    expected_start += block.length;
  }
  if (expected_start != features.values.size()) {
    throw ShapeError("feature schema covers " + std::to_string(expected_start) +
                     " of " + std::to_string(features.values.size()) +
                     " values");
  }
  for (float v : features.values) {
    if (!std::isfinite(v)) throw ShapeError("non-finite feature value");
  }
}

FeatureVector bow_vector(std::string_view question, std::string_view context,
                         Language language, const Vocabulary& vocab) {
  if (!vocab.frozen()) throw PreconditionError("bow vocabulary not frozen");
  FeatureVector out;
  out.values.assign(vocab.size(), 0.0f);
  out.schema.push_back({"bow", 0, vocab.size()});
  for (const std::string_view text : {question, context}) {
    for (const Token& token : word_tokenize(text, language)) {
      if (const auto index = vocab.index_of(normalize_token(token.text, language))) {
        out.values[*index] += 1.0f;
      }
    }
  }
  return out;
}

double overlap_percent(std::span<const Token> question_tokens,
                       std::span<const Token> context_tokens) {
  if (question_tokens.empty()) {
    throw PreconditionError("overlap_percent needs a non-empty question");
  }
  std::set<std::string> question;
  for (const Token& t : question_tokens) question.insert(unicode::fold(t.text));
  std::unordered_set<std::string> context;
  for (const Token& t : context_tokens) context.insert(unicode::fold(t.text));
  const auto shared = std::count_if(question.begin(), question.end(),
                                    [&](const std::string& w) {
                                      return context.contains(w);
                                    });
  return static_cast<double>(shared) / static_cast<double>(question.size());
}

std::vector<float> pooled_embedding(std::string_view text,
                                    const SubwordModel& model,
                                    Language language) {
  std::vector<double> sum(model.dim, 0.0);
  const std::vector<int32_t> ids = subword_tokenize(text, model, language);
  for (int32_t id : ids) {
    const auto row = model.row(id);
    for (std::size_t j = 0; j < model.dim; ++j) sum[j] += row[j];
  }
  std::vector<float> out(model.dim, 0.0f);
  if (ids.empty()) return out;
  for (std::size_t j = 0; j < model.dim; ++j) {
    out[j] = static_cast<float>(sum[j] / static_cast<double>(ids.size()));
  }
  return out;
}

FeatureVector combine_features(
    std::span<const std::pair<std::string, std::vector<float>>> blocks) {
  FeatureVector out;
  std::set<std::string> names;
  for (const auto& [name, values] : blocks) {
    if (!names.insert(name).second) {
      throw ShapeError("duplicate feature block '" + name + "'");
    }
    out.schema.push_back({name, out.values.size(), values.size()});
    out.values.insert(out.values.end(), values.begin(), values.end());
  }
  validate_features(out);
  return out;
}

FeatureVector combine_features(std::span<const FeatureVector> parts) {
  FeatureVector out;
  std::set<std::string> names;
  for (const FeatureVector& part : parts) {
    for (FeatureBlock block : part.schema) {
      if (!names.insert(block.name).second) {
        throw ShapeError("duplicate feature block '" + block.name + "'");
      }
      block.start += out.values.size();
      out.schema.push_back(std::move(block));
    }
    out.values.insert(out.values.end(), part.values.begin(), part.values.end());
  }
  validate_features(out);
  return out;
}

std::optional<FeatureSet> parse_feature_set(std::string_view name) {
  if (name == "bow") return FeatureSet::kBow;
  if (name == "overlap") return FeatureSet::kOverlap;
  if (name == "embed") return FeatureSet::kEmbed;
  if (name == "combo") return FeatureSet::kCombo;
  if (name == "cvec") return FeatureSet::kCvec;
  return std::nullopt;
}

std::string_view feature_set_name(FeatureSet set) {
  switch (set) {
    case FeatureSet::kBow:
      return "bow";
    case FeatureSet::kOverlap:
      return "overlap";
    case FeatureSet::kEmbed:
      return "embed";
    case FeatureSet::kCombo:
      return "combo";
    case FeatureSet::kCvec:
      return "cvec";
  }
  return "?";
}

bool uses_bow(FeatureSet set) {
  return set == FeatureSet::kBow || set == FeatureSet::kCombo;
}

bool uses_embed(FeatureSet set) {
  return set == FeatureSet::kEmbed || set == FeatureSet::kCombo;
}

namespace {

bool has_overlap(FeatureSet set) {
  return set == FeatureSet::kOverlap || set == FeatureSet::kCombo;
}

// Punctuation-only tokens are not words for the overlap ratio.
std::vector<Token> word_tokens(std::string_view text, Language language) {
  std::vector<Token> tokens = word_tokenize(text, language);
  std::erase_if(tokens, [](const Token& t) {
    const auto cps = unicode::decode(t.text);
    return std::all_of(cps.begin(), cps.end(), unicode::is_punct);
  });
  return tokens;
}

}  // namespace

Featurizer::Featurizer(FeatureSet set, Vocabulary vocab, const SubwordModel* bpe,
                       const CvecIndex* cvec, std::size_t cvec_dim)
    : set_(set),
      vocab_(std::move(vocab)),
      bpe_(bpe),
      cvec_(cvec),
      cvec_dim_(cvec_dim) {
  if (uses_embed(set_) && bpe_ == nullptr) {
    throw ConfigError("feature set needs a subword model");
  }
  if (set_ == FeatureSet::kCvec) {
    if (cvec_ == nullptr) throw ConfigError("feature set needs context vectors");
    if (cvec_dim_ == 0) cvec_dim_ = cvec_->dim();
    if (cvec_dim_ == 0) throw ConfigError("context vector dimension unknown");
  }
  for (const FeatureBlock& block : schema()) dim_ += block.length;
}

std::vector<FeatureBlock> Featurizer::schema() const {
  std::vector<FeatureBlock> blocks;
  std::size_t start = 0;
  auto push = [&](std::string name, std::size_t length) {
    blocks.push_back({std::move(name), start, length});
    start += length;
  };
  if (uses_bow(set_)) push("bow", vocab_.size());
  if (has_overlap(set_)) push("overlap", 1);
  if (uses_embed(set_)) push("embed", bpe_->dim);
  if (set_ == FeatureSet::kCvec) push("cvec", cvec_dim_);
  return blocks;
}

FeatureVector Featurizer::operator()(const QASample& sample) const {
  std::vector<FeatureVector> parts;
  if (uses_bow(set_)) {
    parts.push_back(bow_vector(sample.question_text, sample.context_text,
                               sample.language, vocab_));
  }
  if (has_overlap(set_)) {
    const auto question = word_tokens(sample.question_text, sample.language);
    const auto context = word_tokens(sample.context_text, sample.language);
    const double ratio =
        question.empty() ? 0.0 : overlap_percent(question, context);
    parts.push_back({{static_cast<float>(ratio)}, {{"overlap", 0, 1}}});
  }
  if (uses_embed(set_)) {
    const std::string joined = sample.question_text + " " + sample.context_text;
    auto pooled = pooled_embedding(joined, *bpe_, sample.language);
    parts.push_back({std::move(pooled), {{"embed", 0, bpe_->dim}}});
  }
  if (set_ == FeatureSet::kCvec) {
    const auto* segments = cvec_->find(sample.id);
    if (segments == nullptr || segments->empty()) {
      throw PreconditionError("no context vectors for sample '" + sample.id +
                              "'");
    }
    const ContextVectorSet& first = segments->front();
    if (first.dim != cvec_dim_) {
      throw ShapeError("context vector dimension mismatch for '" + sample.id +
                       "'");
    }
    parts.push_back({first.pooled, {{"cvec", 0, cvec_dim_}}});
  }
  return combine_features(parts);
}

std::string Featurizer::feature_name(std::size_t index) const {
  for (const FeatureBlock& block : schema()) {
    if (index < block.start || index >= block.start + block.length) continue;
    const std::size_t local = index - block.start;
    if (block.name == "bow") return vocab_.token(local);
    if (block.name == "overlap") return "overlap";
    return block.name + "[" + std::to_string(local) + "]";
  }
  throw PreconditionError("feature index " + std::to_string(index) +
                          " out of range");
}

}  // namespace aqa
