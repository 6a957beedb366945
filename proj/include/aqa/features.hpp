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
#include <unordered_map>
#include <utility>
#include <vector>

#include "aqa/corpus.hpp"
#include "aqa/tokenization.hpp"

namespace aqa {

class CvecIndex;

inline constexpr std::size_t kDefaultBowSize = 60000;

// Token -> index map, bijective onto 0..size()-1. Insertions stop at
// max_size and are rejected after freeze().
class Vocabulary {
 public:
  explicit Vocabulary(std::size_t max_size = kDefaultBowSize)
      : max_size_(max_size) {}

  // Builds a frozen vocabulary from an ordered token list.
  static Vocabulary from_tokens(std::vector<std::string> tokens,
                                std::size_t max_size);

  // Returns false when the token was already present or the cap is reached.
  bool add(const std::string& token);
  void freeze() { frozen_ = true; }

  std::optional<std::size_t> index_of(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_[index]; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  std::size_t max_size() const { return max_size_; }
  bool frozen() const { return frozen_; }

 private:
  std::size_t max_size_;
  bool frozen_ = false;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Counts normalized tokens of question + context over the training samples,
// keeps the max_size most frequent (ties by token), then freezes.
Vocabulary fit_bow_vocab(std::span<const QASample> samples,
                         std::size_t max_size = kDefaultBowSize);

struct FeatureBlock {
  std::string name;
  std::size_t start = 0;
  std::size_t length = 0;
  bool operator==(const FeatureBlock&) const = default;
};

struct FeatureVector {
  std::vector<float> values;
  std::vector<FeatureBlock> schema;

  std::size_t size() const { return values.size(); }
};

// Throws ShapeError if the schema does not tile `values` or a value is
// not finite.
void validate_features(const FeatureVector& features);

FeatureVector bow_vector(std::string_view question, std::string_view context,
                         Language language, const Vocabulary& vocab);

// |unique(q) ∩ unique(c)| / |unique(q)| over case-folded token texts.
double overlap_percent(std::span<const Token> question_tokens,
                       std::span<const Token> context_tokens);

// Mean of the subword embedding rows; zero vector for empty text.
std::vector<float> pooled_embedding(std::string_view text,
                                    const SubwordModel& model,
                                    Language language = Language::kEn);

// Concatenates named blocks. Block names must be unique.
FeatureVector combine_features(
    std::span<const std::pair<std::string, std::vector<float>>> blocks);

// Concatenates whole feature vectors, shifting their schemas.
FeatureVector combine_features(std::span<const FeatureVector> parts);

enum class FeatureSet { kBow, kOverlap, kEmbed, kCombo, kCvec };

std::optional<FeatureSet> parse_feature_set(std::string_view name);
std::string_view feature_set_name(FeatureSet set);

// Turns a sample into the FeatureVector of one representation. "combo" is
// bow + overlap + embed. Resources not needed by the chosen set may be null.
class Featurizer {
 public:
  Featurizer(FeatureSet set, Vocabulary vocab, const SubwordModel* bpe,
             const CvecIndex* cvec, std::size_t cvec_dim = 0);

  FeatureVector operator()(const QASample& sample) const;

  FeatureSet feature_set() const { return set_; }
  std::size_t dim() const { return dim_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::vector<FeatureBlock> schema() const;

  // Human-readable name of one input dimension: the vocabulary token for the
  // bow block, "overlap", "embed[j]", "cvec[j]".
  std::string feature_name(std::size_t index) const;

 private:
  FeatureSet set_;
  Vocabulary vocab_;
  const SubwordModel* bpe_;
  const CvecIndex* cvec_;
  std::size_t cvec_dim_;
  std::size_t dim_ = 0;
};

bool uses_bow(FeatureSet set);
bool uses_embed(FeatureSet set);

}  // namespace aqa
