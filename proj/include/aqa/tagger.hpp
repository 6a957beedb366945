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
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "aqa/corpus.hpp"
#include "aqa/cvec.hpp"
#include "aqa/decode.hpp"
#include "aqa/lstm.hpp"
#include "aqa/neural.hpp"

namespace aqa {

struct TaggerConfig {
  std::size_t hidden = 300;
  std::size_t layers = 2;
  double dropout = 0.1;
  std::array<double, 3> class_weights{0.01, 1.0, 1.0};  // O, B, I
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double lr_start = 1e-3;
  double lr_end = 1e-5;
  uint64_t seed = 0;
  AdamConfig adam;
  std::size_t eval_beam = 1;
  LegalityConfig eval_rules;
};

// Pooled encoder vector -> bridge -> initial hidden states (2*layers, H);
// token vectors -> BiLSTM (zero initial cell state) -> head -> 3 logits.
template <typename T>
struct BasicTaggerModel {
  DenseLayer<T> bridge;  // D -> 2 * layers * H
  BiLstm<T> decoder;
  DenseLayer<T> head;  // 2H -> 3

  std::size_t input_dim() const { return decoder.input_dim; }
  std::size_t hidden() const { return decoder.hidden; }
  std::vector<ParamView<T>> parameters();
  BasicTaggerModel zeros_like() const;
};

using TaggerModel = BasicTaggerModel<float>;

template <typename T>
BasicTaggerModel<T> build_tagger(std::size_t input_dim,
                                 const TaggerConfig& config);

template <typename T>
struct TaggerCache {
  std::vector<T> pooled;
  Matrix<T> h0;
  BiLstmCache<T> lstm;
  Matrix<T> lstm_out;
};

// Per-token label logits (T x 3). `cache` records what backward needs.
template <typename T>
Matrix<T> tagger_logits(const BasicTaggerModel<T>& model,
                        const ContextVectorSet& vectors, Mode mode,
                        std::mt19937_64* rng, TaggerCache<T>* cache = nullptr);

// Eval-mode per-token label log-probabilities (T x 3).
template <typename T>
Matrix<T> tagger_forward(const BasicTaggerModel<T>& model,
                         const ContextVectorSet& vectors);

// Adds parameter gradients for d(loss)/d(logits) into `grads`.
template <typename T>
void tagger_backward(const BasicTaggerModel<T>& model,
                     const TaggerCache<T>& cache, const Matrix<T>& d_logits,
                     BasicTaggerModel<T>& grads);

struct TaggedSegment {
  const ContextVectorSet* vectors = nullptr;
  std::vector<IobLabel> labels;
};

struct TaggerEpoch {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_token_f1 = 0;
  // Share of validation predictions shaped B, O, O, ...
  double val_degenerate_fraction = 0;
};

struct TaggerHistory {
  std::vector<TaggerEpoch> epochs;
  nlohmann::json to_json() const;
};

struct TaggerTrainResult {
  TaggerModel model;
  TaggerHistory history;
};

// Weighted cross-entropy, Adam, learning rate decaying linearly from
// lr_start to lr_end over all steps. Returns the final-epoch model.
TaggerTrainResult train_tagger(const TaggerModel& model,
                               std::span<const TaggedSegment> train,
                               std::span<const TaggedSegment> val,
                               const TaggerConfig& config);

// Macro token F1 and confusion over the given segments.
struct TaggerEvaluation {
  double token_f1 = 0;
  double degenerate_fraction = 0;
  std::vector<std::vector<IobLabel>> predictions;
};

TaggerEvaluation evaluate_tagger(const TaggerModel& model,
                                 std::span<const TaggedSegment> segments,
                                 std::size_t beam, const LegalityConfig& rules);

// True for sequences B, O, O, ... of length >= 2.
bool is_degenerate_prefix(std::span<const IobLabel> labels);

// Tokens of a CVEC record with their text sliced from the context.
std::vector<Token> segment_tokens(const ContextVectorSet& vectors,
                                  std::u32string_view context);

// Gold labels per CVEC segment. Segments that do not touch the answer are
// all O; an answer touched by no segment is a ValidationError.
std::vector<std::vector<IobLabel>> gold_segment_labels(
    const QASample& sample, std::span<const ContextVectorSet> segments);

struct SegmentDecoding {
  std::vector<IobLabel> labels;
  Matrix<double> logprobs;
  std::vector<Token> tokens;
  std::size_t question_tokens = 0;
};

struct Prediction {
  std::string id;
  std::optional<AnswerSpan> span;  // nullopt = unanswerable
  std::vector<std::vector<IobLabel>> labels_per_segment;

  nlohmann::json to_json() const;
};

// Collects spans of every segment (question tokens excluded, spans never
// merged across segments), drops duplicates with an identical character
// range keeping the best score and returns the best-scoring span.
Prediction combine_segments(const std::string& id,
                            std::span<const SegmentDecoding> segments,
                            std::u32string_view context);

Prediction answer(const QASample& sample, const TaggerModel& model,
                  std::span<const ContextVectorSet> segments, std::size_t beam,
                  const LegalityConfig& rules,
                  std::size_t question_tokens = 0);

}  // namespace aqa
