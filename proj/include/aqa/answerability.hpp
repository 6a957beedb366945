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
#include <span>
#include <vector>

#include "json.hpp"

#include "aqa/features.hpp"
#include "aqa/matrix.hpp"
#include "aqa/neural.hpp"

namespace aqa {

inline constexpr std::size_t kClassifierHidden1 = 256;
inline constexpr std::size_t kClassifierHidden2 = 64;
inline constexpr double kClassifierDropout = 0.25;

// input -> h1 -> h2 -> 1 with ReLU and dropout after each hidden layer and a
// sigmoid on the single output logit.
template <typename T>
struct BasicAnswerabilityModel {
  DenseLayer<T> layer1;
  DenseLayer<T> layer2;
  DenseLayer<T> layer3;
  double dropout = kClassifierDropout;

  std::size_t input_dim() const { return layer1.in_dim(); }
  std::size_t parameter_count() const {
    return layer1.parameter_count() + layer2.parameter_count() +
           layer3.parameter_count();
  }
  std::vector<ParamView<T>> parameters();
  // Same architecture, all parameters zero; used as a gradient buffer.
  BasicAnswerabilityModel zeros_like() const;
};

using AnswerabilityModel = BasicAnswerabilityModel<float>;

struct TrainConfig {
  std::size_t batch_size = 512;
  double lr = 1e-3;
  std::size_t max_epochs = 20;
  std::size_t patience = 5;
  double min_improvement = 1e-6;
  uint64_t seed = 0;
  AdamConfig adam;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double val_accuracy = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  nlohmann::json to_json() const;
};

// Rows of `x` are feature vectors; labels are 1 (answerable) or 0.
struct LabeledFeatures {
  Matrix<float> x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
};

LabeledFeatures stack_features(std::span<const FeatureVector> features,
                               std::span<const int> labels);

template <typename T>
BasicAnswerabilityModel<T> build_classifier(
    std::size_t input_dim, uint64_t seed,
    std::size_t hidden1 = kClassifierHidden1,
    std::size_t hidden2 = kClassifierHidden2);

// Eval-mode forward pass.
template <typename T>
double predict_logit(const BasicAnswerabilityModel<T>& model,
                     std::span<const T> x);

template <typename T>
double predict_proba(const BasicAnswerabilityModel<T>& model,
                     std::span<const T> x);

double predict_proba(const AnswerabilityModel& model,
                     const FeatureVector& features);

// Eval-mode probability and its gradient with respect to the input.
template <typename T>
double proba_input_gradient(const BasicAnswerabilityModel<T>& model,
                            std::span<const T> x, std::span<T> grad);

// Summed binary cross-entropy over the given rows; gradients are added into
// `grads`. Dropout masks come from `rng` in train mode.
template <typename T>
double bce_loss_and_grad(const BasicAnswerabilityModel<T>& model,
                         const Matrix<T>& x, std::span<const int> y,
                         std::span<const std::size_t> rows, Mode mode,
                         std::mt19937_64& rng,
                         BasicAnswerabilityModel<T>& grads);

double accuracy_of(const AnswerabilityModel& model, const LabeledFeatures& data,
                   double threshold = 0.5);

struct ClassifierTrainResult {
  AnswerabilityModel model;  // parameters of the best epoch
  TrainHistory history;
};

// Mini-batch Adam on binary cross-entropy with seeded shuffling and early
// stopping on validation accuracy.
ClassifierTrainResult train_classifier(const AnswerabilityModel& model,
                                       const LabeledFeatures& train,
                                       const LabeledFeatures& val,
                                       const TrainConfig& config);

enum class Verdict { kUnanswerable, kAnswerable };

// Answerable iff proba >= threshold.
Verdict classify(double proba, double threshold = 0.5);

}  // namespace aqa
