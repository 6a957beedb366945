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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aqa/matrix.hpp"

namespace aqa {

enum class Mode { kTrain, kEval };

// Named view of one parameter tensor, used by the optimizer and checkpoints.
template <typename T>
struct ParamView {
  std::string name;
  std::span<T> values;
  std::vector<std::size_t> shape;
};

template <typename T>
struct DenseLayer {
  Matrix<T> weight;  // out x in
  std::vector<T> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out)
      : weight(out, in), bias(out, T(0)) {}

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  void append_params(const std::string& prefix,
                     std::vector<ParamView<T>>& out) {
    out.push_back({prefix + ".weight", weight.values(),
                   {weight.rows(), weight.cols()}});
    out.push_back({prefix + ".bias", bias, {bias.size()}});
  }
};

// Uniform in ±sqrt(6 / (fan_in + fan_out)), zero bias.
template <typename T>
void xavier_init(DenseLayer<T>& layer, std::mt19937_64& rng);

template <typename T>
std::vector<T> dense_forward(const DenseLayer<T>& layer, std::span<const T> x);

// Returns dx; adds dW and db into `grad`.
template <typename T>
std::vector<T> dense_backward(const DenseLayer<T>& layer, std::span<const T> x,
                              std::span<const T> dy, DenseLayer<T>& grad);

// Row-wise versions over a batch X (n x in).
template <typename T>
Matrix<T> dense_forward(const DenseLayer<T>& layer, const Matrix<T>& x);

template <typename T>
Matrix<T> dense_backward(const DenseLayer<T>& layer, const Matrix<T>& x,
                         const Matrix<T>& dy, DenseLayer<T>& grad);

// Inverted dropout. In train mode each entry survives with probability 1-p
// and is scaled by 1/(1-p); eval mode and p == 0 copy x unchanged. When
// `mask` is given it receives the per-entry multiplier for the backward pass.
template <typename T>
std::vector<T> dropout(std::span<const T> x, double p, Mode mode,
                       std::mt19937_64& rng, std::vector<T>* mask = nullptr);

template <typename T>
void log_softmax_rows(Matrix<T>& logits);

template <typename T>
struct CrossEntropy {
  double loss = 0;
  Matrix<T> dlogits;
};

// loss = sum_t w[y_t] * -log softmax(logits_t)[y_t] / sum_t w[y_t]
template <typename T>
CrossEntropy<T> weighted_cross_entropy(const Matrix<T>& logits,
                                       std::span<const int> targets,
                                       std::span<const double> class_weights);

// Unnormalized form for pooling several sequences into one loss:
// returns the weighted NLL sum, adds the applied weights into *weight_total
// and writes d(sum)/dlogits into the result.
template <typename T>
CrossEntropy<T> weighted_nll_sum(const Matrix<T>& logits,
                                 std::span<const int> targets,
                                 std::span<const double> class_weights,
                                 double* weight_total);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  int64_t step = 0;
};

// Bias-corrected Adam. The state is sized lazily on the first call.
template <typename T>
void adam_step(std::span<const std::span<T>> params,
               std::span<const std::span<const T>> grads, AdamState<T>& state,
               double lr);

struct LrSchedule {
  double lr_start = 1e-3;
  double lr_end = 1e-5;
  std::size_t total_steps = 1;
};

// Linear interpolation from lr_start (t = 0) to lr_end (t = total_steps).
double lr_at(const LrSchedule& schedule, std::size_t t);

// f(params, grad_out) -> value; writes the analytic gradient into grad_out.
using ScalarFunction =
    std::function<double(std::span<const double>, std::span<double>)>;

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t worst_index = 0;
};

// Coordinate-wise comparison of the analytic gradient with central
// differences. Relative error is |a - n| / max(|a|, |n|, kGradCheckFloor);
// the floor keeps central-difference rounding noise (about 1e-11 at
// eps = 1e-5) on near-zero gradients from dominating the maximum.
inline constexpr double kGradCheckFloor = 1e-4;

GradCheckResult grad_check(const ScalarFunction& fn,
                           std::span<const double> params, double eps = 1e-5);

template <typename T>
inline T sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace aqa
