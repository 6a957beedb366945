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

#include "aqa/answerability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aqa/error.hpp"
#include "aqa/kernels.hpp"
#include "aqa/log.hpp"

namespace aqa {

namespace {

// Gradient shards per batch. Fixed so that results do not depend on the
// number of OpenMP threads.
constexpr std::size_t kGradShards = 4;

template <typename T>
struct ForwardTrace {
  std::vector<T> z1, h1, mask1;
  std::vector<T> z2, h2, mask2;
  double logit = 0;
};

template <typename T>
std::vector<T> relu(std::span<const T> z) {
  std::vector<T> out(z.begin(), z.end());
  for (T& v : out) v = v > T(0) ? v : T(0);
  return out;
}

template <typename T>
void forward(const BasicAnswerabilityModel<T>& model, std::span<const T> x,
             Mode mode, std::mt19937_64& rng, ForwardTrace<T>& trace) {
  trace.z1 = dense_forward(model.layer1, x);
  trace.h1 = dropout<T>(relu<T>(trace.z1), model.dropout, mode, rng, &trace.mask1);
  trace.z2 = dense_forward<T>(model.layer2, trace.h1);
  trace.h2 = dropout<T>(relu<T>(trace.z2), model.dropout, mode, rng, &trace.mask2);
  trace.logit = double(dense_forward<T>(model.layer3, trace.h2)[0]);
}

// Backpropagates d(loss)/d(logit). Returns d/dx only when `want_input`.
template <typename T>
std::vector<T> backward(const BasicAnswerabilityModel<T>& model,
                        std::span<const T> x, const ForwardTrace<T>& trace,
                        double d_logit, BasicAnswerabilityModel<T>& grads,
                        bool want_input) {
  const std::vector<T> dz3{T(d_logit)};
  std::vector<T> d = dense_backward<T>(model.layer3, trace.h2, dz3, grads.layer3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] *= trace.mask2[i] * (trace.z2[i] > T(0) ? T(1) : T(0));
  }
  d = dense_backward<T>(model.layer2, trace.h1, d, grads.layer2);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] *= trace.mask1[i] * (trace.z1[i] > T(0) ? T(1) : T(0));
  }
  if (want_input) return dense_backward<T>(model.layer1, x, d, grads.layer1);
  kernels::ger_acc<T>(d, x, grads.layer1.weight);
  for (std::size_t i = 0; i < d.size(); ++i) grads.layer1.bias[i] += d[i];
  return {};
}

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

template <typename T>
void add_into(BasicAnswerabilityModel<T>& dst,
              BasicAnswerabilityModel<T>& src) {
  auto d = dst.parameters();
  auto s = src.parameters();
  for (std::size_t k = 0; k < d.size(); ++k) {
    for (std::size_t i = 0; i < d[k].values.size(); ++i) {
      d[k].values[i] += s[k].values[i];
    }
  }
}

template <typename T>
void zero(BasicAnswerabilityModel<T>& model) {
  for (auto& p : model.parameters()) std::fill(p.values.begin(), p.values.end(), T(0));
}

}  // namespace

template <typename T>
std::vector<ParamView<T>> BasicAnswerabilityModel<T>::parameters() {
  std::vector<ParamView<T>> out;
  layer1.append_params("layer1", out);
  layer2.append_params("layer2", out);
  layer3.append_params("layer3", out);
  return out;
}

template <typename T>
BasicAnswerabilityModel<T> BasicAnswerabilityModel<T>::zeros_like() const {
  BasicAnswerabilityModel<T> out;
  out.layer1 = DenseLayer<T>(layer1.in_dim(), layer1.out_dim());
  out.layer2 = DenseLayer<T>(layer2.in_dim(), layer2.out_dim());
  out.layer3 = DenseLayer<T>(layer3.in_dim(), layer3.out_dim());
  out.dropout = dropout;
  return out;
}

nlohmann::json TrainHistory::to_json() const {
  nlohmann::json records = nlohmann::json::array();
  for (const EpochRecord& r : epochs) {
    records.push_back({{"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"val_accuracy", r.val_accuracy}});
  }
  return {{"epochs", records},
          {"best_epoch", best_epoch},
          {"stopped_early", stopped_early}};
}

LabeledFeatures stack_features(std::span<const FeatureVector> features,
                               std::span<const int> labels) {
  if (features.size() != labels.size()) {
    throw ShapeError("feature and label counts differ");
  }
  LabeledFeatures out;
  const std::size_t dim = features.empty() ? 0 : features.front().size();
  out.x = Matrix<float>(features.size(), dim);
  for (std::size_t r = 0; r < features.size(); ++r) {
    if (features[r].size() != dim) throw ShapeError("ragged feature vectors");
    std::copy(features[r].values.begin(), features[r].values.end(),
              out.x.row(r).begin());
  }
  out.y.assign(labels.begin(), labels.end());
  return out;
}

template <typename T>
BasicAnswerabilityModel<T> build_classifier(std::size_t input_dim,
                                            uint64_t seed, std::size_t hidden1,
                                            std::size_t hidden2) {
  if (input_dim == 0) throw PreconditionError("classifier input_dim must be >= 1");
  BasicAnswerabilityModel<T> model;
  model.layer1 = DenseLayer<T>(input_dim, hidden1);
  model.layer2 = DenseLayer<T>(hidden1, hidden2);
  model.layer3 = DenseLayer<T>(hidden2, 1);
  std::mt19937_64 rng(seed);
  xavier_init(model.layer1, rng);
  xavier_init(model.layer2, rng);
  xavier_init(model.layer3, rng);
  return model;
}

template <typename T>
double predict_logit(const BasicAnswerabilityModel<T>& model,
                     std::span<const T> x) {
  if (x.size() != model.input_dim()) {
    throw ShapeError("feature dimension " + std::to_string(x.size()) +
                     " != classifier input " +
                     std::to_string(model.input_dim()));
  }
  std::mt19937_64 unused(0);
  ForwardTrace<T> trace;
  forward(model, x, Mode::kEval, unused, trace);
  return trace.logit;
}

template <typename T>
double predict_proba(const BasicAnswerabilityModel<T>& model,
                     std::span<const T> x) {
  return sigmoid(predict_logit(model, x));
}

double predict_proba(const AnswerabilityModel& model,
                     const FeatureVector& features) {
  return predict_proba<float>(model, features.values);
}

template <typename T>
double proba_input_gradient(const BasicAnswerabilityModel<T>& model,
                            std::span<const T> x, std::span<T> grad) {
  if (x.size() != model.input_dim() || grad.size() != x.size()) {
    throw ShapeError("input gradient shape mismatch");
  }
  std::mt19937_64 unused(0);
  ForwardTrace<T> trace;
  forward(model, x, Mode::kEval, unused, trace);
  const double p = sigmoid(trace.logit);
  BasicAnswerabilityModel<T> scratch = model.zeros_like();
  const auto dx = backward(model, x, trace, p * (1.0 - p), scratch, true);
  std::copy(dx.begin(), dx.end(), grad.begin());
  return p;
}

template <typename T>
double bce_loss_and_grad(const BasicAnswerabilityModel<T>& model,
                         const Matrix<T>& x, std::span<const int> y,
                         std::span<const std::size_t> rows, Mode mode,
                         std::mt19937_64& rng,
                         BasicAnswerabilityModel<T>& grads) {
  double loss = 0;
  ForwardTrace<T> trace;
  for (std::size_t r : rows) {
    forward<T>(model, x.row(r), mode, rng, trace);
    const double z = trace.logit;
    const double label = y[r] ? 1.0 : 0.0;
    loss += softplus(z) - label * z;
    backward<T>(model, x.row(r), trace, sigmoid(z) - label, grads, false);
  }
  return loss;
}

double accuracy_of(const AnswerabilityModel& model, const LabeledFeatures& data,
                   double threshold) {
  if (data.size() == 0) throw PreconditionError("accuracy of an empty set");
  std::vector<int> correct(data.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < data.size(); ++r) {
    const bool predicted =
        classify(predict_proba<float>(model, data.x.row(r)), threshold) ==
        Verdict::kAnswerable;
    correct[r] = predicted == (data.y[r] != 0);
  }
  return static_cast<double>(std::accumulate(correct.begin(), correct.end(), 0)) /
         static_cast<double>(data.size());
}

ClassifierTrainResult train_classifier(const AnswerabilityModel& initial,
                                       const LabeledFeatures& train,
                                       const LabeledFeatures& val,
                                       const TrainConfig& config) {
  if (train.size() == 0 || val.size() == 0) {
    throw PreconditionError("training and validation sets must be non-empty");
  }
  if (config.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (train.x.cols() != initial.input_dim() || val.x.cols() != initial.input_dim()) {
    throw ShapeError("feature dimension differs from classifier input");
  }

  AnswerabilityModel model = initial;
  ClassifierTrainResult result{model, {}};
  AdamState<float> adam;
  adam.config = config.adam;
  std::mt19937_64 shuffle_rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  AnswerabilityModel total = model.zeros_like();
  std::vector<AnswerabilityModel> shard_grads(kGradShards, total);
  std::vector<double> shard_loss(kGradShards);

  double best_accuracy = -1.0;
  std::size_t stagnant = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0;
    std::size_t batch_index = 0;
    for (std::size_t b0 = 0; b0 < order.size();
         b0 += config.batch_size, ++batch_index) {
      const std::size_t b1 = std::min(order.size(), b0 + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + b0, b1 - b0);
      const std::size_t per_shard = (batch.size() + kGradShards - 1) / kGradShards;
#pragma omp parallel for schedule(static)
      for (std::size_t s = 0; s < kGradShards; ++s) {
        zero(shard_grads[s]);
        shard_loss[s] = 0;
        const std::size_t lo = std::min(batch.size(), s * per_shard);
        const std::size_t hi = std::min(batch.size(), lo + per_shard);
        if (lo == hi) continue;
        std::seed_seq seq{config.seed, uint64_t(epoch), uint64_t(batch_index),
                          uint64_t(s)};
        std::mt19937_64 rng(seq);
        shard_loss[s] = bce_loss_and_grad<float>(
            model, train.x, train.y, batch.subspan(lo, hi - lo), Mode::kTrain,
            rng, shard_grads[s]);
      }
      zero(total);
      double batch_loss = 0;
      for (std::size_t s = 0; s < kGradShards; ++s) {
        add_into(total, shard_grads[s]);
        batch_loss += shard_loss[s];
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index));
      }
      epoch_loss += batch_loss;
      const float scale = 1.0f / static_cast<float>(batch.size());
      auto params = model.parameters();
      auto grads = total.parameters();
      std::vector<std::span<float>> p_spans;
      std::vector<std::span<const float>> g_spans;
      for (std::size_t k = 0; k < params.size(); ++k) {
        for (float& g : grads[k].values) g *= scale;
        p_spans.push_back(params[k].values);
        g_spans.push_back(grads[k].values);
      }
      adam_step<float>(p_spans, g_spans, adam, config.lr);
    }
    const double accuracy = accuracy_of(model, val);
    result.history.epochs.push_back(
        {epoch, epoch_loss / static_cast<double>(train.size()), accuracy});
    logger().debug("epoch {} loss {:.6f} val_acc {:.4f}", epoch,
                   result.history.epochs.back().train_loss, accuracy);
    if (accuracy > best_accuracy + config.min_improvement) {
      best_accuracy = accuracy;
      result.history.best_epoch = epoch;
      result.model = model;
      stagnant = 0;
    } else if (++stagnant >= config.patience) {
      result.history.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  return result;
}

Verdict classify(double proba, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw PreconditionError("threshold must be in [0, 1]");
  }
  return proba >= threshold ? Verdict::kAnswerable : Verdict::kUnanswerable;
}

#define AQA_INSTANTIATE(T)                                                     \
  template struct BasicAnswerabilityModel<T>;                                  \
  template BasicAnswerabilityModel<T> build_classifier<T>(                     \
      std::size_t, uint64_t, std::size_t, std::size_t);                        \
  template double predict_logit<T>(const BasicAnswerabilityModel<T>&,          \
                                   std::span<const T>);                        \
  template double predict_proba<T>(const BasicAnswerabilityModel<T>&,          \
                                   std::span<const T>);                        \
  template double proba_input_gradient<T>(const BasicAnswerabilityModel<T>&,   \
                                          std::span<const T>, std::span<T>);   \
  template double bce_loss_and_grad<T>(                                        \
      const BasicAnswerabilityModel<T>&, const Matrix<T>&,                     \
      std::span<const int>, std::span<const std::size_t>, Mode,                \
      std::mt19937_64&, BasicAnswerabilityModel<T>&);

AQA_INSTANTIATE(float)
AQA_INSTANTIATE(double)

#undef AQA_INSTANTIATE

}  // namespace aqa
