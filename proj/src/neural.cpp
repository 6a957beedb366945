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

#include "aqa/neural.hpp"

#include <algorithm>
#include <cmath>

#include "aqa/error.hpp"
#include "aqa/kernels.hpp"

namespace aqa {

template <typename T>
void xavier_init(DenseLayer<T>& layer, std::mt19937_64& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (T& w : layer.weight.values()) w = T(dist(rng));
  std::fill(layer.bias.begin(), layer.bias.end(), T(0));
}

template <typename T>
std::vector<T> dense_forward(const DenseLayer<T>& layer, std::span<const T> x) {
  if (x.size() != layer.in_dim()) {
    throw ShapeError("dense input has " + std::to_string(x.size()) +
                     " values, layer expects " + std::to_string(layer.in_dim()));
  }
  std::vector<T> y(layer.out_dim());
  kernels::gemv<T>(layer.weight, x, layer.bias, y);
  return y;
}

template <typename T>
std::vector<T> dense_backward(const DenseLayer<T>& layer, std::span<const T> x,
                              std::span<const T> dy, DenseLayer<T>& grad) {
  if (x.size() != layer.in_dim() || dy.size() != layer.out_dim()) {
    throw ShapeError("dense backward shape mismatch");
  }
  std::vector<T> dx(layer.in_dim(), T(0));
  kernels::gemv_t_acc<T>(layer.weight, dy, dx);
  kernels::ger_acc<T>(dy, x, grad.weight);
  for (std::size_t i = 0; i < dy.size(); ++i) grad.bias[i] += dy[i];
  return dx;
}

template <typename T>
Matrix<T> dense_forward(const DenseLayer<T>& layer, const Matrix<T>& x) {
  if (x.cols() != layer.in_dim()) throw ShapeError("dense batch shape mismatch");
  Matrix<T> y(x.rows(), layer.out_dim());
  kernels::gemm_nt<T>(x, layer.weight, layer.bias, y);
  return y;
}

template <typename T>
Matrix<T> dense_backward(const DenseLayer<T>& layer, const Matrix<T>& x,
                         const Matrix<T>& dy, DenseLayer<T>& grad) {
  if (x.cols() != layer.in_dim() || dy.cols() != layer.out_dim() ||
      x.rows() != dy.rows()) {
    throw ShapeError("dense batch backward shape mismatch");
  }
  Matrix<T> dx(x.rows(), x.cols());
  kernels::gemm_nn_acc<T>(dy, layer.weight, dx);
  kernels::gemm_tn_acc<T>(dy, x, grad.weight);
  for (std::size_t o = 0; o < dy.cols(); ++o) {
    double sum = 0;
    for (std::size_t r = 0; r < dy.rows(); ++r) sum += dy(r, o);
    grad.bias[o] = T(double(grad.bias[o]) + sum);
  }
  return dx;
}

template <typename T>
std::vector<T> dropout(std::span<const T> x, double p, Mode mode,
                       std::mt19937_64& rng, std::vector<T>* mask) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw PreconditionError("dropout probability must be in [0, 1)");
  }
  std::vector<T> y(x.begin(), x.end());
  if (mask) mask->assign(x.size(), T(1));
  if (mode == Mode::kEval || p == 0.0) return y;
  const T scale = T(1.0 / (1.0 - p));
  std::bernoulli_distribution keep(1.0 - p);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const T m = keep(rng) ? scale : T(0);
    y[i] *= m;
    if (mask) (*mask)[i] = m;
  }
  return y;
}

template <typename T>
void log_softmax_rows(Matrix<T>& logits) {
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double sum = 0;
    for (T v : row) sum += std::exp(double(v) - peak);
    const double log_z = peak + std::log(sum);
    for (T& v : row) v = T(double(v) - log_z);
  }
}

template <typename T>
CrossEntropy<T> weighted_nll_sum(const Matrix<T>& logits,
                                 std::span<const int> targets,
                                 std::span<const double> class_weights,
                                 double* weight_total) {
  const std::size_t classes = logits.cols();
  if (targets.size() != logits.rows() || class_weights.size() != classes) {
    throw ShapeError("cross-entropy shape mismatch");
  }
  CrossEntropy<T> out;
  out.dlogits = Matrix<T>(logits.rows(), classes);
  std::vector<double> logp(classes);
  double total = 0;
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    const int y = targets[t];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw PreconditionError("label " + std::to_string(y) + " out of range");
    }
    const auto row = logits.row(t);
    const double peak = *std::max_element(row.begin(), row.end());
    double sum = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      logp[c] = double(row[c]) - peak;
      sum += std::exp(logp[c]);
    }
    const double log_z = std::log(sum);
    const double w = class_weights[static_cast<std::size_t>(y)];
    out.loss += -w * (logp[static_cast<std::size_t>(y)] - log_z);
    total += w;
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(logp[c] - log_z);
      out.dlogits(t, c) = T(w * (p - (static_cast<int>(c) == y ? 1.0 : 0.0)));
    }
  }
  if (weight_total) *weight_total += total;
  return out;
}

template <typename T>
CrossEntropy<T> weighted_cross_entropy(const Matrix<T>& logits,
                                       std::span<const int> targets,
                                       std::span<const double> class_weights) {
  for (double w : class_weights) {
    if (!(w > 0)) throw PreconditionError("class weights must be positive");
  }
  double total = 0;
  CrossEntropy<T> out =
      weighted_nll_sum(logits, targets, class_weights, &total);
  if (total == 0) return out;
  out.loss /= total;
  for (T& d : out.dlogits.values()) d = T(double(d) / total);
  return out;
}

template <typename T>
void adam_step(std::span<const std::span<T>> params,
               std::span<const std::span<const T>> grads, AdamState<T>& state,
               double lr) {
  if (params.size() != grads.size()) throw ShapeError("adam: param/grad count");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), T(0));
      state.v.emplace_back(p.size(), T(0));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam: state size");
  const AdamConfig& c = state.config;
  ++state.step;
  const double correction1 = 1.0 - std::pow(c.beta1, double(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, double(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto p = params[k];
    const auto g = grads[k];
    if (p.size() != g.size() || state.m[k].size() != p.size()) {
      throw ShapeError("adam: tensor " + std::to_string(k) + " shape");
    }
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double grad = double(g[i]) + c.weight_decay * double(p[i]);
      const double mi = c.beta1 * double(m[i]) + (1.0 - c.beta1) * grad;
      const double vi = c.beta2 * double(v[i]) + (1.0 - c.beta2) * grad * grad;
      m[i] = T(mi);
      v[i] = T(vi);
      const double m_hat = mi / correction1;
      const double v_hat = vi / correction2;
      p[i] = T(double(p[i]) - lr * m_hat / (std::sqrt(v_hat) + c.eps));
    }
  }
}

double lr_at(const LrSchedule& schedule, std::size_t t) {
  if (t > schedule.total_steps) {
    throw PreconditionError("schedule step " + std::to_string(t) +
                            " beyond total " +
                            std::to_string(schedule.total_steps));
  }
  if (schedule.total_steps == 0) return schedule.lr_start;
  const double frac =
      static_cast<double>(t) / static_cast<double>(schedule.total_steps);
  return schedule.lr_start + (schedule.lr_end - schedule.lr_start) * frac;
}

GradCheckResult grad_check(const ScalarFunction& fn,
                           std::span<const double> params, double eps) {
  std::vector<double> theta(params.begin(), params.end());
  std::vector<double> analytic(theta.size(), 0.0);
  std::vector<double> scratch(theta.size(), 0.0);
  if (!std::isfinite(fn(theta, analytic))) {
    throw NumericError("grad_check: non-finite function value");
  }
  GradCheckResult result;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + eps;
    const double plus = fn(theta, scratch);
    theta[i] = saved - eps;
    const double minus = fn(theta, scratch);
    theta[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("grad_check: non-finite function value at coordinate " +
                         std::to_string(i));
    }
    const double numeric = (plus - minus) / (2.0 * eps);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), kGradCheckFloor});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = i;
    }
  }
  return result;
}

#define AQA_INSTANTIATE(T)                                                     \
  template void xavier_init<T>(DenseLayer<T>&, std::mt19937_64&);              \
  template std::vector<T> dense_forward<T>(const DenseLayer<T>&,               \
                                           std::span<const T>);                \
  template std::vector<T> dense_backward<T>(                                   \
      const DenseLayer<T>&, std::span<const T>, std::span<const T>,            \
      DenseLayer<T>&);                                                         \
  template Matrix<T> dense_forward<T>(const DenseLayer<T>&, const Matrix<T>&); \
  template Matrix<T> dense_backward<T>(const DenseLayer<T>&, const Matrix<T>&, \
                                       const Matrix<T>&, DenseLayer<T>&);      \
  template std::vector<T> dropout<T>(std::span<const T>, double, Mode,         \
                                     std::mt19937_64&, std::vector<T>*);       \
  template void log_softmax_rows<T>(Matrix<T>&);                               \
  template CrossEntropy<T> weighted_nll_sum<T>(                                \
      const Matrix<T>&, std::span<const int>, std::span<const double>,         \
      double*);                                                                \
  template CrossEntropy<T> weighted_cross_entropy<T>(                          \
      const Matrix<T>&, std::span<const int>, std::span<const double>);        \
  template void adam_step<T>(std::span<const std::span<T>>,                    \
                             std::span<const std::span<const T>>,              \
                             AdamState<T>&, double);

AQA_INSTANTIATE(float)
AQA_INSTANTIATE(double)

#undef AQA_INSTANTIATE

}  // namespace aqa
