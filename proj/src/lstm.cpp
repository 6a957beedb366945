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

#include "aqa/lstm.hpp"

#include <cmath>

#include "aqa/error.hpp"
#include "aqa/kernels.hpp"

namespace aqa {

template <typename T>
BiLstm<T>::BiLstm(std::size_t input_dim_, std::size_t hidden_,
                  std::size_t num_layers_, double dropout_)
    : input_dim(input_dim_),
      hidden(hidden_),
      num_layers(num_layers_),
      dropout(dropout_) {
  if (hidden == 0 || num_layers == 0) {
    throw PreconditionError("BiLSTM needs hidden > 0 and at least one layer");
  }
  for (std::size_t layer = 0; layer < num_layers; ++layer) {
    for (int dir = 0; dir < 2; ++dir) {
      LstmCell<T> cell;
      cell.w_ih = Matrix<T>(4 * hidden, layer_input_dim(layer));
      cell.w_hh = Matrix<T>(4 * hidden, hidden);
      cell.bias.assign(4 * hidden, T(0));
      cells.push_back(std::move(cell));
    }
  }
}

template <typename T>
void BiLstm<T>::append_params(const std::string& prefix,
                              std::vector<ParamView<T>>& out) {
  for (std::size_t layer = 0; layer < num_layers; ++layer) {
    for (std::size_t dir = 0; dir < 2; ++dir) {
      LstmCell<T>& c = cell(layer, dir);
      const std::string name = prefix + ".l" + std::to_string(layer) +
                               (dir == 0 ? ".fwd" : ".bwd");
      out.push_back({name + ".w_ih", c.w_ih.values(),
                     {c.w_ih.rows(), c.w_ih.cols()}});
      out.push_back({name + ".w_hh", c.w_hh.values(),
                     {c.w_hh.rows(), c.w_hh.cols()}});
      out.push_back({name + ".bias", c.bias, {c.bias.size()}});
    }
  }
}

template <typename T>
void init_bilstm(BiLstm<T>& model, std::mt19937_64& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(model.hidden));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (LstmCell<T>& cell : model.cells) {
    for (T& w : cell.w_ih.values()) w = T(dist(rng));
    for (T& w : cell.w_hh.values()) w = T(dist(rng));
    for (T& b : cell.bias) b = T(dist(rng));
  }
}

namespace {

template <typename T>
T act_sigmoid(double x) {
  return T(x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x)));
}

// Runs one direction over `inputs`, filling `trace`.
template <typename T>
void run_cell(const LstmCell<T>& cell, std::size_t hidden,
              const Matrix<T>& inputs, bool reverse, std::span<const T> h_init,
              std::span<const T> c_init, LstmTrace<T>& trace) {
  const std::size_t steps = inputs.rows();
  const std::size_t h = hidden;
  Matrix<T> pre(steps, 4 * h);
  kernels::gemm_nt<T>(inputs, cell.w_ih, cell.bias, pre);
  trace.gates = Matrix<T>(steps, 4 * h);
  trace.c = Matrix<T>(steps, h);
  trace.h = Matrix<T>(steps, h);
  std::vector<T> recur(4 * h);
  std::span<const T> h_prev = h_init;
  std::span<const T> c_prev = c_init;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    kernels::gemv<T>(cell.w_hh, h_prev, {}, recur);
    auto gates = trace.gates.row(t);
    auto c = trace.c.row(t);
    auto out = trace.h.row(t);
    const auto a = pre.row(t);
    for (std::size_t j = 0; j < h; ++j) {
      const T i = act_sigmoid<T>(double(a[j]) + double(recur[j]));
      const T f = act_sigmoid<T>(double(a[h + j]) + double(recur[h + j]));
      const T g = T(std::tanh(double(a[2 * h + j]) + double(recur[2 * h + j])));
      const T o =
          act_sigmoid<T>(double(a[3 * h + j]) + double(recur[3 * h + j]));
      gates[j] = i;
      gates[h + j] = f;
      gates[2 * h + j] = g;
      gates[3 * h + j] = o;
      c[j] = T(double(f) * double(c_prev[j]) + double(i) * double(g));
      out[j] = T(double(o) * std::tanh(double(c[j])));
    }
    h_prev = trace.h.row(t);
    c_prev = trace.c.row(t);
  }
}

// Backpropagates dH (T x H, gradient of the loss w.r.t. this direction's
// hidden outputs). Adds dX into d_inputs and parameter gradients into grad;
// writes the gradients w.r.t. the initial states.
template <typename T>
void backprop_cell(const LstmCell<T>& cell, std::size_t hidden,
                   const Matrix<T>& inputs, bool reverse,
                   std::span<const T> h_init, std::span<const T> c_init,
                   const LstmTrace<T>& trace, const Matrix<T>& d_h,
                   Matrix<T>& d_inputs, LstmCell<T>& grad, std::span<T> dh_init,
                   std::span<T> dc_init) {
  const std::size_t steps = inputs.rows();
  const std::size_t h = hidden;
  Matrix<T> d_pre(steps, 4 * h);
  std::vector<T> dh_next(h, T(0));
  std::vector<T> dc_next(h, T(0));
  std::vector<T> dh_rec(h);
  for (std::size_t k = steps; k-- > 0;) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    const bool first = k == 0;
    const std::size_t t_prev = reverse ? t + 1 : t - 1;
    std::span<const T> h_prev = first ? h_init : trace.h.row(t_prev);
    std::span<const T> c_prev = first ? c_init : trace.c.row(t_prev);
    const auto gates = trace.gates.row(t);
    const auto c = trace.c.row(t);
    auto da = d_pre.row(t);
    for (std::size_t j = 0; j < h; ++j) {
      const double i = gates[j], f = gates[h + j], g = gates[2 * h + j],
                   o = gates[3 * h + j];
      const double dh = double(d_h(t, j)) + double(dh_next[j]);
      const double tc = std::tanh(double(c[j]));
      const double d_o = dh * tc;
      const double dc = double(dc_next[j]) + dh * o * (1.0 - tc * tc);
      const double d_i = dc * g;
      const double d_g = dc * i;
      const double d_f = dc * double(c_prev[j]);
      dc_next[j] = T(dc * f);
      da[j] = T(d_i * i * (1.0 - i));
      da[h + j] = T(d_f * f * (1.0 - f));
      da[2 * h + j] = T(d_g * (1.0 - g * g));
      da[3 * h + j] = T(d_o * o * (1.0 - o));
    }
    std::fill(dh_rec.begin(), dh_rec.end(), T(0));
    kernels::gemv_t_acc<T>(cell.w_hh, da, dh_rec);
    kernels::ger_acc<T>(std::span<const T>(da), h_prev, grad.w_hh);
    dh_next = dh_rec;
  }
  std::copy(dh_next.begin(), dh_next.end(), dh_init.begin());
  std::copy(dc_next.begin(), dc_next.end(), dc_init.begin());
  kernels::gemm_tn_acc<T>(d_pre, inputs, grad.w_ih);
  kernels::gemm_nn_acc<T>(d_pre, cell.w_ih, d_inputs);
  for (std::size_t o = 0; o < 4 * h; ++o) {
    double sum = 0;
    for (std::size_t t = 0; t < steps; ++t) sum += d_pre(t, o);
    grad.bias[o] = T(double(grad.bias[o]) + sum);
  }
}

}  // namespace

template <typename T>
Matrix<T> bilstm_forward(const BiLstm<T>& model, const Matrix<T>& inputs,
                         const Matrix<T>& h0, const Matrix<T>& c0, Mode mode,
                         std::mt19937_64* rng, BiLstmCache<T>* cache) {
  const std::size_t h = model.hidden;
  if (inputs.cols() != model.input_dim) {
    throw ShapeError("BiLSTM input width " + std::to_string(inputs.cols()) +
                     " != " + std::to_string(model.input_dim));
  }
  if (h0.rows() != model.num_states() || h0.cols() != h ||
      c0.rows() != model.num_states() || c0.cols() != h) {
    throw ShapeError("BiLSTM initial state must be (2*layers, H)");
  }
  const bool drop = mode == Mode::kTrain && model.dropout > 0.0;
  if (drop && rng == nullptr) throw PreconditionError("dropout needs an rng");
  const std::size_t steps = inputs.rows();

  BiLstmCache<T> local;
  BiLstmCache<T>& c = cache ? *cache : local;
  c.layer_inputs.assign(model.num_layers, Matrix<T>());
  c.dropout_masks.assign(model.num_layers, Matrix<T>());
  c.traces.assign(model.cells.size(), LstmTrace<T>());
  c.h0 = h0;
  c.c0 = c0;

  Matrix<T> layer_in = inputs;
  Matrix<T> out;
  for (std::size_t layer = 0; layer < model.num_layers; ++layer) {
    if (layer > 0 && drop) {
      Matrix<T> mask(steps, 2 * h);
      std::vector<T> m;
      auto dropped = dropout<T>(layer_in.values(), model.dropout, mode, *rng, &m);
      std::copy(dropped.begin(), dropped.end(), layer_in.data());
      std::copy(m.begin(), m.end(), mask.data());
      c.dropout_masks[layer] = std::move(mask);
    }
    c.layer_inputs[layer] = layer_in;
    out = Matrix<T>(steps, 2 * h);
    for (std::size_t dir = 0; dir < 2; ++dir) {
      const std::size_t idx = layer * 2 + dir;
      LstmTrace<T>& trace = c.traces[idx];
      run_cell(model.cells[idx], h, c.layer_inputs[layer], dir == 1,
               h0.row(idx), c0.row(idx), trace);
      for (std::size_t t = 0; t < steps; ++t) {
        std::copy_n(trace.h.row(t).data(), h, out.row(t).data() + dir * h);
      }
    }
    layer_in = out;
  }
  return out;
}

template <typename T>
BiLstmGrads<T> bilstm_backward(const BiLstm<T>& model,
                               const BiLstmCache<T>& cache,
                               const Matrix<T>& d_outputs, BiLstm<T>& grads) {
  const std::size_t h = model.hidden;
  const std::size_t steps = cache.layer_inputs.empty()
                                ? 0
                                : cache.layer_inputs.front().rows();
  if (d_outputs.rows() != steps || d_outputs.cols() != 2 * h) {
    throw ShapeError("BiLSTM output gradient must be T x 2H");
  }
  BiLstmGrads<T> result;
  result.h0 = Matrix<T>(model.num_states(), h);
  result.c0 = Matrix<T>(model.num_states(), h);
  Matrix<T> d_out = d_outputs;
  for (std::size_t layer = model.num_layers; layer-- > 0;) {
    const Matrix<T>& layer_in = cache.layer_inputs[layer];
    Matrix<T> d_in(steps, layer_in.cols());
    for (std::size_t dir = 0; dir < 2; ++dir) {
      const std::size_t idx = layer * 2 + dir;
      Matrix<T> d_h(steps, h);
      for (std::size_t t = 0; t < steps; ++t) {
        std::copy_n(d_out.row(t).data() + dir * h, h, d_h.row(t).data());
      }
      backprop_cell(model.cells[idx], h, layer_in, dir == 1,
                    cache.h0.row(idx), cache.c0.row(idx), cache.traces[idx],
                    d_h, d_in, grads.cells[idx], result.h0.row(idx),
                    result.c0.row(idx));
    }
    if (layer > 0 && !cache.dropout_masks[layer].empty()) {
      const auto mask = cache.dropout_masks[layer].values();
      auto values = d_in.values();
      for (std::size_t i = 0; i < values.size(); ++i) values[i] *= mask[i];
    }
    d_out = std::move(d_in);
  }
  result.inputs = std::move(d_out);
  return result;
}

#define AQA_INSTANTIATE(T)                                                     \
  template struct BiLstm<T>;                                                   \
  template void init_bilstm<T>(BiLstm<T>&, std::mt19937_64&);                  \
  template Matrix<T> bilstm_forward<T>(const BiLstm<T>&, const Matrix<T>&,     \
                                       const Matrix<T>&, const Matrix<T>&,     \
                                       Mode, std::mt19937_64*,                 \
                                       BiLstmCache<T>*);                       \
  template BiLstmGrads<T> bilstm_backward<T>(                                  \
      const BiLstm<T>&, const BiLstmCache<T>&, const Matrix<T>&, BiLstm<T>&);

AQA_INSTANTIATE(float)
AQA_INSTANTIATE(double)

#undef AQA_INSTANTIATE

}  // namespace aqa
