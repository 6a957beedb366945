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
#include <random>
#include <string>
#include <vector>

#include "aqa/matrix.hpp"
#include "aqa/neural.hpp"

namespace aqa {

// One direction of one layer. Gate blocks are stacked as (input, forget,
// cell, output), each H rows.
template <typename T>
struct LstmCell {
  Matrix<T> w_ih;  // 4H x in
  Matrix<T> w_hh;  // 4H x H
  std::vector<T> bias;  // 4H
};

// Stacked bidirectional LSTM. Cells are indexed layer * 2 + direction
// (0 forward, 1 backward), the same order as the rows of h0/c0.
template <typename T>
struct BiLstm {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::size_t num_layers = 0;
  double dropout = 0.0;  // applied between layers in train mode
  std::vector<LstmCell<T>> cells;

  BiLstm() = default;
  BiLstm(std::size_t input_dim, std::size_t hidden, std::size_t num_layers = 2,
         double dropout = 0.1);

  std::size_t layer_input_dim(std::size_t layer) const {
    return layer == 0 ? input_dim : 2 * hidden;
  }
  std::size_t num_states() const { return 2 * num_layers; }
  LstmCell<T>& cell(std::size_t layer, std::size_t dir) {
    return cells[layer * 2 + dir];
  }
  const LstmCell<T>& cell(std::size_t layer, std::size_t dir) const {
    return cells[layer * 2 + dir];
  }
  void append_params(const std::string& prefix, std::vector<ParamView<T>>& out);
};

// Uniform in ±1/sqrt(H) for every weight and bias.
template <typename T>
void init_bilstm(BiLstm<T>& model, std::mt19937_64& rng);

// Activations recorded by the forward pass, indexed by time step.
template <typename T>
struct LstmTrace {
  Matrix<T> gates;  // T x 4H, post-activation
  Matrix<T> c;      // T x H
  Matrix<T> h;      // T x H
};

template <typename T>
struct BiLstmCache {
  std::vector<Matrix<T>> layer_inputs;   // per layer, T x in
  std::vector<Matrix<T>> dropout_masks;  // per layer (layer 0 unused)
  std::vector<LstmTrace<T>> traces;      // per cell
  Matrix<T> h0;
  Matrix<T> c0;
};

// inputs: T x D; h0, c0: (2 * layers) x H. Returns T x 2H, the top layer's
// forward and backward hidden states side by side. `rng` is required in
// train mode when dropout > 0.
template <typename T>
Matrix<T> bilstm_forward(const BiLstm<T>& model, const Matrix<T>& inputs,
                         const Matrix<T>& h0, const Matrix<T>& c0, Mode mode,
                         std::mt19937_64* rng, BiLstmCache<T>* cache = nullptr);

template <typename T>
struct BiLstmGrads {
  Matrix<T> inputs;
  Matrix<T> h0;
  Matrix<T> c0;
};

// Parameter gradients are added into `grads` (same shape as `model`).
template <typename T>
BiLstmGrads<T> bilstm_backward(const BiLstm<T>& model,
                               const BiLstmCache<T>& cache,
                               const Matrix<T>& d_outputs, BiLstm<T>& grads);

}  // namespace aqa
