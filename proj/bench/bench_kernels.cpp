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

// Serial reference vs OpenMP kernels on layer-sized problems.

#include <benchmark/benchmark.h>

#include <random>

#include "aqa/kernels.hpp"

namespace {

using aqa::Matrix;

Matrix<float> random_matrix(std::size_t rows, std::size_t cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  Matrix<float> m(rows, cols);
  for (float& v : m.values()) v = dist(rng);
  return m;
}

template <bool kParallel>
void BM_Gemv(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix<float> w = random_matrix(n, n, 1);
  const Matrix<float> x = random_matrix(1, n, 2);
  std::vector<float> y(n);
  for (auto _ : state) {
    if constexpr (kParallel) {
      aqa::kernels::omp::gemv<float>(w, x.row(0), {}, y);
    } else {
      aqa::kernels::serial::gemv<float>(w, x.row(0), {}, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(n * n));
}

template <bool kParallel>
void BM_GemmNt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix<float> x = random_matrix(n, 300, 3);
  const Matrix<float> w = random_matrix(1200, 300, 4);
  Matrix<float> y(n, 1200);
  for (auto _ : state) {
    if constexpr (kParallel) {
      aqa::kernels::omp::gemm_nt<float>(x, w, {}, y);
    } else {
      aqa::kernels::serial::gemm_nt<float>(x, w, {}, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(n * 1200 * 300));
}

template <bool kParallel>
void BM_GemmTnAcc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix<float> dy = random_matrix(n, 1200, 5);
  const Matrix<float> x = random_matrix(n, 300, 6);
  Matrix<float> dw(1200, 300);
  for (auto _ : state) {
    if constexpr (kParallel) {
      aqa::kernels::omp::gemm_tn_acc<float>(dy, x, dw);
    } else {
      aqa::kernels::serial::gemm_tn_acc<float>(dy, x, dw);
    }
    benchmark::DoNotOptimize(dw.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(n * 1200 * 300));
}

BENCHMARK_TEMPLATE(BM_Gemv, false)->Arg(256)->Arg(1024);
BENCHMARK_TEMPLATE(BM_Gemv, true)->Arg(256)->Arg(1024);
BENCHMARK_TEMPLATE(BM_GemmNt, false)->Arg(64)->Arg(256);
BENCHMARK_TEMPLATE(BM_GemmNt, true)->Arg(64)->Arg(256);
BENCHMARK_TEMPLATE(BM_GemmTnAcc, false)->Arg(64)->Arg(256);
BENCHMARK_TEMPLATE(BM_GemmTnAcc, true)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
