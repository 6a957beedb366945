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

#include <omp.h>

#include <random>

#include "doctest.h"

#include "aqa/kernels.hpp"
#include "aqa/matrix.hpp"

using namespace aqa;

namespace {

template <typename T>
Matrix<T> random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix<T> m(r, c);
  for (T& v : m.values()) v = static_cast<T>(u(rng));
  return m;
}

template <typename T>
std::vector<T> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<T> v(n);
  for (T& x : v) x = static_cast<T>(u(rng));
  return v;
}

struct ThreadGuard {
  int saved = omp_get_max_threads();
  explicit ThreadGuard(int n) { omp_set_num_threads(n); }
  ~ThreadGuard() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE_TEMPLATE("gemv matches a naive loop", T, float, double) {
  std::mt19937_64 rng(1);
  const auto w = random_matrix<T>(37, 53, rng);
  const auto x = random_vector<T>(53, rng);
  const auto b = random_vector<T>(37, rng);
  std::vector<T> y(37);
  kernels::serial::gemv<T>(w, x, b, y);
  for (std::size_t r = 0; r < 37; ++r) {
    double acc = b[r];
    for (std::size_t c = 0; c < 53; ++c) acc += double(w(r, c)) * double(x[c]);
    CHECK(double(y[r]) == doctest::Approx(acc).epsilon(1e-6));
  }
}

TEST_CASE_TEMPLATE("gemm_nt matches a naive loop", T, float, double) {
  std::mt19937_64 rng(2);
  const auto x = random_matrix<T>(9, 31, rng);
  const auto w = random_matrix<T>(17, 31, rng);
  Matrix<T> y(9, 17);
  kernels::serial::gemm_nt<T>(x, w, {}, y);
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 17; ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < 31; ++k) acc += double(x(i, k)) * double(w(j, k));
      CHECK(double(y(i, j)) == doctest::Approx(acc).epsilon(1e-6));
    }
  }
}

TEST_CASE("accumulating kernels agree with their definitions") {
  std::mt19937_64 rng(3);
  const auto w = random_matrix<double>(6, 4, rng);
  const auto dy = random_matrix<double>(5, 6, rng);
  const auto x = random_matrix<double>(5, 4, rng);

  Matrix<double> dx(5, 4, 1.0), dw(6, 4, 1.0);
  kernels::serial::gemm_nn_acc<double>(dy, w, dx);
  kernels::serial::gemm_tn_acc<double>(dy, x, dw);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      double acc = 1.0;
      for (std::size_t j = 0; j < 6; ++j) acc += dy(i, j) * w(j, k);
      CHECK(dx(i, k) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
  for (std::size_t j = 0; j < 6; ++j) {
    for (std::size_t k = 0; k < 4; ++k) {
      double acc = 1.0;
      for (std::size_t i = 0; i < 5; ++i) acc += dy(i, j) * x(i, k);
      CHECK(dw(j, k) == doctest::Approx(acc).epsilon(1e-12));
    }
  }

  std::vector<double> gx(4, 0.0);
  Matrix<double> gw(6, 4);
  kernels::serial::gemv_t_acc<double>(w, dy.row(0), gx);
  kernels::serial::ger_acc<double>(dy.row(0), x.row(0), gw);
  for (std::size_t k = 0; k < 4; ++k) {
    double acc = 0;
    for (std::size_t j = 0; j < 6; ++j) acc += w(j, k) * dy(0, j);
    CHECK(gx[k] == doctest::Approx(acc).epsilon(1e-12));
    CHECK(gw(2, k) == doctest::Approx(dy(0, 2) * x(0, k)).epsilon(1e-12));
  }
}

TEST_CASE_TEMPLATE("omp kernels are bitwise equal to serial", T, float, double) {
  ThreadGuard threads(4);
  std::mt19937_64 rng(4);
  for (const auto [m, n, k] : {std::array<std::size_t, 3>{1, 1, 1},
                               {3, 7, 5},
                               {64, 300, 257},
                               {130, 65, 33}}) {
    const auto w = random_matrix<T>(n, k, rng);
    const auto x = random_matrix<T>(m, k, rng);
    const auto dy = random_matrix<T>(m, n, rng);
    const auto b = random_vector<T>(n, rng);

    Matrix<T> y1(m, n), y2(m, n);
    kernels::serial::gemm_nt<T>(x, w, b, y1);
    kernels::omp::gemm_nt<T>(x, w, b, y2);
    CHECK(y1 == y2);

    Matrix<T> dx1(m, k, T(0.5)), dx2 = dx1;
    kernels::serial::gemm_nn_acc<T>(dy, w, dx1);
    kernels::omp::gemm_nn_acc<T>(dy, w, dx2);
    CHECK(dx1 == dx2);

    Matrix<T> dw1(n, k, T(0.25)), dw2 = dw1;
    kernels::serial::gemm_tn_acc<T>(dy, x, dw1);
    kernels::omp::gemm_tn_acc<T>(dy, x, dw2);
    CHECK(dw1 == dw2);

    std::vector<T> v1(n), v2(n);
    kernels::serial::gemv<T>(w, x.row(0), b, v1);
    kernels::omp::gemv<T>(w, x.row(0), b, v2);
    CHECK(v1 == v2);
    kernels::gemv<T>(w, x.row(0), b, v2);
    CHECK(v1 == v2);

    std::vector<T> g1(k), g2(k);
    kernels::serial::gemv_t_acc<T>(w, dy.row(0), g1);
    kernels::omp::gemv_t_acc<T>(w, dy.row(0), g2);
    CHECK(g1 == g2);

    Matrix<T> o1(n, k), o2(n, k);
    kernels::serial::ger_acc<T>(dy.row(0), x.row(0), o1);
    kernels::omp::ger_acc<T>(dy.row(0), x.row(0), o2);
    CHECK(o1 == o2);
  }
}
