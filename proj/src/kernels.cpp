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

#include "aqa/kernels.hpp"

#include <omp.h>

#include <vector>

namespace aqa::kernels {

namespace {

using Acc = double;

template <typename T>
void gemv_rows(const Matrix<T>& w, std::span<const T> x, std::span<const T> b,
               std::span<T> y, std::size_t r0, std::size_t r1) {
  const std::size_t n = w.cols();
  for (std::size_t r = r0; r < r1; ++r) {
    const T* row = w.data() + r * n;
    Acc sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += Acc(row[j]) * Acc(x[j]);
    if (!b.empty()) sum += Acc(b[r]);
    y[r] = T(sum);
  }
}

template <typename T>
void gemv_t_cols(const Matrix<T>& w, std::span<const T> dy, std::span<T> dx,
                 std::size_t c0, std::size_t c1) {
  std::vector<Acc> acc(c1 - c0, Acc(0));
  const std::size_t n = w.cols();
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const Acc g = dy[i];
    const T* row = w.data() + i * n;
    for (std::size_t j = c0; j < c1; ++j) acc[j - c0] += g * Acc(row[j]);
  }
  for (std::size_t j = c0; j < c1; ++j) dx[j] = T(Acc(dx[j]) + acc[j - c0]);
}

template <typename T>
void ger_rows(std::span<const T> dy, std::span<const T> x, Matrix<T>& dw,
              std::size_t r0, std::size_t r1) {
  const std::size_t n = dw.cols();
  for (std::size_t r = r0; r < r1; ++r) {
    const Acc g = dy[r];
    T* row = dw.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) row[j] = T(Acc(row[j]) + g * Acc(x[j]));
  }
}

template <typename T>
void gemm_nt_rows(const Matrix<T>& x, const Matrix<T>& w, std::span<const T> b,
                  Matrix<T>& y, std::size_t r0, std::size_t r1) {
  for (std::size_t r = r0; r < r1; ++r) gemv_rows(w, x.row(r), b, y.row(r), 0, w.rows());
}

template <typename T>
void gemm_nn_rows(const Matrix<T>& dy, const Matrix<T>& w, Matrix<T>& dx,
                  std::size_t r0, std::size_t r1) {
  for (std::size_t r = r0; r < r1; ++r) {
    gemv_t_cols(w, dy.row(r), dx.row(r), 0, w.cols());
  }
}

template <typename T>
void gemm_tn_rows(const Matrix<T>& dy, const Matrix<T>& x, Matrix<T>& dw,
                  std::size_t o0, std::size_t o1) {
  const std::size_t n = x.cols();
  std::vector<Acc> acc(n);
  for (std::size_t o = o0; o < o1; ++o) {
    std::fill(acc.begin(), acc.end(), Acc(0));
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const Acc g = dy(r, o);
      if (g == 0) continue;
      const T* row = x.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) acc[j] += g * Acc(row[j]);
    }
    T* out = dw.data() + o * n;
    for (std::size_t j = 0; j < n; ++j) out[j] = T(Acc(out[j]) + acc[j]);
  }
}

// Static contiguous partition of [0, n) across the team.
template <typename Body>
void parallel_ranges(std::size_t n, Body body) {
#pragma omp parallel
  {
    const std::size_t threads = static_cast<std::size_t>(omp_get_num_threads());
    const std::size_t id = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t chunk = (n + threads - 1) / threads;
    const std::size_t lo = std::min(n, id * chunk);
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo < hi) body(lo, hi);
  }
}

bool worth_parallel(std::size_t work) {
  return work >= (std::size_t{1} << 15) && !omp_in_parallel() &&
         omp_get_max_threads() > 1;
}

}  // namespace

namespace serial {

template <typename T>
void gemv(const Matrix<T>& w, std::span<const T> x, std::span<const T> b,
          std::span<T> y) {
  gemv_rows(w, x, b, y, 0, w.rows());
}

template <typename T>
void gemv_t_acc(const Matrix<T>& w, std::span<const T> dy, std::span<T> dx) {
  gemv_t_cols(w, dy, dx, 0, w.cols());
}

template <typename T>
void ger_acc(std::span<const T> dy, std::span<const T> x, Matrix<T>& dw) {
  ger_rows(dy, x, dw, 0, dw.rows());
}

template <typename T>
void gemm_nt(const Matrix<T>& x, const Matrix<T>& w, std::span<const T> b,
             Matrix<T>& y) {
  gemm_nt_rows(x, w, b, y, 0, x.rows());
}

template <typename T>
void gemm_nn_acc(const Matrix<T>& dy, const Matrix<T>& w, Matrix<T>& dx) {
  gemm_nn_rows(dy, w, dx, 0, dy.rows());
}

template <typename T>
void gemm_tn_acc(const Matrix<T>& dy, const Matrix<T>& x, Matrix<T>& dw) {
  gemm_tn_rows(dy, x, dw, 0, dw.rows());
}

}  // namespace serial

namespace omp {

template <typename T>
void gemv(const Matrix<T>& w, std::span<const T> x, std::span<const T> b,
          std::span<T> y) {
  parallel_ranges(w.rows(), [&](std::size_t lo, std::size_t hi) {
    gemv_rows(w, x, b, y, lo, hi);
  });
}

template <typename T>
void gemv_t_acc(const Matrix<T>& w, std::span<const T> dy, std::span<T> dx) {
  parallel_ranges(w.cols(), [&](std::size_t lo, std::size_t hi) {
    gemv_t_cols(w, dy, dx, lo, hi);
  });
}

template <typename T>
void ger_acc(std::span<const T> dy, std::span<const T> x, Matrix<T>& dw) {
  parallel_ranges(dw.rows(), [&](std::size_t lo, std::size_t hi) {
    ger_rows(dy, x, dw, lo, hi);
  });
}

template <typename T>
void gemm_nt(const Matrix<T>& x, const Matrix<T>& w, std::span<const T> b,
             Matrix<T>& y) {
  parallel_ranges(x.rows(), [&](std::size_t lo, std::size_t hi) {
    gemm_nt_rows(x, w, b, y, lo, hi);
  });
}

template <typename T>
void gemm_nn_acc(const Matrix<T>& dy, const Matrix<T>& w, Matrix<T>& dx) {
  parallel_ranges(dy.rows(), [&](std::size_t lo, std::size_t hi) {
    gemm_nn_rows(dy, w, dx, lo, hi);
  });
}

template <typename T>
void gemm_tn_acc(const Matrix<T>& dy, const Matrix<T>& x, Matrix<T>& dw) {
  parallel_ranges(dw.rows(), [&](std::size_t lo, std::size_t hi) {
    gemm_tn_rows(dy, x, dw, lo, hi);
  });
}

}  // namespace omp

template <typename T>
void gemv(const Matrix<T>& w, std::span<const T> x, std::span<const T> b,
          std::span<T> y) {
  worth_parallel(w.size()) ? omp::gemv(w, x, b, y) : serial::gemv(w, x, b, y);
}

template <typename T>
void gemv_t_acc(const Matrix<T>& w, std::span<const T> dy, std::span<T> dx) {
  worth_parallel(w.size()) ? omp::gemv_t_acc(w, dy, dx)
                           : serial::gemv_t_acc(w, dy, dx);
}

template <typename T>
void ger_acc(std::span<const T> dy, std::span<const T> x, Matrix<T>& dw) {
  worth_parallel(dw.size()) ? omp::ger_acc(dy, x, dw)
                            : serial::ger_acc(dy, x, dw);
}

template <typename T>
void gemm_nt(const Matrix<T>& x, const Matrix<T>& w, std::span<const T> b,
             Matrix<T>& y) {
  worth_parallel(x.rows() * w.size()) ? omp::gemm_nt(x, w, b, y)
                                      : serial::gemm_nt(x, w, b, y);
}

template <typename T>
void gemm_nn_acc(const Matrix<T>& dy, const Matrix<T>& w, Matrix<T>& dx) {
  worth_parallel(dy.rows() * w.size()) ? omp::gemm_nn_acc(dy, w, dx)
                                       : serial::gemm_nn_acc(dy, w, dx);
}

template <typename T>
void gemm_tn_acc(const Matrix<T>& dy, const Matrix<T>& x, Matrix<T>& dw) {
  worth_parallel(x.rows() * dw.size()) ? omp::gemm_tn_acc(dy, x, dw)
                                       : serial::gemm_tn_acc(dy, x, dw);
}

#define AQA_INSTANTIATE(NS, T)                                                 \
  template void NS gemv<T>(const Matrix<T>&, std::span<const T>,               \
                           std::span<const T>, std::span<T>);                  \
  template void NS gemv_t_acc<T>(const Matrix<T>&, std::span<const T>,         \
                                 std::span<T>);                                \
  template void NS ger_acc<T>(std::span<const T>, std::span<const T>,          \
                              Matrix<T>&);                                     \
  template void NS gemm_nt<T>(const Matrix<T>&, const Matrix<T>&,              \
                              std::span<const T>, Matrix<T>&);                 \
  template void NS gemm_nn_acc<T>(const Matrix<T>&, const Matrix<T>&,          \
                                  Matrix<T>&);                                 \
  template void NS gemm_tn_acc<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);

AQA_INSTANTIATE(serial::, float)
AQA_INSTANTIATE(serial::, double)
AQA_INSTANTIATE(omp::, float)
AQA_INSTANTIATE(omp::, double)
AQA_INSTANTIATE(, float)
AQA_INSTANTIATE(, double)

#undef AQA_INSTANTIATE

}  // namespace aqa::kernels
