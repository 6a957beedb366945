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

#include <span>

#include "aqa/matrix.hpp"

// Dense linear-algebra kernels behind the neural layers. Every kernel exists
// twice: `serial` is the reference, `omp` splits output rows across OpenMP
// threads. Both sum every output element in the same order (64-bit
// accumulator), so their results are bitwise identical. The unqualified
// versions pick `omp` for large problems outside an active parallel region.
namespace aqa::kernels {

#define AQA_KERNEL_DECLS                                                       \
  /* y = W x + b (b may be empty) */                                           \
  template <typename T>                                                        \
  void gemv(const Matrix<T>& w, std::span<const T> x, std::span<const T> b,    \
            std::span<T> y);                                                   \
  /* dx += W^T dy */                                                           \
  template <typename T>                                                        \
  void gemv_t_acc(const Matrix<T>& w, std::span<const T> dy, std::span<T> dx); \
  /* dW += dy x^T */                                                           \
  template <typename T>                                                        \
  void ger_acc(std::span<const T> dy, std::span<const T> x, Matrix<T>& dw);    \
  /* Y = X W^T + b */                                                          \
  template <typename T>                                                        \
  void gemm_nt(const Matrix<T>& x, const Matrix<T>& w, std::span<const T> b,   \
               Matrix<T>& y);                                                  \
  /* dX += dY W */                                                             \
  template <typename T>                                                        \
  void gemm_nn_acc(const Matrix<T>& dy, const Matrix<T>& w, Matrix<T>& dx);    \
  /* dW += dY^T X */                                                           \
  template <typename T>                                                        \
  void gemm_tn_acc(const Matrix<T>& dy, const Matrix<T>& x, Matrix<T>& dw);

namespace serial {
AQA_KERNEL_DECLS
}  // namespace serial

namespace omp {
AQA_KERNEL_DECLS
}  // namespace omp

AQA_KERNEL_DECLS

#undef AQA_KERNEL_DECLS

}  // namespace aqa::kernels
