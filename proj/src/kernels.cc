// Copyright 2026 The InterAug-CTC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "interaug/kernels.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace interaug {
namespace kernels {

namespace {
// Below this many multiply-adds the parallel region costs more than it saves.
constexpr std::int64_t kMatmulCutoff = 1 << 15;
constexpr std::int64_t kSoftmaxCutoff = 1 << 13;

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double dot_strided(const double* a, const double* b, int n,
                          int stride_a, int stride_b) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i * stride_a] * b[i * stride_b];
  return s;
}

inline void softmax_row(const double* in, double* out, int cols) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < cols; ++j) mx = std::max(mx, in[j]);
  double sum = 0.0;
  for (int j = 0; j < cols; ++j) {
    out[j] = std::exp(in[j] - mx);
    sum += out[j];
  }
  const double inv = 1.0 / sum;
  for (int j = 0; j < cols; ++j) out[j] *= inv;
}
}  // namespace

void matmul_serial(const double* a, const double* b, double* c, int m, int k,
                   int n) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      c[i * n + j] = dot_strided(a + i * k, b + j, k, 1, n);
}

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  // Contiguous-dot form: one k x n transpose buys unit-stride inner loops.
  // Each element still accumulates over p in ascending order, so results
  // are bit-identical to matmul_serial.
  thread_local std::vector<double> bt;
  bt.resize(static_cast<std::size_t>(n) * k);
  for (int p = 0; p < k; ++p)
    for (int j = 0; j < n; ++j)
      bt[static_cast<std::size_t>(j) * k + p] =
          b[static_cast<std::size_t>(p) * n + j];
  const double* btp = bt.data();
  const std::int64_t work = std::int64_t{m} * k * n;
#pragma omp parallel for schedule(static) if (work > kMatmulCutoff)
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) c[i * n + j] = dot(a + i * k, btp + j * k, k);
}

void matmul_nt_serial(const double* a, const double* b, double* c, int m,
                      int k, int n) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) c[i * n + j] = dot(a + i * k, b + j * k, k);
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k,
               int n) {
  const std::int64_t work = std::int64_t{m} * k * n;
#pragma omp parallel for schedule(static) if (work > kMatmulCutoff)
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) c[i * n + j] = dot(a + i * k, b + j * k, k);
}

void matmul_tn_serial(const double* a, const double* b, double* c, int m,
                      int k, int n) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      c[i * n + j] = dot_strided(a + i, b + j, k, m, n);
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k,
               int n) {
  // Row-accumulation form with unit-stride access to b and c; per-element
  // addition order over p is unchanged, so this matches the serial
  // reference bit for bit.
  const std::int64_t work = std::int64_t{m} * k * n;
#pragma omp parallel for schedule(static) if (work > kMatmulCutoff)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double api = a[static_cast<std::size_t>(p) * m + i];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void softmax_rows_serial(const double* in, double* out, int rows, int cols) {
  for (int r = 0; r < rows; ++r)
    softmax_row(in + r * cols, out + r * cols, cols);
}

void softmax_rows(const double* in, double* out, int rows, int cols) {
  const std::int64_t work = std::int64_t{rows} * cols;
#pragma omp parallel for schedule(static) if (work > kSoftmaxCutoff)
  for (int r = 0; r < rows; ++r)
    softmax_row(in + r * cols, out + r * cols, cols);
}

double logsumexp(const double* x, int n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) mx = std::max(mx, x[i]);
  if (!std::isfinite(mx)) return mx;  // all -inf (or a stray +inf)
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(x[i] - mx);
  return mx + std::log(sum);
}

}  // namespace kernels
}  // namespace interaug
