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

#ifndef INTERAUG_KERNELS_H_
#define INTERAUG_KERNELS_H_

#include <cstdint>

// Dense double-precision kernels used by the tape ops and the trainer.
//
// Each kernel has an OpenMP variant (the default entry point) and a serial
// reference implementation. The OpenMP variants distribute whole output
// elements across threads and keep every per-element reduction in the same
// serial order, so they are bit-identical to the serial reference for any
// thread count. Tests assert this; tools/bench.cc compares throughput.

namespace interaug {
namespace kernels {

// c[m x n] = a[m x k] * b[k x n]
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_serial(const double* a, const double* b, double* c, int m, int k,
                   int n);

// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(const double* a, const double* b, double* c, int m, int k,
               int n);
void matmul_nt_serial(const double* a, const double* b, double* c, int m,
                      int k, int n);

// c[m x n] = a[k x m]^T * b[k x n]
void matmul_tn(const double* a, const double* b, double* c, int m, int k,
               int n);
void matmul_tn_serial(const double* a, const double* b, double* c, int m,
                      int k, int n);

// out[r][.] = softmax(in[r][.]), stabilized by row-max subtraction.
void softmax_rows(const double* in, double* out, int rows, int cols);
void softmax_rows_serial(const double* in, double* out, int rows, int cols);

// log(sum_i exp(x_i)) over a small contiguous range; -inf aware.
double logsumexp(const double* x, int n);

}  // namespace kernels
}  // namespace interaug

#endif  // INTERAUG_KERNELS_H_
