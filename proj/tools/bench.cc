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

// Serial-reference vs OpenMP kernel benchmark. The OpenMP kernels are
// bit-identical to the serial ones by construction; this target reports the
// throughput difference on training-shaped workloads.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "interaug/ctc.h"
#include "interaug/kernels.h"
#include "interaug/rng.h"

namespace {

using interaug::SeededRng;
namespace kernels = interaug::kernels;

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> random_vec(std::size_t n, SeededRng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

void bench_matmul(int m, int k, int n, int reps, SeededRng& rng) {
  const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
  const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
  std::vector<double> c(static_cast<std::size_t>(m) * n);
  const double serial = time_ms(
      [&] { kernels::matmul_serial(a.data(), b.data(), c.data(), m, k, n); },
      reps);
  const double parallel = time_ms(
      [&] { kernels::matmul(a.data(), b.data(), c.data(), m, k, n); }, reps);
  std::printf("matmul %4dx%4dx%4d   serial %9.3f ms   omp %9.3f ms   x%.2f\n",
              m, k, n, serial, parallel, serial / parallel);
}

void bench_softmax(int rows, int cols, int reps, SeededRng& rng) {
  const auto in = random_vec(static_cast<std::size_t>(rows) * cols, rng);
  std::vector<double> out(in.size());
  const double serial = time_ms(
      [&] { kernels::softmax_rows_serial(in.data(), out.data(), rows, cols); },
      reps);
  const double parallel = time_ms(
      [&] { kernels::softmax_rows(in.data(), out.data(), rows, cols); }, reps);
  std::printf("softmax %5d x %4d    serial %9.3f ms   omp %9.3f ms   x%.2f\n",
              rows, cols, serial, parallel, serial / parallel);
}

// Batched CTC loss: trainer-style parallelism over independent utterances.
void bench_ctc_batch(int batch, int frames, int vocab_ext, int target_len,
                     int reps, SeededRng& rng) {
  std::vector<interaug::Tensor> grids;
  std::vector<interaug::TokenSequence> targets;
  for (int b = 0; b < batch; ++b) {
    std::vector<double> probs(static_cast<std::size_t>(frames) * vocab_ext);
    for (int t = 0; t < frames; ++t) {
      double sum = 0.0;
      for (int k = 0; k < vocab_ext; ++k) {
        const double v = 0.05 + rng.uniform_real();
        probs[static_cast<std::size_t>(t) * vocab_ext + k] = v;
        sum += v;
      }
      for (int k = 0; k < vocab_ext; ++k)
        probs[static_cast<std::size_t>(t) * vocab_ext + k] /= sum;
    }
    grids.emplace_back(std::vector<int>{frames, vocab_ext}, std::move(probs));
    interaug::TokenSequence y;
    for (int l = 0; l < target_len; ++l)
      y.tokens.push_back(rng.uniform_int(1, vocab_ext - 1));
    targets.push_back(std::move(y));
  }
  std::vector<double> losses(batch);
  const double serial = time_ms(
      [&] {
        for (int b = 0; b < batch; ++b)
          losses[b] = interaug::ctc_loss_value(grids[b], targets[b]);
      },
      reps);
  const double parallel = time_ms(
      [&] {
#pragma omp parallel for schedule(dynamic)
        for (int b = 0; b < batch; ++b)
          losses[b] = interaug::ctc_loss_value(grids[b], targets[b]);
      },
      reps);
  std::printf(
      "ctc batch %3d (T=%3d)  serial %9.3f ms   omp %9.3f ms   x%.2f\n",
      batch, frames, serial, parallel, serial / parallel);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  SeededRng rng(42, "bench");
  bench_matmul(64, 64, 64, 200, rng);
  bench_matmul(256, 256, 256, 20, rng);
  bench_matmul(512, 512, 512, 5, rng);
  bench_softmax(1024, 64, 200, rng);
  bench_softmax(8192, 256, 20, rng);
  bench_ctc_batch(64, 120, 9, 10, 10, rng);
  return 0;
}
