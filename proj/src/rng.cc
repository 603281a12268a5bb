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

#include "interaug/rng.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace interaug {

std::uint64_t mix_u64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SeededRng::SeededRng(std::uint64_t seed, std::string_view label,
                     std::uint64_t stream)
    : SeededRng(mix_u64(mix_u64(seed ^ stable_hash(label)) ^ stream)) {}

SeededRng::SeededRng(std::uint64_t derived_key)
    : key_(derived_key), engine_(mix_u64(derived_key)) {}

SeededRng SeededRng::derive(std::uint64_t substream) const {
  return SeededRng(mix_u64(key_ ^ mix_u64(substream ^ 0xd6e8feb86659fd93ULL)));
}

std::uint64_t SeededRng::next_u64() { return engine_(); }

int SeededRng::uniform_int(int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
  std::uniform_int_distribution<int> d(lo, hi);
  return d(engine_);
}

double SeededRng::uniform_real() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

bool SeededRng::bernoulli(double p) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("bernoulli: probability outside [0,1]");
  return uniform_real() < p;
}

int SeededRng::categorical(std::span<const double> probs) {
  const double u = uniform_real();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  // Rounding left u past the accumulated mass; take the last nonzero bin.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return static_cast<int>(i);
  throw std::invalid_argument("categorical: all-zero distribution");
}

double SeededRng::gaussian() {
  // Box-Muller; draws two uniforms per value to stay call-sequence stable.
  const double u1 = 1.0 - uniform_real();  // (0, 1]
  const double u2 = uniform_real();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace interaug
