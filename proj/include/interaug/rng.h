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

#ifndef INTERAUG_RNG_H_
#define INTERAUG_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace interaug {

// Deterministic RNG with labeled streams. Every component draws from a
// stream derived from (root seed, label, stream id); identical
// (seed, label, stream, call sequence) gives identical draws, and derive()
// depends only on the derivation key, not on draw history. This keeps
// per-utterance augmentation independent of batch scheduling.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::string_view label,
            std::uint64_t stream = 0);

  // Independent child stream; unaffected by draws made on this object.
  SeededRng derive(std::uint64_t substream) const;

  std::uint64_t next_u64();
  // Uniform over the inclusive range [lo, hi].
  int uniform_int(int lo, int hi);
  double uniform_real();  // [0, 1)
  bool bernoulli(double p);
  // Index draw with P(i) = probs[i]; probs must sum to ~1.
  int categorical(std::span<const double> probs);
  // Standard normal via Box-Muller (one value per call, deterministic).
  double gaussian();

 private:
  explicit SeededRng(std::uint64_t derived_key);
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

// Stable 64-bit label hash (FNV-1a); used for stream derivation so streams
// do not depend on std::hash.
std::uint64_t stable_hash(std::string_view s);
std::uint64_t mix_u64(std::uint64_t x);  // splitmix64 finalizer

}  // namespace interaug

#endif  // INTERAUG_RNG_H_
