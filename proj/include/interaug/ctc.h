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

#ifndef INTERAUG_CTC_H_
#define INTERAUG_CTC_H_

#include <vector>

#include "interaug/tensor.h"

// CTC alignment machinery: the collapsing function, the forward-backward
// loss with its analytic gradient, greedy decoding, and a brute-force path
// enumeration oracle for small instances.
//
// Label convention: the extended vocabulary V' has the blank at index 0 and
// the |V| real tokens at indices 1..|V|. Token sequences carry extended
// indices and never contain 0.

namespace interaug {

struct Vocabulary {
  int num_tokens = 0;  // |V|
  static constexpr int kBlank = 0;

  int extended_size() const { return num_tokens + 1; }  // |V'|
  bool valid_label(int k) const { return k >= 0 && k <= num_tokens; }
  bool valid_token(int k) const { return k >= 1 && k <= num_tokens; }
};

struct TokenSequence {
  std::vector<int> tokens;  // extended-vocabulary ids, all >= 1

  int length() const { return static_cast<int>(tokens.size()); }
  bool operator==(const TokenSequence&) const = default;
};

struct AlignmentPath {
  std::vector<int> labels;  // ids in V', length T

  int length() const { return static_cast<int>(labels.size()); }
};

// Per-frame distribution over V'; each row a probability simplex.
struct PosteriorGrid {
  Tensor probs;  // T x |V'|

  int frames() const { return probs.dim(0); }
  int vocab_ext() const { return probs.dim(1); }
  double at(int t, int k) const { return probs.at(t, k); }
  // Throws if some row is off the simplex by more than tol.
  void validate(double tol = 1e-9) const;
};

// Merges adjacent duplicates, then removes blanks. Labels outside V' raise
// std::out_of_range.
TokenSequence collapse(const AlignmentPath& path, const Vocabulary& vocab);

// Fewest frames on which y can be emitted: |y| plus one forced blank
// between each adjacent repeated pair.
int min_frames_for(const TokenSequence& y);

struct CtcLossResult {
  Tensor loss;    // scalar on the tape; +inf when infeasible
  bool feasible;  // false => zero gradient, loss is +inf
};

// -log sum_{pi in B^-1(y)} prod_t z[t, pi_t] via the forward-backward
// recursion over the blank-interleaved label lattice, in log space. The
// gradient with respect to z is registered on the tape from the alpha*beta
// posterior weights. An infeasible pair (T < min_frames_for(y)) yields
// +inf loss with zero gradient and feasible=false instead of throwing.
CtcLossResult ctc_loss(Tape& tape, const Tensor& z, const TokenSequence& y);

// Loss value only, no tape interaction (evaluation, oracles).
double ctc_loss_value(const Tensor& z, const TokenSequence& y);

// Exact enumeration over all |V'|^T paths whose collapse equals y.
// Guarded: |V'|^T must not exceed 1e7.
double ctc_loss_bruteforce(const Tensor& z, const TokenSequence& y);

// Per-frame argmax (ties toward the lowest index, so blank wins) followed
// by collapse.
TokenSequence greedy_decode(const PosteriorGrid& z);
AlignmentPath argmax_path(const Tensor& z);

}  // namespace interaug

#endif  // INTERAUG_CTC_H_
