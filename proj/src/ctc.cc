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

#include "interaug/ctc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "interaug/kernels.h"

namespace interaug {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

// Extended label sequence: blanks interleaved around y, length 2L+1.
std::vector<int> extended_labels(const TokenSequence& y) {
  std::vector<int> ext(2 * y.tokens.size() + 1, Vocabulary::kBlank);
  for (std::size_t l = 0; l < y.tokens.size(); ++l) ext[2 * l + 1] = y.tokens[l];
  return ext;
}

void check_grid(const Tensor& z) {
  if (z.rank() != 2)
    throw std::invalid_argument("ctc: posterior grid must be 2-d (T x |V'|)");
  if (z.dim(1) < 2)
    throw std::invalid_argument("ctc: extended vocabulary needs >= 2 entries");
}

void check_targets(const TokenSequence& y, int vocab_ext) {
  for (int tok : y.tokens)
    if (tok < 1 || tok >= vocab_ext)
      throw std::out_of_range("ctc: target token " + std::to_string(tok) +
                              " outside extended vocabulary of size " +
                              std::to_string(vocab_ext));
}

struct Lattice {
  std::vector<int> ext;           // extended labels, size S
  std::vector<double> log_alpha;  // T x S
  std::vector<double> log_beta;   // T x S
  double log_prob = kNegInf;      // log p(y | z)
};

// Forward-backward over the blank-interleaved lattice, all in log space.
// alpha/beta follow the convention where both include frame t's emission,
// so paths through (t, s) have log mass alpha + beta - log z[t, ext[s]].
Lattice forward_backward(const Tensor& z, const TokenSequence& y) {
  const int T = z.dim(0), K = z.dim(1);
  Lattice lat;
  lat.ext = extended_labels(y);
  const int S = static_cast<int>(lat.ext.size());
  const auto& zv = z.values();
  auto lz = [&](int t, int k) {
    return safe_log(zv[static_cast<std::size_t>(t) * K + k]);
  };

  lat.log_alpha.assign(static_cast<std::size_t>(T) * S, kNegInf);
  lat.log_beta.assign(static_cast<std::size_t>(T) * S, kNegInf);
  auto a = [&](int t, int s) -> double& {
    return lat.log_alpha[static_cast<std::size_t>(t) * S + s];
  };
  auto b = [&](int t, int s) -> double& {
    return lat.log_beta[static_cast<std::size_t>(t) * S + s];
  };
  // A lattice state can be entered from itself, its predecessor, or (when
  // its label differs from the one two back) the state two back.
  auto can_skip = [&](int s) {
    return s >= 2 && lat.ext[s] != Vocabulary::kBlank &&
           lat.ext[s] != lat.ext[s - 2];
  };

  a(0, 0) = lz(0, lat.ext[0]);
  if (S > 1) a(0, 1) = lz(0, lat.ext[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double terms[3] = {a(t - 1, s), kNegInf, kNegInf};
      if (s >= 1) terms[1] = a(t - 1, s - 1);
      if (can_skip(s)) terms[2] = a(t - 1, s - 2);
      a(t, s) = kernels::logsumexp(terms, 3) + lz(t, lat.ext[s]);
    }
  }

  b(T - 1, S - 1) = lz(T - 1, lat.ext[S - 1]);
  if (S > 1) b(T - 1, S - 2) = lz(T - 1, lat.ext[S - 2]);
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double terms[3] = {b(t + 1, s), kNegInf, kNegInf};
      if (s + 1 < S) terms[1] = b(t + 1, s + 1);
      if (s + 2 < S && can_skip(s + 2)) terms[2] = b(t + 1, s + 2);
      b(t, s) = kernels::logsumexp(terms, 3) + lz(t, lat.ext[s]);
    }
  }

  double finals[2] = {a(T - 1, S - 1), S > 1 ? a(T - 1, S - 2) : kNegInf};
  lat.log_prob = kernels::logsumexp(finals, 2);
  return lat;
}

// d(-log p)/dz[t,k] = -(1/p) * sum_{s: ext[s]=k} alpha(t,s) beta(t,s) / z^2
std::vector<double> loss_grad(const Lattice& lat, const Tensor& z) {
  const int T = z.dim(0), K = z.dim(1);
  const int S = static_cast<int>(lat.ext.size());
  const auto& zv = z.values();
  std::vector<double> grad(zv.size(), 0.0);
  std::vector<double> acc(K);
  for (int t = 0; t < T; ++t) {
    std::fill(acc.begin(), acc.end(), kNegInf);
    for (int s = 0; s < S; ++s) {
      const double m = lat.log_alpha[static_cast<std::size_t>(t) * S + s] +
                       lat.log_beta[static_cast<std::size_t>(t) * S + s];
      double pair[2] = {acc[lat.ext[s]], m};
      acc[lat.ext[s]] = kernels::logsumexp(pair, 2);
    }
    for (int k = 0; k < K; ++k) {
      if (acc[k] == kNegInf) continue;  // no path mass through this cell
      const double zv_tk =
          std::max(zv[static_cast<std::size_t>(t) * K + k], 1e-300);
      grad[static_cast<std::size_t>(t) * K + k] =
          -std::exp(acc[k] - lat.log_prob - 2.0 * std::log(zv_tk));
    }
  }
  return grad;
}
}  // namespace

void PosteriorGrid::validate(double tol) const {
  const int T = frames(), K = vocab_ext();
  for (int t = 0; t < T; ++t) {
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      const double v = at(t, k);
      if (v < 0.0)
        throw std::domain_error("posterior grid: negative entry at frame " +
                                std::to_string(t));
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol)
      throw std::domain_error("posterior grid: row " + std::to_string(t) +
                              " sums to " + std::to_string(sum));
  }
}

TokenSequence collapse(const AlignmentPath& path, const Vocabulary& vocab) {
  TokenSequence out;
  int prev = -1;
  for (int label : path.labels) {
    if (!vocab.valid_label(label))
      throw std::out_of_range("collapse: label " + std::to_string(label) +
                              " outside extended vocabulary of size " +
                              std::to_string(vocab.extended_size()));
    if (label != prev && label != Vocabulary::kBlank)
      out.tokens.push_back(label);
    prev = label;
  }
  return out;
}

int min_frames_for(const TokenSequence& y) {
  int repeats = 0;
  for (std::size_t l = 1; l < y.tokens.size(); ++l)
    if (y.tokens[l] == y.tokens[l - 1]) ++repeats;
  return y.length() + repeats;
}

CtcLossResult ctc_loss(Tape& tape, const Tensor& z, const TokenSequence& y) {
  check_grid(z);
  check_targets(y, z.dim(1));
  if (z.dim(0) < min_frames_for(y)) {
    return {Tensor::scalar(std::numeric_limits<double>::infinity()), false};
  }
  Lattice lat = forward_backward(z, y);
  const double loss_value = -lat.log_prob;
  Tensor loss = tape.make_output({1}, {loss_value}, z.requires_grad());
  if (z.requires_grad()) {
    tape.track(z);
    std::vector<double> grad = loss_grad(lat, z);
    Tensor tz = z, tl = loss;
    tape.record([tz, tl, grad = std::move(grad)]() mutable {
      if (!tl.has_grad()) return;
      const double g = tl.grad()[0];
      auto& buf = tz.grad_buffer();
      for (std::size_t i = 0; i < grad.size(); ++i) buf[i] += g * grad[i];
    });
  }
  return {loss, true};
}

double ctc_loss_value(const Tensor& z, const TokenSequence& y) {
  check_grid(z);
  check_targets(y, z.dim(1));
  if (z.dim(0) < min_frames_for(y))
    return std::numeric_limits<double>::infinity();
  return -forward_backward(z, y).log_prob;
}

double ctc_loss_bruteforce(const Tensor& z, const TokenSequence& y) {
  check_grid(z);
  const int T = z.dim(0), K = z.dim(1);
  check_targets(y, K);
  double paths = 1.0;
  for (int t = 0; t < T; ++t) {
    paths *= K;
    if (paths > 1e7)
      throw std::invalid_argument(
          "ctc_loss_bruteforce: |V'|^T exceeds the 1e7 enumeration guard");
  }
  const Vocabulary vocab{K - 1};
  std::vector<int> path(T, 0);
  double total = 0.0;
  // Odometer over all K^T label assignments.
  while (true) {
    AlignmentPath p{path};
    if (collapse(p, vocab) == y) {
      double prob = 1.0;
      for (int t = 0; t < T; ++t)
        prob *= z.values()[static_cast<std::size_t>(t) * K + path[t]];
      total += prob;
    }
    int pos = T - 1;
    while (pos >= 0 && path[pos] == K - 1) path[pos--] = 0;
    if (pos < 0) break;
    ++path[pos];
  }
  return -safe_log(total);
}

AlignmentPath argmax_path(const Tensor& z) {
  check_grid(z);
  const int T = z.dim(0), K = z.dim(1);
  AlignmentPath path;
  path.labels.resize(T);
  for (int t = 0; t < T; ++t) {
    int best = 0;
    for (int k = 1; k < K; ++k)
      if (z.values()[static_cast<std::size_t>(t) * K + k] >
          z.values()[static_cast<std::size_t>(t) * K + best])
        best = k;
    path.labels[t] = best;
  }
  return path;
}

TokenSequence greedy_decode(const PosteriorGrid& z) {
  const Vocabulary vocab{z.vocab_ext() - 1};
  return collapse(argmax_path(z.probs), vocab);
}

}  // namespace interaug
