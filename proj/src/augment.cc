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

#include "interaug/augment.h"

#include <cmath>
#include <span>
#include <stdexcept>

namespace interaug {

int MaskWidth::resolve(int dimension) const {
  if (fractional)
    return static_cast<int>(std::floor(value * dimension));
  return static_cast<int>(value);
}

bool AugmentationSpec::is_token_op() const {
  return op == AugOperator::kTokenDelete || op == AugOperator::kTokenInsert ||
         op == AugOperator::kTokenSubstitute;
}

bool AugmentationSpec::is_feature_op() const {
  return op == AugOperator::kTimeMask || op == AugOperator::kFeatureMask;
}

void AugmentationSpec::validate() const {
  auto check_prob = [](double p, const char* name) {
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument(std::string("augmentation: ") + name +
                                  " must lie in [0,1]");
  };
  check_prob(p_time, "p_time");
  check_prob(p_feat, "p_feat");
  check_prob(p_del, "p_del");
  check_prob(p_ins, "p_ins");
  if (W_tau.value < 0.0 || W_d.value < 0.0)
    throw std::invalid_argument("augmentation: mask widths must be nonnegative");
  if (position == AugPosition::kEncoderFeature && !is_feature_op())
    throw std::invalid_argument(
        "augmentation: position=encoder_feature is only valid for "
        "time_mask/feature_mask");
}

const char* to_string(AugOperator op) {
  switch (op) {
    case AugOperator::kNone: return "none";
    case AugOperator::kTimeMask: return "time_mask";
    case AugOperator::kFeatureMask: return "feature_mask";
    case AugOperator::kTokenDelete: return "token_delete";
    case AugOperator::kTokenInsert: return "token_insert";
    case AugOperator::kTokenSubstitute: return "token_substitute";
  }
  return "?";
}

const char* to_string(AugPosition pos) {
  return pos == AugPosition::kConditioningFeature ? "conditioning_feature"
                                                  : "encoder_feature";
}

AugOperator aug_operator_from_string(const std::string& s) {
  if (s == "none") return AugOperator::kNone;
  if (s == "time_mask") return AugOperator::kTimeMask;
  if (s == "feature_mask") return AugOperator::kFeatureMask;
  if (s == "token_delete") return AugOperator::kTokenDelete;
  if (s == "token_insert") return AugOperator::kTokenInsert;
  if (s == "token_substitute") return AugOperator::kTokenSubstitute;
  throw std::invalid_argument("unknown augmentation operator: " + s);
}

AugPosition aug_position_from_string(const std::string& s) {
  if (s == "conditioning_feature") return AugPosition::kConditioningFeature;
  if (s == "encoder_feature") return AugPosition::kEncoderFeature;
  throw std::invalid_argument("unknown augmentation position: " + s);
}

namespace {
Tensor masked_block(Tape& tape, const Tensor& c, int begin, int len, int rows,
                    int cols, bool mask_rows) {
  if (len == 0) return c;
  std::vector<double> mask(static_cast<std::size_t>(rows) * cols, 1.0);
  if (mask_rows) {
    for (int r = begin; r < begin + len; ++r)
      for (int j = 0; j < cols; ++j)
        mask[static_cast<std::size_t>(r) * cols + j] = 0.0;
  } else {
    for (int r = 0; r < rows; ++r)
      for (int j = begin; j < begin + len; ++j)
        mask[static_cast<std::size_t>(r) * cols + j] = 0.0;
  }
  return tape.hadamard_const(c, mask);
}
}  // namespace

Tensor time_mask(Tape& tape, const Tensor& c, const MaskWidth& W_tau,
                 double p_time, SeededRng& rng) {
  const int T = c.dim(0), D = c.dim(1);
  const int W = W_tau.resolve(T);
  if (W > T)
    throw std::invalid_argument("time_mask: W_tau exceeds the frame count");
  if (!rng.bernoulli(p_time)) return c;
  const int tau = rng.uniform_int(0, W);
  const int t0 = rng.uniform_int(0, T - tau);
  return masked_block(tape, c, t0, tau, T, D, /*mask_rows=*/true);
}

Tensor feature_mask(Tape& tape, const Tensor& c, const MaskWidth& W_d,
                    double p_feat, SeededRng& rng) {
  const int T = c.dim(0), D = c.dim(1);
  const int W = W_d.resolve(D);
  if (W > D)
    throw std::invalid_argument("feature_mask: W_d exceeds the feature dim");
  if (!rng.bernoulli(p_feat)) return c;
  const int d = rng.uniform_int(0, W);
  const int d0 = rng.uniform_int(0, D - d);
  return masked_block(tape, c, d0, d, T, D, /*mask_rows=*/false);
}

AlignmentPath token_delete(const PosteriorGrid& z, double p_del,
                           SeededRng& rng, bool draw_keeps) {
  AlignmentPath base = argmax_path(z.probs);
  for (int t = 0; t < base.length(); ++t) {
    const bool draw = rng.bernoulli(draw_keeps ? 1.0 - p_del : p_del);
    if (draw) base.labels[t] = Vocabulary::kBlank;
  }
  return base;
}

AlignmentPath token_insert(const PosteriorGrid& z, double p_ins,
                           SeededRng& rng) {
  const int T = z.frames(), K = z.vocab_ext();
  AlignmentPath path;
  path.labels.resize(T);
  for (int t = 0; t < T; ++t) {
    const bool mask_blank = rng.bernoulli(p_ins);
    int best = mask_blank ? 1 : 0;
    for (int k = best + 1; k < K; ++k)
      if (z.at(t, k) > z.at(t, best)) best = k;
    path.labels[t] = best;
  }
  return path;
}

AlignmentPath token_substitute(const PosteriorGrid& z, SeededRng& rng) {
  z.validate(1e-9);
  const int T = z.frames(), K = z.vocab_ext();
  AlignmentPath path;
  path.labels.resize(T);
  const auto& v = z.probs.values();
  for (int t = 0; t < T; ++t)
    path.labels[t] = rng.categorical(
        std::span<const double>(v.data() + static_cast<std::size_t>(t) * K,
                                static_cast<std::size_t>(K)));
  return path;
}

Tensor project_tokens(Tape& tape, const AlignmentPath& path,
                      const SharedHeads& heads) {
  const int T = path.length();
  const int K = heads.cond_projection.in_dim();
  std::vector<double> onehot(static_cast<std::size_t>(T) * K, 0.0);
  for (int t = 0; t < T; ++t) {
    const int label = path.labels[t];
    if (label < 0 || label >= K)
      throw std::out_of_range("project_tokens: label outside V'");
    onehot[static_cast<std::size_t>(t) * K + label] = 1.0;
  }
  Tensor grid({T, K}, std::move(onehot));
  return heads.cond_projection.apply(tape, grid);
}

AugmentResult apply(Tape& tape, const AugmentationSpec& spec, const Tensor& x,
                    const PosteriorGrid& z_for_cond, const SharedHeads& heads,
                    SeededRng& rng) {
  spec.validate();
  switch (spec.op) {
    case AugOperator::kNone:
      return {x, heads.cond_projection.apply(tape, z_for_cond.probs)};
    case AugOperator::kTimeMask:
    case AugOperator::kFeatureMask: {
      Tensor c = heads.cond_projection.apply(tape, z_for_cond.probs);
      auto run_mask = [&](const Tensor& in) {
        return spec.op == AugOperator::kTimeMask
                   ? time_mask(tape, in, spec.W_tau, spec.p_time, rng)
                   : feature_mask(tape, in, spec.W_d, spec.p_feat, rng);
      };
      if (spec.position == AugPosition::kConditioningFeature)
        return {x, run_mask(c)};
      return {run_mask(x), c};
    }
    case AugOperator::kTokenDelete:
      return {x, project_tokens(tape,
                                token_delete(z_for_cond, spec.p_del, rng,
                                             spec.del_draw_keeps),
                                heads)};
    case AugOperator::kTokenInsert:
      return {x, project_tokens(
                     tape, token_insert(z_for_cond, spec.p_ins, rng), heads)};
    case AugOperator::kTokenSubstitute:
      return {x,
              project_tokens(tape, token_substitute(z_for_cond, rng), heads)};
  }
  throw std::logic_error("augment: unreachable operator");
}

}  // namespace interaug
