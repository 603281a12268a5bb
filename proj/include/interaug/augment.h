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

#ifndef INTERAUG_AUGMENT_H_
#define INTERAUG_AUGMENT_H_

#include <string>

#include "interaug/ctc.h"
#include "interaug/heads.h"
#include "interaug/rng.h"
#include "interaug/tensor.h"

// InterAug: corruption of intermediate predictions used as conditioning
// features, so later layers train on (and learn to fix) simulated errors.
// Two operators act on the conditioning feature sequence C (time and
// feature masking), three act on the token-posterior grid Z (deletion,
// insertion, substitution). All operators are pure given the RNG stream and
// never run at inference.

namespace interaug {

enum class AugOperator {
  kNone,
  kTimeMask,
  kFeatureMask,
  kTokenDelete,
  kTokenInsert,
  kTokenSubstitute,
};

enum class AugPosition {
  kConditioningFeature,  // corrupt C, keep X (the proposed placement)
  kEncoderFeature,       // corrupt X, keep C (position ablation only)
};

// Mask width cap: an absolute frame/channel count or a fraction of the
// dimension, resolved per utterance by flooring.
struct MaskWidth {
  bool fractional = false;
  double value = 0.0;

  static MaskWidth frames(int w) { return {false, static_cast<double>(w)}; }
  static MaskWidth fraction(double f) { return {true, f}; }
  int resolve(int dimension) const;
};

struct AugmentationSpec {
  AugOperator op = AugOperator::kNone;
  double p_time = 1.0;   // probability of applying a time mask
  double p_feat = 1.0;   // probability of applying a feature mask
  MaskWidth W_tau;       // max time-mask width
  MaskWidth W_d;         // max feature-mask width
  double p_del = 0.1;    // per-frame deletion rate
  double p_ins = 0.1;    // per-frame insertion rate
  AugPosition position = AugPosition::kConditioningFeature;
  // The deletion equation reads "keep on draw" while the prose says p_del
  // is the corruption probability; default follows the prose, the flag
  // exposes the other orientation for ablation.
  bool del_draw_keeps = false;
  // Redraw masks/labels independently at every conditioning layer.
  bool redraw_per_layer = true;

  bool is_token_op() const;
  bool is_feature_op() const;
  // Probabilities in [0,1]; token ops only at the conditioning position.
  void validate() const;
};

const char* to_string(AugOperator op);
const char* to_string(AugPosition pos);
AugOperator aug_operator_from_string(const std::string& s);
AugPosition aug_position_from_string(const std::string& s);

// Zeroes one contiguous block of tau ~ U(0, W) rows starting at
// t0 ~ U(0, T - tau), with probability p_time; identity otherwise. The
// input tensor is never mutated. W > T is a configuration error.
Tensor time_mask(Tape& tape, const Tensor& c, const MaskWidth& W_tau,
                 double p_time, SeededRng& rng);

// Same over feature channels: d ~ U(0, W), d0 ~ U(0, D - d).
Tensor feature_mask(Tape& tape, const Tensor& c, const MaskWidth& W_d,
                    double p_feat, SeededRng& rng);

// Frames corrupt independently at rate p_del; a corrupted frame takes the
// blank label, others take the per-frame argmax.
AlignmentPath token_delete(const PosteriorGrid& z, double p_del,
                           SeededRng& rng, bool draw_keeps = false);

// With probability p_ins per frame the blank posterior is masked to -inf
// before the argmax, so blank-argmax frames flip to their best non-blank
// token and other frames are unchanged.
AlignmentPath token_insert(const PosteriorGrid& z, double p_ins,
                           SeededRng& rng);

// Each frame's label is drawn categorically from its posterior row.
AlignmentPath token_substitute(const PosteriorGrid& z, SeededRng& rng);

// One-hot encodes the path over |V'| and applies the shared |V'| -> D
// conditioning projection.
Tensor project_tokens(Tape& tape, const AlignmentPath& path,
                      const SharedHeads& heads);

struct AugmentResult {
  Tensor x_out;  // encoder features, corrupted only in the position ablation
  Tensor c_aug;  // conditioning features; the caller forms X' = x_out + c_aug
};

// Dispatches the configured operator. `z_for_cond` is the grid the
// conditioning branch sees (detached upstream when configured).
AugmentResult apply(Tape& tape, const AugmentationSpec& spec, const Tensor& x,
                    const PosteriorGrid& z_for_cond, const SharedHeads& heads,
                    SeededRng& rng);

}  // namespace interaug

#endif  // INTERAUG_AUGMENT_H_
