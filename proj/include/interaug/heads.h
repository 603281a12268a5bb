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

#ifndef INTERAUG_HEADS_H_
#define INTERAUG_HEADS_H_

#include "interaug/rng.h"
#include "interaug/tensor.h"

namespace interaug {

// T x D real-valued sequence (encoder states, conditioning features).
struct FeatureSequence {
  Tensor data;

  int frames() const { return data.dim(0); }
  int dim() const { return data.dim(1); }
};

// y = x W + b applied per frame.
struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out

  static Linear create(int in, int out, bool requires_grad = true);
  // Uniform(-1/sqrt(in), 1/sqrt(in)) weights, zero bias.
  void init_fan_in(SeededRng& rng);
  Tensor apply(Tape& tape, const Tensor& x) const;
  int in_dim() const { return weight.dim(0); }
  int out_dim() const { return weight.dim(1); }
};

// The two projections every prediction head and conditioning site shares:
// one D -> |V'| output map used by the final and all intermediate heads,
// one |V'| -> D map reprojecting posteriors into the feature space. A model
// holds exactly one instance of each; sharing is structural.
struct SharedHeads {
  Linear out_projection;   // D -> |V'|
  Linear cond_projection;  // |V'| -> D
};

}  // namespace interaug

#endif  // INTERAUG_HEADS_H_
