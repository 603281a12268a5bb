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

#include "interaug/heads.h"

#include <cmath>

namespace interaug {

Linear Linear::create(int in, int out, bool requires_grad) {
  Linear l;
  l.weight = Tensor({in, out}, requires_grad);
  l.bias = Tensor({1, out}, requires_grad);
  return l;
}

void Linear::init_fan_in(SeededRng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim()));
  for (double& w : weight.mutable_values())
    w = (2.0 * rng.uniform_real() - 1.0) * bound;
  for (double& b : bias.mutable_values()) b = 0.0;
}

Tensor Linear::apply(Tape& tape, const Tensor& x) const {
  return tape.add_row_broadcast(tape.matmul(x, weight), bias);
}

}  // namespace interaug
