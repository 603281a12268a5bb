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

#ifndef INTERAUG_ENCODER_H_
#define INTERAUG_ENCODER_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "interaug/augment.h"
#include "interaug/ctc.h"
#include "interaug/heads.h"

// The self-conditioned encoder: N same-shape sequence layers, softmax heads
// at the intermediate layer set, a shared back-projection of predictions
// into the feature space, and additive conditioning. During training the
// conditioning input can be routed through an augmentation operator; at
// inference the stack reduces exactly to self-conditioned CTC.

namespace interaug {

enum class BlockKind {
  kMlp,           // residual per-frame MLP
  kMlpAttention,  // single-head self-attention followed by the MLP
};

struct EncoderConfig {
  int num_layers = 6;
  int model_dim = 32;
  int vocab_size_ext = 9;  // |V'| = |V| + 1
  std::vector<int> intermediate_layers = {2, 4};  // strictly increasing, < N
  double mix_weight = 0.5;                        // lambda
  BlockKind block_kind = BlockKind::kMlpAttention;
  int hidden_width = 64;
  // When set, conditioning sees a constant copy of the intermediate grid;
  // by default gradients flow through it as the update equations read.
  bool detach_conditioning = false;

  bool is_intermediate(int layer) const;
  void validate() const;
};

const char* to_string(BlockKind k);
BlockKind block_kind_from_string(const std::string& s);

// One encoder layer. Attention tensors stay empty for kMlp.
struct LayerParams {
  Linear attn_q, attn_k, attn_v, attn_o;  // D -> D
  Linear ff1;                             // D -> hidden
  Linear ff2;                             // hidden -> D
};

struct ForwardResult {
  PosteriorGrid final_grid;
  std::vector<PosteriorGrid> intermediate_grids;  // one per layer in N-set
};

// Per-layer tensors captured for inspection (reduction checks, demos).
struct ForwardTrace {
  struct Layer {
    int index = 0;                  // 1-based
    Tensor encoder_out;             // X^(n)
    Tensor conditioned;             // X'^(n)
    std::optional<PosteriorGrid> grid;  // Z^(n) for intermediate layers
  };
  std::vector<Layer> layers;
};

// Full model: input projection into the encoder width, the layer stack, and
// the two shared head projections.
class Model {
 public:
  Model() = default;
  // Fan-in uniform weights, zero biases, all layers same shape.
  static Model init(const EncoderConfig& cfg, int input_dim,
                    std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }
  int input_dim() const { return input_dim_; }
  const SharedHeads& heads() const { return heads_; }
  const std::vector<LayerParams>& layers() const { return layers_; }

  // Stable name -> tensor registry; the order defines the checkpoint
  // layout and the optimizer state layout.
  const std::vector<std::pair<std::string, Tensor>>& named_params() const {
    return params_;
  }
  void zero_grad();
  // Deep copy with fresh tensors (training worker replicas).
  Model clone() const;

  // Projects raw features (T x input_dim) and runs the encoder stack.
  // `aug` enables the training-time corruption pipeline; null means
  // inference (no random draws anywhere on that path).
  ForwardResult forward(Tape& tape, const Tensor& features,
                        const AugmentationSpec* aug = nullptr,
                        SeededRng* rng = nullptr,
                        ForwardTrace* trace = nullptr) const;

 private:
  void rebuild_param_registry();
  EncoderConfig cfg_;
  int input_dim_ = 0;
  Linear input_projection_;
  std::vector<LayerParams> layers_;
  SharedHeads heads_;
  std::vector<std::pair<std::string, Tensor>> params_;
  friend Model make_model_from_parts(EncoderConfig, int, Linear,
                                     std::vector<LayerParams>, SharedHeads);
};

// Same-shape layer map with a residual path: zero-initialized blocks pass
// the input through unchanged.
Tensor encode_layer(Tape& tape, const EncoderConfig& cfg,
                    const LayerParams& layer, const Tensor& x);

// Softmax head; the identical code path serves intermediate and final
// predictions (the projection is shared by construction).
PosteriorGrid intermediate_predict(Tape& tape, const Tensor& x,
                                   const SharedHeads& heads);

// X^(n) + Linear(Z^(n)) at intermediate layers, X^(n) elsewhere (returned
// as the same tensor, bit-identical).
Tensor condition(Tape& tape, const EncoderConfig& cfg, int layer,
                 const Tensor& x, const PosteriorGrid& z,
                 const SharedHeads& heads);

struct MixedLossResult {
  Tensor total;                      // scalar on the tape
  double final_loss = 0.0;           // value of the last-layer CTC term
  std::vector<double> inter_losses;  // per intermediate layer
  bool feasible = true;
};

// (1 - lambda) * L_ctc(final, y) + (lambda / |N|) * sum L_ctc(inter, y).
// Empty `inters` with lambda > 0 is a configuration error.
MixedLossResult mixed_loss(Tape& tape, const PosteriorGrid& final_grid,
                           const std::vector<PosteriorGrid>& inters,
                           const TokenSequence& y, double lambda);

// Versioned binary checkpoint: config, input width, then the named
// parameter tensors in registry order. Byte-exact round trips.
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);
// Arithmetic mean of same-shape checkpoints, loaded from disk.
Model average_model_files(const std::vector<std::string>& paths);

}  // namespace interaug

#endif  // INTERAUG_ENCODER_H_
