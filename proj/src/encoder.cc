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

#include "interaug/encoder.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace interaug {

bool EncoderConfig::is_intermediate(int layer) const {
  return std::find(intermediate_layers.begin(), intermediate_layers.end(),
                   layer) != intermediate_layers.end();
}

void EncoderConfig::validate() const {
  if (num_layers < 1) throw std::invalid_argument("encoder: num_layers < 1");
  if (model_dim < 1) throw std::invalid_argument("encoder: model_dim < 1");
  if (hidden_width < 1) throw std::invalid_argument("encoder: hidden_width < 1");
  if (vocab_size_ext < 2)
    throw std::invalid_argument("encoder: vocab_size_ext < 2");
  int prev = 0;
  for (int n : intermediate_layers) {
    if (n <= prev)
      throw std::invalid_argument(
          "encoder: intermediate_layers must be strictly increasing");
    if (n < 1 || n >= num_layers)
      throw std::invalid_argument(
          "encoder: intermediate layer indices must lie in [1, N-1]");
    prev = n;
  }
  if (intermediate_layers.empty()) {
    if (mix_weight != 0.0)
      throw std::invalid_argument(
          "encoder: mix_weight must be 0 when no intermediate layers are set");
  } else if (mix_weight <= 0.0 || mix_weight >= 1.0) {
    throw std::invalid_argument("encoder: mix_weight must lie in (0,1)");
  }
}

const char* to_string(BlockKind k) {
  return k == BlockKind::kMlp ? "mlp" : "mlp_attention";
}

BlockKind block_kind_from_string(const std::string& s) {
  if (s == "mlp") return BlockKind::kMlp;
  if (s == "mlp_attention") return BlockKind::kMlpAttention;
  throw std::invalid_argument("unknown block kind: " + s);
}

Tensor encode_layer(Tape& tape, const EncoderConfig& cfg,
                    const LayerParams& layer, const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != cfg.model_dim)
    throw std::invalid_argument("encode_layer: input must be T x model_dim");
  Tensor h = x;
  if (cfg.block_kind == BlockKind::kMlpAttention) {
    const Tensor q = layer.attn_q.apply(tape, h);
    const Tensor k = layer.attn_k.apply(tape, h);
    const Tensor v = layer.attn_v.apply(tape, h);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.model_dim));
    Tensor scores = tape.scale(tape.matmul(q, tape.transpose(k)), inv_sqrt_d);
    Tensor attn = tape.matmul(tape.softmax_rows(scores), v);
    h = tape.add(h, layer.attn_o.apply(tape, attn));
  }
  Tensor ff = layer.ff2.apply(tape, tape.tanh(layer.ff1.apply(tape, h)));
  return tape.add(h, ff);
}

PosteriorGrid intermediate_predict(Tape& tape, const Tensor& x,
                                   const SharedHeads& heads) {
  return {tape.softmax_rows(heads.out_projection.apply(tape, x))};
}

Tensor condition(Tape& tape, const EncoderConfig& cfg, int layer,
                 const Tensor& x, const PosteriorGrid& z,
    const SharedHeads& heads) {
  if (!cfg.is_intermediate(layer)) return x;
  return tape.add(x, heads.cond_projection.apply(tape, z.probs));
}

Model Model::init(const EncoderConfig& cfg, int input_dim,
                  std::uint64_t seed) {
  cfg.validate();
  if (input_dim < 1) throw std::invalid_argument("model: input_dim < 1");
  Model m;
  m.cfg_ = cfg;
  m.input_dim_ = input_dim;
  SeededRng rng(seed, "model-init");
  m.input_projection_ = Linear::create(input_dim, cfg.model_dim);
  m.input_projection_.init_fan_in(rng);
  m.layers_.resize(cfg.num_layers);
  for (auto& layer : m.layers_) {
    if (cfg.block_kind == BlockKind::kMlpAttention) {
      layer.attn_q = Linear::create(cfg.model_dim, cfg.model_dim);
      layer.attn_k = Linear::create(cfg.model_dim, cfg.model_dim);
      layer.attn_v = Linear::create(cfg.model_dim, cfg.model_dim);
      layer.attn_o = Linear::create(cfg.model_dim, cfg.model_dim);
      layer.attn_q.init_fan_in(rng);
      layer.attn_k.init_fan_in(rng);
      layer.attn_v.init_fan_in(rng);
      layer.attn_o.init_fan_in(rng);
    }
    layer.ff1 = Linear::create(cfg.model_dim, cfg.hidden_width);
    layer.ff2 = Linear::create(cfg.hidden_width, cfg.model_dim);
    layer.ff1.init_fan_in(rng);
    layer.ff2.init_fan_in(rng);
  }
  m.heads_.out_projection = Linear::create(cfg.model_dim, cfg.vocab_size_ext);
  m.heads_.cond_projection = Linear::create(cfg.vocab_size_ext, cfg.model_dim);
  m.heads_.out_projection.init_fan_in(rng);
  m.heads_.cond_projection.init_fan_in(rng);
  m.rebuild_param_registry();
  return m;
}

void Model::rebuild_param_registry() {
  params_.clear();
  auto put = [&](const std::string& name, const Linear& l) {
    params_.emplace_back(name + ".weight", l.weight);
    params_.emplace_back(name + ".bias", l.bias);
  };
  put("input_projection", input_projection_);
  for (int i = 0; i < static_cast<int>(layers_.size()); ++i) {
    const std::string prefix = "layers." + std::to_string(i);
    if (cfg_.block_kind == BlockKind::kMlpAttention) {
      put(prefix + ".attn_q", layers_[i].attn_q);
      put(prefix + ".attn_k", layers_[i].attn_k);
      put(prefix + ".attn_v", layers_[i].attn_v);
      put(prefix + ".attn_o", layers_[i].attn_o);
    }
    put(prefix + ".ff1", layers_[i].ff1);
    put(prefix + ".ff2", layers_[i].ff2);
  }
  put("heads.out_projection", heads_.out_projection);
  put("heads.cond_projection", heads_.cond_projection);
}

void Model::zero_grad() {
  for (auto& [name, p] : params_) {
    Tensor t = p;
    t.zero_grad();
  }
}

Model Model::clone() const {
  Model m;
  m.cfg_ = cfg_;
  m.input_dim_ = input_dim_;
  auto copy_linear = [](const Linear& l) {
    Linear out;
    out.weight = Tensor(l.weight.shape(), l.weight.values(), true);
    out.bias = Tensor(l.bias.shape(), l.bias.values(), true);
    return out;
  };
  m.input_projection_ = copy_linear(input_projection_);
  m.layers_.reserve(layers_.size());
  for (const auto& layer : layers_) {
    LayerParams lp;
    if (cfg_.block_kind == BlockKind::kMlpAttention) {
      lp.attn_q = copy_linear(layer.attn_q);
      lp.attn_k = copy_linear(layer.attn_k);
      lp.attn_v = copy_linear(layer.attn_v);
      lp.attn_o = copy_linear(layer.attn_o);
    }
    lp.ff1 = copy_linear(layer.ff1);
    lp.ff2 = copy_linear(layer.ff2);
    m.layers_.push_back(std::move(lp));
  }
  m.heads_.out_projection = copy_linear(heads_.out_projection);
  m.heads_.cond_projection = copy_linear(heads_.cond_projection);
  m.rebuild_param_registry();
  return m;
}

ForwardResult Model::forward(Tape& tape, const Tensor& features,
                             const AugmentationSpec* aug, SeededRng* rng,
                             ForwardTrace* trace) const {
  if (features.rank() != 2 || features.dim(1) != input_dim_)
    throw std::invalid_argument("model: features must be T x input_dim");
  if (aug && aug->op != AugOperator::kNone && rng == nullptr)
    throw std::invalid_argument("model: augmentation requires an rng stream");

  ForwardResult result;
  Tensor x_prev = input_projection_.apply(tape, features);
  for (int n = 1; n <= cfg_.num_layers; ++n) {
    Tensor x = encode_layer(tape, cfg_, layers_[n - 1], x_prev);
    Tensor x_cond = x;
    std::optional<PosteriorGrid> grid;
    if (cfg_.is_intermediate(n)) {
      PosteriorGrid z = intermediate_predict(tape, x, heads_);
      grid = z;
      result.intermediate_grids.push_back(z);
      PosteriorGrid z_cond =
          cfg_.detach_conditioning ? PosteriorGrid{z.probs.detached()} : z;
      if (aug) {
        SeededRng layer_rng =
            aug->redraw_per_layer ? rng->derive(static_cast<std::uint64_t>(n))
                                  : rng->derive(0);
        AugmentResult a =
            interaug::apply(tape, *aug, x, z_cond, heads_, layer_rng);
        x_cond = tape.add(a.x_out, a.c_aug);
      } else {
        x_cond = condition(tape, cfg_, n, x, z_cond, heads_);
      }
    }
    if (trace) trace->layers.push_back({n, x, x_cond, grid});
    x_prev = x_cond;
  }
  result.final_grid = intermediate_predict(tape, x_prev, heads_);
  return result;
}

MixedLossResult mixed_loss(Tape& tape, const PosteriorGrid& final_grid,
                           const std::vector<PosteriorGrid>& inters,
                           const TokenSequence& y, double lambda) {
  if (lambda > 0.0 && inters.empty())
    throw std::invalid_argument(
        "mixed_loss: lambda > 0 requires intermediate grids");
  MixedLossResult out;
  CtcLossResult final_loss = ctc_loss(tape, final_grid.probs, y);
  out.final_loss = final_loss.loss.item();
  if (!final_loss.feasible) {
    out.feasible = false;
    out.total = final_loss.loss;
    return out;
  }
  if (lambda == 0.0) {
    out.total = final_loss.loss;
    return out;
  }
  Tensor total = tape.scale(final_loss.loss, 1.0 - lambda);
  const double w = lambda / static_cast<double>(inters.size());
  for (const auto& grid : inters) {
    CtcLossResult li = ctc_loss(tape, grid.probs, y);
    out.inter_losses.push_back(li.loss.item());
    total = tape.add(total, tape.scale(li.loss, w));
  }
  out.total = total;
  return out;
}

namespace {
constexpr char kCkptMagic[8] = {'I', 'A', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw std::runtime_error(std::string("checkpoint: truncated reading ") +
                             what);
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is, const char* what) {
  const auto len = read_pod<std::uint32_t>(is, what);
  std::string s(len, '\0');
  if (len && !is.read(s.data(), len))
    throw std::runtime_error(std::string("checkpoint: truncated reading ") +
                             what);
  return s;
}
}  // namespace

Model make_model_from_parts(EncoderConfig cfg, int input_dim, Linear input_proj,
                            std::vector<LayerParams> layers,
                            SharedHeads heads) {
  Model m;
  m.cfg_ = std::move(cfg);
  m.input_dim_ = input_dim;
  m.input_projection_ = std::move(input_proj);
  m.layers_ = std::move(layers);
  m.heads_ = std::move(heads);
  m.rebuild_param_registry();
  return m;
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
  os.write(kCkptMagic, sizeof(kCkptMagic));
  write_pod<std::uint32_t>(os, 1);  // version
  const EncoderConfig& cfg = model.config();
  write_pod<std::int32_t>(os, cfg.num_layers);
  write_pod<std::int32_t>(os, cfg.model_dim);
  write_pod<std::int32_t>(os, cfg.vocab_size_ext);
  write_pod<std::int32_t>(os, cfg.hidden_width);
  write_pod<std::uint8_t>(os, cfg.block_kind == BlockKind::kMlp ? 0 : 1);
  write_pod<std::uint8_t>(os, cfg.detach_conditioning ? 1 : 0);
  write_pod<std::uint32_t>(os,
                           static_cast<std::uint32_t>(cfg.intermediate_layers.size()));
  for (int n : cfg.intermediate_layers) write_pod<std::int32_t>(os, n);
  write_pod<double>(os, cfg.mix_weight);
  write_pod<std::int32_t>(os, model.input_dim());
  const auto& params = model.named_params();
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    write_string(os, name);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(tensor.shape().size()));
    for (int d : tensor.shape()) write_pod<std::int32_t>(os, d);
    os.write(reinterpret_cast<const char*>(tensor.values().data()),
             static_cast<std::streamsize>(tensor.values().size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Model load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const auto version = read_pod<std::uint32_t>(is, "version");
  if (version != 1)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  EncoderConfig cfg;
  cfg.num_layers = read_pod<std::int32_t>(is, "num_layers");
  cfg.model_dim = read_pod<std::int32_t>(is, "model_dim");
  cfg.vocab_size_ext = read_pod<std::int32_t>(is, "vocab_size_ext");
  cfg.hidden_width = read_pod<std::int32_t>(is, "hidden_width");
  cfg.block_kind =
      read_pod<std::uint8_t>(is, "block_kind") == 0 ? BlockKind::kMlp
                                                    : BlockKind::kMlpAttention;
  cfg.detach_conditioning = read_pod<std::uint8_t>(is, "detach") != 0;
  const auto n_inter = read_pod<std::uint32_t>(is, "intermediate count");
  cfg.intermediate_layers.clear();
  for (std::uint32_t i = 0; i < n_inter; ++i)
    cfg.intermediate_layers.push_back(read_pod<std::int32_t>(is, "intermediate"));
  cfg.mix_weight = read_pod<double>(is, "mix_weight");
  const int input_dim = read_pod<std::int32_t>(is, "input_dim");

  Model skeleton = Model::init(cfg, input_dim, /*seed=*/0);
  const auto& params = skeleton.named_params();
  const auto count = read_pod<std::uint32_t>(is, "param count");
  if (count != params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  for (const auto& [name, tensor] : params) {
    const std::string got = read_string(is, "param name");
    if (got != name)
      throw std::runtime_error("checkpoint: expected parameter '" + name +
                               "', found '" + got + "'");
    const auto rank = read_pod<std::uint32_t>(is, "param rank");
    std::vector<int> shape(rank);
    for (auto& d : shape) d = read_pod<std::int32_t>(is, "param dim");
    if (shape != tensor.shape())
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    Tensor t = tensor;
    auto& vals = t.mutable_values();
    if (!is.read(reinterpret_cast<char*>(vals.data()),
                 static_cast<std::streamsize>(vals.size() * sizeof(double))))
      throw std::runtime_error("checkpoint: truncated values for " + name);
  }
  return skeleton;
}

Model average_model_files(const std::vector<std::string>& paths) {
  if (paths.empty())
    throw std::invalid_argument("checkpoint averaging: no checkpoints given");
  Model avg = load_model(paths[0]);
  const double inv = 1.0 / static_cast<double>(paths.size());
  for (auto& [name, tensor] : avg.named_params()) {
    Tensor t = tensor;
    for (double& v : t.mutable_values()) v *= inv;
  }
  for (std::size_t i = 1; i < paths.size(); ++i) {
    Model next = load_model(paths[i]);
    const auto& src = next.named_params();
    const auto& dst = avg.named_params();
    if (src.size() != dst.size())
      throw std::runtime_error("checkpoint averaging: layout mismatch");
    for (std::size_t p = 0; p < src.size(); ++p) {
      Tensor d = dst[p].second;
      auto& dv = d.mutable_values();
      const auto& sv = src[p].second.values();
      if (sv.size() != dv.size())
        throw std::runtime_error("checkpoint averaging: shape mismatch for " +
                                 dst[p].first);
      for (std::size_t j = 0; j < dv.size(); ++j) dv[j] += sv[j] * inv;
    }
  }
  return avg;
}

}  // namespace interaug
