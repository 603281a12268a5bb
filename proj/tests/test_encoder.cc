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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "doctest.h"
#include "interaug/encoder.h"
#include "test_util.h"

using namespace interaug;
using test_util::central_diff;
using test_util::close_rel;
using test_util::random_grid;
using test_util::random_tensor;
using test_util::TempDir;

namespace {
EncoderConfig tiny_config(BlockKind kind = BlockKind::kMlpAttention) {
  EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.model_dim = 8;
  cfg.hidden_width = 8;
  cfg.vocab_size_ext = 4;
  cfg.intermediate_layers = {1};
  cfg.mix_weight = 0.5;
  cfg.block_kind = kind;
  return cfg;
}

LayerParams zero_layer(const EncoderConfig& cfg) {
  LayerParams layer;
  if (cfg.block_kind == BlockKind::kMlpAttention) {
    layer.attn_q = Linear::create(cfg.model_dim, cfg.model_dim);
    layer.attn_k = Linear::create(cfg.model_dim, cfg.model_dim);
    layer.attn_v = Linear::create(cfg.model_dim, cfg.model_dim);
    layer.attn_o = Linear::create(cfg.model_dim, cfg.model_dim);
  }
  layer.ff1 = Linear::create(cfg.model_dim, cfg.hidden_width);
  layer.ff2 = Linear::create(cfg.hidden_width, cfg.model_dim);
  return layer;
}
}  // namespace

TEST_CASE("config validation") {
  EncoderConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  SUBCASE("intermediate indices must stay below N") {
    cfg.intermediate_layers = {2};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("indices must be strictly increasing") {
    cfg.num_layers = 6;
    cfg.intermediate_layers = {3, 3};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("lambda is constrained to (0,1) when intermediates exist") {
    cfg.mix_weight = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.mix_weight = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("no intermediates forces lambda to 0") {
    cfg.intermediate_layers = {};
    cfg.mix_weight = 0.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.mix_weight = 0.0;
    CHECK_NOTHROW(cfg.validate());
  }
}

TEST_CASE("zero-initialized blocks pass the input through unchanged") {
  for (BlockKind kind : {BlockKind::kMlp, BlockKind::kMlpAttention}) {
    EncoderConfig cfg = tiny_config(kind);
    LayerParams layer = zero_layer(cfg);
    SeededRng rng(61, "enc-zero");
    Tensor x = random_tensor(rng, {5, cfg.model_dim});
    Tape tape;
    Tensor out = encode_layer(tape, cfg, layer, x);
    CHECK(out.values() == x.values());
  }
}

TEST_CASE("encode_layer keeps the T x D shape for any T") {
  EncoderConfig cfg = tiny_config();
  Model model = Model::init(cfg, 3, 62);
  SeededRng rng(62, "enc-shape");
  for (int T = 1; T <= 20; ++T) {
    Tape tape;
    Tensor x = random_tensor(rng, {T, cfg.model_dim});
    Tensor out = encode_layer(tape, cfg, model.layers()[0], x);
    CHECK(out.shape() == std::vector<int>{T, cfg.model_dim});
  }
  Tape tape;
  Tensor bad = random_tensor(rng, {4, cfg.model_dim + 1});
  CHECK_THROWS_AS(encode_layer(tape, cfg, model.layers()[0], bad),
                  std::invalid_argument);
}

TEST_CASE("gradient through a layer matches finite differences") {
  EncoderConfig cfg = tiny_config();
  cfg.model_dim = 4;
  cfg.hidden_width = 4;
  Model model = Model::init(cfg, 3, 63);
  SeededRng rng(63, "enc-fd");
  Tensor x = random_tensor(rng, {3, cfg.model_dim}, true);
  auto loss_value = [&]() {
    Tape tape;
    Tensor out = encode_layer(tape, cfg, model.layers()[0], x);
    return tape.sum(tape.mul(out, out)).item();
  };
  Tape tape;
  Tensor out = encode_layer(tape, cfg, model.layers()[0], x);
  Tensor loss = tape.sum(tape.mul(out, out));
  tape.backward(loss);
  for (std::size_t i = 0; i < x.values().size(); ++i) {
    const double fd = central_diff(x, i, loss_value);
    CHECK_MESSAGE(close_rel(x.grad()[i], fd, 1e-4), "entry ", i, ": ",
                  x.grad()[i], " vs ", fd);
  }
}

TEST_CASE("prediction heads produce simplex rows via one shared path") {
  EncoderConfig cfg = tiny_config();
  Model model = Model::init(cfg, 3, 64);
  SeededRng rng(64, "enc-head");
  Tensor x = random_tensor(rng, {6, cfg.model_dim});
  Tape tape;
  PosteriorGrid grid = intermediate_predict(tape, x, model.heads());
  CHECK_NOTHROW(grid.validate(1e-12));

  SUBCASE("zero weights and bias give uniform rows") {
    SharedHeads zero;
    zero.out_projection = Linear::create(cfg.model_dim, cfg.vocab_size_ext);
    zero.cond_projection = Linear::create(cfg.vocab_size_ext, cfg.model_dim);
    PosteriorGrid uniform = intermediate_predict(tape, x, zero);
    for (int t = 0; t < 6; ++t)
      for (int k = 0; k < cfg.vocab_size_ext; ++k)
        CHECK(uniform.at(t, k) == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("identical features give identical grids through the shared head") {
    PosteriorGrid again = intermediate_predict(tape, x, model.heads());
    CHECK(again.probs.values() == grid.probs.values());
  }
}

TEST_CASE("condition applies the case split of the update rule") {
  EncoderConfig cfg = tiny_config();  // N-set = {1}
  Model model = Model::init(cfg, 3, 65);
  SeededRng rng(65, "enc-cond");
  Tensor x = random_tensor(rng, {5, cfg.model_dim});
  PosteriorGrid z{random_grid(rng, 5, cfg.vocab_size_ext)};
  Tape tape;

  SUBCASE("outside the N-set the features pass through bit-identically") {
    Tensor out = condition(tape, cfg, 2, x, z, model.heads());
    CHECK(out.same_node(x));
  }
  SUBCASE("a zero conditioning projection adds nothing") {
    SharedHeads zero;
    zero.out_projection = Linear::create(cfg.model_dim, cfg.vocab_size_ext);
    zero.cond_projection = Linear::create(cfg.vocab_size_ext, cfg.model_dim);
    Tensor out = condition(tape, cfg, 1, x, z, zero);
    CHECK(out.values() == x.values());
  }
  SUBCASE("conditioning is exactly additive") {
    Tensor out = condition(tape, cfg, 1, x, z, model.heads());
    Tensor proj = model.heads().cond_projection.apply(tape, z.probs);
    for (std::size_t i = 0; i < out.values().size(); ++i)
      CHECK(std::abs(out.values()[i] - x.values()[i] - proj.values()[i]) <=
            1e-12);
  }
  SUBCASE("conditioning is per-frame: one perturbed row moves one row") {
    Tensor out = condition(tape, cfg, 1, x, z, model.heads());
    Tensor x2(x.shape(), x.values());
    x2.mutable_values()[2 * cfg.model_dim] += 0.5;
    Tensor out2 = condition(tape, cfg, 1, x2, z, model.heads());
    for (int t = 0; t < 5; ++t)
      for (int j = 0; j < cfg.model_dim; ++j) {
        if (t == 2 && j == 0)
          CHECK(out2.at(t, j) != out.at(t, j));
        else
          CHECK(out2.at(t, j) == out.at(t, j));
      }
  }
}

TEST_CASE("forward returns one grid per intermediate layer") {
  EncoderConfig cfg = tiny_config();
  cfg.num_layers = 5;
  cfg.intermediate_layers = {2, 4};
  Model model = Model::init(cfg, 3, 66);
  SeededRng rng(66, "enc-fwd");
  Tensor features = random_tensor(rng, {7, 3});
  Tape tape;
  ForwardResult res = model.forward(tape, features);
  CHECK(res.intermediate_grids.size() == 2);
  CHECK(res.final_grid.frames() == 7);
  CHECK_NOTHROW(res.final_grid.validate(1e-9));
}

TEST_CASE("inference is deterministic and ignores rng streams entirely") {
  EncoderConfig cfg = tiny_config();
  Model model = Model::init(cfg, 3, 67);
  SeededRng rng(67, "enc-det");
  Tensor features = random_tensor(rng, {6, 3});
  Tape t1, t2;
  SeededRng r1(1, "a"), r2(2, "b");
  ForwardResult a = model.forward(t1, features, nullptr, &r1);
  ForwardResult b = model.forward(t2, features, nullptr, &r2);
  CHECK(a.final_grid.probs.values() == b.final_grid.probs.values());
}

TEST_CASE("with augmentation none and zero conditioning the stack is plain") {
  EncoderConfig cfg = tiny_config();
  Model model = Model::init(cfg, 3, 68);
  // Zero out the conditioning projection: X'^(n) == X^(n) everywhere.
  Tensor w = model.heads().cond_projection.weight;
  for (double& v : w.mutable_values()) v = 0.0;
  Tensor b = model.heads().cond_projection.bias;
  for (double& v : b.mutable_values()) v = 0.0;

  SeededRng rng(68, "enc-plain");
  Tensor features = random_tensor(rng, {5, 3});
  Tape tape;
  ForwardResult res = model.forward(tape, features);

  // Reference: run the layers by hand with no conditioning at all.
  Tape ref_tape;
  Tensor x = Tensor({5, 3}, features.values());
  Tensor h = ref_tape.add_row_broadcast(
      ref_tape.matmul(x, model.named_params()[0].second),
      model.named_params()[1].second);
  for (int n = 1; n <= cfg.num_layers; ++n)
    h = encode_layer(ref_tape, cfg, model.layers()[n - 1], h);
  PosteriorGrid expected = intermediate_predict(ref_tape, h, model.heads());
  CHECK(res.final_grid.probs.values() == expected.probs.values());
}

TEST_CASE("full token deletion conditions every frame with the same vector") {
  EncoderConfig cfg = tiny_config();
  Model model = Model::init(cfg, 3, 69);
  SeededRng rng(69, "enc-del");
  Tensor features = random_tensor(rng, {6, 3});
  AugmentationSpec spec;
  spec.op = AugOperator::kTokenDelete;
  spec.p_del = 1.0;  // every conditioning vector is the projected blank
  Tape tape;
  ForwardTrace trace;
  SeededRng aug_rng(69, "enc-del-rng");
  model.forward(tape, features, &spec, &aug_rng, &trace);
  for (const auto& layer : trace.layers) {
    if (!layer.grid) continue;
    const Tensor& before = layer.encoder_out;
    const Tensor& after = layer.conditioned;
    const int D = cfg.model_dim;
    // The additive term is identical across frames.
    for (int t = 1; t < 6; ++t)
      for (int j = 0; j < D; ++j)
        CHECK(after.at(t, j) - before.at(t, j) ==
              doctest::Approx(after.at(0, j) - before.at(0, j))
                  .epsilon(1e-12));
  }
}

TEST_CASE("detach_conditioning changes gradients but never values") {
  SeededRng rng(70, "enc-detach");
  Tensor features = random_tensor(rng, {5, 3});
  const TokenSequence y{{1, 2}};

  auto run = [&](bool detach) {
    EncoderConfig cfg = tiny_config();
    cfg.detach_conditioning = detach;
    Model model = Model::init(cfg, 3, 70);
    Tape tape;
    ForwardResult res = model.forward(tape, features);
    MixedLossResult loss = mixed_loss(tape, res.final_grid,
                                      res.intermediate_grids, y, 0.5);
    tape.backward(loss.total);
    Tensor out_w = model.named_params().front().second;  // input projection
    return std::pair{res.final_grid.probs.values(), out_w.grad()};
  };
  const auto [vals_flow, grad_flow] = run(false);
  const auto [vals_detach, grad_detach] = run(true);
  CHECK(vals_flow == vals_detach);
  CHECK(grad_flow != grad_detach);
}

TEST_CASE("mixed loss implements the lambda combination") {
  SeededRng rng(71, "enc-mixed");
  Tensor z = random_grid(rng, 4, 3);
  const TokenSequence y{{1}};
  Tape tape;
  SUBCASE("equal components collapse to their common value") {
    PosteriorGrid grid{z};
    MixedLossResult res = mixed_loss(tape, grid, {grid}, y, 0.5);
    CHECK(res.total.item() ==
          doctest::Approx(ctc_loss_value(z, y)).epsilon(1e-12));
  }
  SUBCASE("intermediates equal to the final leave the loss unchanged") {
    PosteriorGrid grid{z};
    for (double lambda : {0.25, 0.5, 0.75}) {
      MixedLossResult res = mixed_loss(tape, grid, {grid, grid}, y, lambda);
      CHECK(res.total.item() ==
            doctest::Approx(ctc_loss_value(z, y)).epsilon(1e-12));
    }
  }
  SUBCASE("weights follow (1-lambda, lambda/|N|)") {
    SeededRng rng2(72, "enc-mixed2");
    Tensor z2 = random_grid(rng2, 4, 3);
    PosteriorGrid final{z}, inter{z2};
    const double lambda = 0.3;
    MixedLossResult res = mixed_loss(tape, final, {inter}, y, lambda);
    const double expected = (1 - lambda) * ctc_loss_value(z, y) +
                            lambda * ctc_loss_value(z2, y);
    CHECK(res.total.item() == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("lambda > 0 with no intermediates is a configuration error") {
    PosteriorGrid grid{z};
    CHECK_THROWS_AS(mixed_loss(tape, grid, {}, y, 0.5),
                    std::invalid_argument);
  }
  SUBCASE("infeasible targets flag instead of throwing") {
    PosteriorGrid grid{z};
    MixedLossResult res =
        mixed_loss(tape, grid, {grid}, TokenSequence{{1, 1, 2, 2, 1}}, 0.5);
    CHECK_FALSE(res.feasible);
    CHECK(std::isinf(res.total.item()));
  }
}

TEST_CASE("mixed-loss parameter gradients match finite differences") {
  EncoderConfig cfg = tiny_config(BlockKind::kMlp);
  cfg.model_dim = 6;
  cfg.hidden_width = 6;
  Model model = Model::init(cfg, 4, 73);
  SeededRng rng(73, "enc-mlfd");
  Tensor features = random_tensor(rng, {4, 4});
  const TokenSequence y{{1, 2}};
  auto loss_value = [&]() {
    Tape tape;
    ForwardResult res = model.forward(tape, features);
    return mixed_loss(tape, res.final_grid, res.intermediate_grids, y, 0.5)
        .total.item();
  };
  Tape tape;
  ForwardResult res = model.forward(tape, features);
  MixedLossResult loss =
      mixed_loss(tape, res.final_grid, res.intermediate_grids, y, 0.5);
  tape.backward(loss.total);
  for (const auto& [name, param] : model.named_params()) {
    Tensor p = param;
    REQUIRE(p.has_grad());
    for (std::size_t i = 0; i < p.values().size(); ++i) {
      const double fd = central_diff(p, i, loss_value);
      CHECK_MESSAGE(close_rel(p.grad()[i], fd, 1e-4, 1e-8), name, "[", i,
                    "]: analytic ", p.grad()[i], " vs fd ", fd);
    }
  }
}

TEST_CASE("checkpoints round-trip byte-exactly and reject corruption") {
  TempDir dir("ckpt");
  EncoderConfig cfg = tiny_config();
  Model model = Model::init(cfg, 3, 74);
  const std::string path = dir.file("model.ckpt");
  save_model(path, model);

  SUBCASE("round trip preserves every parameter bit") {
    Model loaded = load_model(path);
    CHECK(loaded.config().num_layers == cfg.num_layers);
    CHECK(loaded.input_dim() == 3);
    const auto& a = model.named_params();
    const auto& b = loaded.named_params();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].first == b[i].first);
      CHECK(a[i].second.values() == b[i].second.values());
    }
    // save(load(x)) is byte-stable
    const std::string again = dir.file("model2.ckpt");
    save_model(again, loaded);
    std::ifstream f1(path, std::ios::binary), f2(again, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), {});
    std::string s2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(s1 == s2);
  }
  SUBCASE("bad magic is rejected") {
    const std::string bad = dir.file("bad.ckpt");
    std::ofstream os(bad, std::ios::binary);
    os << "NOTACKPTxxxxxxxxxxxxxxxx";
    os.close();
    CHECK_THROWS_AS(load_model(bad), std::runtime_error);
  }
  SUBCASE("averaging a file with itself is the identity") {
    Model avg = average_model_files({path, path});
    const auto& a = model.named_params();
    const auto& b = avg.named_params();
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a[i].second.values() == b[i].second.values());
  }
  SUBCASE("averaging two checkpoints is the parameter mean") {
    Model other = Model::init(cfg, 3, 75);
    const std::string path2 = dir.file("other.ckpt");
    save_model(path2, other);
    Model avg = average_model_files({path, path2});
    for (std::size_t i = 0; i < avg.named_params().size(); ++i) {
      const auto& m = model.named_params()[i].second.values();
      const auto& o = other.named_params()[i].second.values();
      const auto& v = avg.named_params()[i].second.values();
      for (std::size_t j = 0; j < v.size(); ++j)
        CHECK(v[j] == doctest::Approx(0.5 * m[j] + 0.5 * o[j]).epsilon(1e-15));
    }
  }
}

TEST_CASE("forward validates inputs") {
  EncoderConfig cfg = tiny_config();
  Model model = Model::init(cfg, 3, 76);
  Tape tape;
  Tensor bad({2, 5}, std::vector<double>(10, 0.0));
  CHECK_THROWS_AS(model.forward(tape, bad), std::invalid_argument);

  AugmentationSpec spec;
  spec.op = AugOperator::kTimeMask;
  Tensor ok({2, 3}, std::vector<double>(6, 0.0));
  CHECK_THROWS_AS(model.forward(tape, ok, &spec, nullptr),
                  std::invalid_argument);
}
