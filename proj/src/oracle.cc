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

#include "interaug/oracle.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "interaug/augment.h"
#include "interaug/ctc.h"
#include "interaug/encoder.h"
#include "interaug/metrics.h"
#include "interaug/rng.h"

namespace interaug {

namespace {
struct CtcInstance {
  Tensor z;
  TokenSequence y;
};

std::string serialize_instance(const CtcInstance& inst) {
  std::ostringstream os;
  os.precision(17);
  os << "{\"T\":" << inst.z.dim(0) << ",\"Vext\":" << inst.z.dim(1)
     << ",\"y\":[";
  for (std::size_t i = 0; i < inst.y.tokens.size(); ++i)
    os << (i ? "," : "") << inst.y.tokens[i];
  os << "],\"z\":[";
  for (std::size_t i = 0; i < inst.z.values().size(); ++i)
    os << (i ? "," : "") << inst.z.values()[i];
  os << "]}";
  return os.str();
}

// Random simplex rows; tokens may repeat so the forced-blank lattice arcs
// get exercised. Target length retried until feasible at the drawn T.
CtcInstance random_instance(SeededRng& rng, int max_t, int max_vocab,
                            int max_len) {
  CtcInstance inst;
  const int T = rng.uniform_int(1, max_t);
  const int V = rng.uniform_int(1, max_vocab);
  const int K = V + 1;
  while (true) {
    const int L = rng.uniform_int(0, std::min(max_len, T));
    TokenSequence y;
    for (int l = 0; l < L; ++l) y.tokens.push_back(rng.uniform_int(1, V));
    if (min_frames_for(y) <= T) {
      inst.y = y;
      break;
    }
  }
  std::vector<double> probs(static_cast<std::size_t>(T) * K);
  for (int t = 0; t < T; ++t) {
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      const double v = 0.05 + rng.uniform_real();
      probs[static_cast<std::size_t>(t) * K + k] = v;
      sum += v;
    }
    for (int k = 0; k < K; ++k)
      probs[static_cast<std::size_t>(t) * K + k] /= sum;
  }
  inst.z = Tensor({T, K}, std::move(probs));
  return inst;
}

bool close_rel(double a, double b, double rel_tol, double abs_floor = 1e-10) {
  const double diff = std::abs(a - b);
  if (diff <= abs_floor) return true;
  return diff <= rel_tol * std::max(std::abs(a), std::abs(b));
}

OracleCheck check_loss_vs_enumeration(std::uint64_t seed) {
  OracleCheck check{"ctc forward-backward vs path enumeration", 0, 0, ""};
  SeededRng rng(seed, "oracle-enum");
  for (int i = 0; i < 200; ++i) {
    CtcInstance inst = random_instance(rng, 6, 3, 3);
    ++check.cases;
    const double fb = ctc_loss_value(inst.z, inst.y);
    const double brute = ctc_loss_bruteforce(inst.z, inst.y);
    if (!(std::abs(fb - brute) <= 1e-9)) {
      ++check.failures;
      if (check.detail.empty()) {
        std::ostringstream os;
        os << "loss " << fb << " vs enumeration " << brute << " on "
           << serialize_instance(inst);
        check.detail = os.str();
      }
    }
  }
  return check;
}

OracleCheck check_grad_vs_fd(std::uint64_t seed, bool inject_sign_flip) {
  OracleCheck check{"ctc gradient vs finite differences of the enumeration",
                    0, 0, ""};
  SeededRng rng(seed, "oracle-grad");
  const double eps = 1e-5;
  for (int i = 0; i < 20; ++i) {
    CtcInstance inst = random_instance(rng, 4, 2, 2);
    Tensor z(inst.z.shape(), inst.z.values(), /*requires_grad=*/true);
    Tape tape;
    CtcLossResult res = ctc_loss(tape, z, inst.y);
    if (!res.feasible) continue;
    tape.backward(res.loss);
    const auto& grad = z.grad();
    for (std::int64_t idx = 0; idx < z.size(); ++idx) {
      ++check.cases;
      // Perturb the unconstrained entry; compare against the enumeration
      // oracle evaluated on the same perturbed grid.
      std::vector<double> vals = inst.z.values();
      vals[idx] += eps;
      const double up = ctc_loss_bruteforce(Tensor(inst.z.shape(), vals), inst.y);
      vals[idx] -= 2 * eps;
      const double down =
          ctc_loss_bruteforce(Tensor(inst.z.shape(), vals), inst.y);
      const double fd = (up - down) / (2 * eps);
      double analytic = grad[idx];
      if (inject_sign_flip) analytic = -analytic;
      if (!close_rel(analytic, fd, 1e-4)) {
        ++check.failures;
        if (check.detail.empty()) {
          std::ostringstream os;
          os << "finite-difference mismatch at entry " << idx << ": analytic "
             << analytic << " vs central fd " << fd << " on "
             << serialize_instance(inst);
          check.detail = os.str();
        }
      }
    }
  }
  return check;
}

OracleCheck check_mixed_loss_param_grads(std::uint64_t seed) {
  OracleCheck check{"mixed-loss parameter gradients vs finite differences",
                    0, 0, ""};
  EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.model_dim = 8;
  cfg.hidden_width = 8;
  cfg.vocab_size_ext = 4;
  cfg.intermediate_layers = {1};
  cfg.mix_weight = 0.5;
  Model model = Model::init(cfg, /*input_dim=*/5, seed);
  SeededRng rng(seed, "oracle-mixed");
  const int T = 5;
  std::vector<double> feat(T * 5);
  for (double& v : feat) v = rng.gaussian();
  Tensor features({T, 5}, feat);
  TokenSequence y{{1, 2}};

  auto loss_value = [&]() {
    Tape tape;
    ForwardResult fwd = model.forward(tape, features);
    MixedLossResult l = mixed_loss(tape, fwd.final_grid, fwd.intermediate_grids,
                                   y, cfg.mix_weight);
    return l.total.item();
  };

  model.zero_grad();
  Tape tape;
  ForwardResult fwd = model.forward(tape, features);
  MixedLossResult l =
      mixed_loss(tape, fwd.final_grid, fwd.intermediate_grids, y, cfg.mix_weight);
  tape.backward(l.total);

  const double eps = 1e-5;
  for (const auto& [name, param] : model.named_params()) {
    Tensor p = param;
    const std::vector<double> grad =
        p.has_grad() ? p.grad()
                     : std::vector<double>(p.values().size(), 0.0);
    for (std::size_t i = 0; i < p.values().size(); ++i) {
      ++check.cases;
      const double saved = p.values()[i];
      p.mutable_values()[i] = saved + eps;
      const double up = loss_value();
      p.mutable_values()[i] = saved - eps;
      const double down = loss_value();
      p.mutable_values()[i] = saved;
      const double fd = (up - down) / (2 * eps);
      const double analytic = grad.empty() ? 0.0 : grad[i];
      if (!close_rel(analytic, fd, 1e-4, 1e-8)) {
        ++check.failures;
        if (check.detail.empty()) {
          std::ostringstream os;
          os << "parameter " << name << "[" << i << "]: analytic " << analytic
             << " vs central fd " << fd;
          check.detail = os.str();
        }
      }
    }
  }
  return check;
}

// Plain exponential-time minimum edit distance, structurally unrelated to
// the DP in metrics.
int exhaustive_edit_distance(const std::vector<int>& ref, std::size_t i,
                             const std::vector<int>& hyp, std::size_t j) {
  if (i == ref.size()) return static_cast<int>(hyp.size() - j);
  if (j == hyp.size()) return static_cast<int>(ref.size() - i);
  const int sub = exhaustive_edit_distance(ref, i + 1, hyp, j + 1) +
                  (ref[i] != hyp[j] ? 1 : 0);
  const int del = exhaustive_edit_distance(ref, i + 1, hyp, j) + 1;
  const int ins = exhaustive_edit_distance(ref, i, hyp, j + 1) + 1;
  return std::min(sub, std::min(del, ins));
}

OracleCheck check_alignment_vs_exhaustive(std::uint64_t seed) {
  OracleCheck check{"wer alignment vs exhaustive edit-distance search", 0, 0,
                    ""};
  SeededRng rng(seed, "oracle-lev");
  for (int i = 0; i < 500; ++i) {
    ++check.cases;
    TokenSequence ref, hyp;
    const int ln = rng.uniform_int(0, 8), lm = rng.uniform_int(0, 8);
    for (int k = 0; k < ln; ++k) ref.tokens.push_back(rng.uniform_int(1, 3));
    for (int k = 0; k < lm; ++k) hyp.tokens.push_back(rng.uniform_int(1, 3));
    const ErrorBreakdown b = align(ref, hyp);
    const int expected = exhaustive_edit_distance(ref.tokens, 0, hyp.tokens, 0);
    const bool identity = b.hits + b.substitutions + b.deletions == b.ref_len;
    if (b.total_errors() != expected || !identity) {
      ++check.failures;
      if (check.detail.empty()) {
        std::ostringstream os;
        os << "align gave " << b.total_errors() << " errors (exhaustive "
           << expected << ", identity " << (identity ? "ok" : "broken")
           << ") for ref_len " << ln << " hyp_len " << lm;
        check.detail = os.str();
      }
    }
  }
  return check;
}

OracleCheck check_mask_width_distribution(std::uint64_t seed) {
  OracleCheck check{"time-mask width distribution vs U(0,W) chi-square", 0, 0,
                    ""};
  SeededRng rng(seed, "oracle-mask");
  const int T = 40, D = 4, W = 9;
  Tensor c({T, D}, std::vector<double>(T * D, 1.0));
  std::vector<long> width_counts(W + 1, 0);
  const long draws = 10000;
  Tape tape;
  for (long i = 0; i < draws; ++i) {
    Tensor out = time_mask(tape, c, MaskWidth::frames(W), 1.0, rng);
    int zero_rows = 0;
    for (int t = 0; t < T; ++t)
      if (out.at(t, 0) == 0.0) ++zero_rows;
    ++width_counts[zero_rows];
    tape.clear();
  }
  check.cases = draws;
  const double expected = static_cast<double>(draws) / (W + 1);
  double chi2 = 0.0;
  for (long cnt : width_counts) {
    const double d = cnt - expected;
    chi2 += d * d / expected;
  }
  // Critical value for df=9 at significance 0.01.
  const double critical = 21.666;
  if (chi2 > critical) {
    check.failures = 1;
    std::ostringstream os;
    os << "chi-square " << chi2 << " exceeds " << critical << " (df=9, a=0.01)";
    check.detail = os.str();
  }
  return check;
}

// Random simplex grid; blank_weight scales the blank column's share before
// normalization.
PosteriorGrid random_grid(SeededRng& rng, int T, int K, double blank_weight) {
  std::vector<double> probs(static_cast<std::size_t>(T) * K);
  for (int t = 0; t < T; ++t) {
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      double v = 0.1 + rng.uniform_real();
      if (k == Vocabulary::kBlank) v *= blank_weight;
      probs[static_cast<std::size_t>(t) * K + k] = v;
      sum += v;
    }
    for (int k = 0; k < K; ++k)
      probs[static_cast<std::size_t>(t) * K + k] /= sum;
  }
  return {Tensor({T, K}, std::move(probs))};
}

OracleCheck check_token_op_laws(std::uint64_t seed) {
  OracleCheck check{"token operator sampling laws", 0, 0, ""};
  SeededRng rng(seed, "oracle-token");
  SeededRng grid_rng(seed, "oracle-token-grid");
  const int K = 4;
  auto fail = [&](const std::string& msg) {
    ++check.failures;
    if (check.detail.empty()) check.detail = msg;
  };

  // Deletion corrupts at rate p_del +- 0.01 over 1e4 frames. Blank never
  // wins the argmax in this grid, so every corruption draw is visible.
  ++check.cases;
  {
    PosteriorGrid grid = random_grid(grid_rng, 10000, K, /*blank_weight=*/0.05);
    AlignmentPath base = argmax_path(grid.probs);
    AlignmentPath del = token_delete(grid, 0.1, rng);
    long corrupted = 0;
    for (int t = 0; t < grid.frames(); ++t)
      if (del.labels[t] != base.labels[t]) ++corrupted;
    const double rate = static_cast<double>(corrupted) / grid.frames();
    if (std::abs(rate - 0.1) > 0.01) {
      std::ostringstream os;
      os << "token_delete corruption rate " << rate << " not within 0.1±0.01";
      fail(os.str());
    }
  }

  // Insertion never alters frames whose argmax is non-blank, and at
  // p_ins=1 no blank label survives.
  ++check.cases;
  {
    PosteriorGrid grid = random_grid(grid_rng, 10000, K, /*blank_weight=*/1.0);
    AlignmentPath base = argmax_path(grid.probs);
    AlignmentPath ins = token_insert(grid, 1.0, rng);
    for (int t = 0; t < grid.frames(); ++t) {
      if (base.labels[t] != Vocabulary::kBlank &&
          ins.labels[t] != base.labels[t]) {
        fail("token_insert changed a non-blank-argmax frame");
        break;
      }
      if (ins.labels[t] == Vocabulary::kBlank) {
        fail("token_insert left a blank at p_ins=1");
        break;
      }
    }
  }

  // Substitution matches the posterior rows within total variation 0.02
  // at 1e4 draws per frame.
  {
    PosteriorGrid grid = random_grid(grid_rng, 4, K, /*blank_weight=*/1.0);
    std::vector<std::vector<long>> counts(grid.frames(),
                                          std::vector<long>(K, 0));
    const long rounds = 10000;
    for (long i = 0; i < rounds; ++i) {
      AlignmentPath p = token_substitute(grid, rng);
      for (int f = 0; f < grid.frames(); ++f) ++counts[f][p.labels[f]];
    }
    for (int f = 0; f < grid.frames(); ++f) {
      ++check.cases;
      double tv = 0.0;
      for (int k = 0; k < K; ++k)
        tv += std::abs(static_cast<double>(counts[f][k]) / rounds -
                       grid.at(f, k));
      tv *= 0.5;
      if (tv > 0.02) {
        std::ostringstream os;
        os << "token_substitute frame " << f << " total variation " << tv;
        fail(os.str());
      }
    }
  }
  return check;
}
}  // namespace

bool OracleReport::pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const OracleCheck& c) { return c.pass(); });
}

OracleReport run_oracle_suite(const OracleOptions& opts) {
  OracleReport report;
  report.checks.push_back(check_loss_vs_enumeration(opts.seed));
  report.checks.push_back(
      check_grad_vs_fd(opts.seed, opts.inject_ctc_grad_sign_flip));
  report.checks.push_back(check_mixed_loss_param_grads(opts.seed));
  report.checks.push_back(check_alignment_vs_exhaustive(opts.seed));
  report.checks.push_back(check_mask_width_distribution(opts.seed));
  report.checks.push_back(check_token_op_laws(opts.seed));
  return report;
}

std::string format_oracle_report(const OracleReport& report) {
  std::ostringstream os;
  for (const auto& c : report.checks) {
    os << (c.pass() ? "[PASS] " : "[FAIL] ") << c.name << " (" << c.cases
       << " cases";
    if (!c.pass()) os << ", " << c.failures << " failures";
    os << ")\n";
    if (!c.detail.empty()) os << "       " << c.detail << '\n';
  }
  os << (report.pass() ? "oracle-check: all properties hold\n"
                       : "oracle-check: FAILURES detected\n");
  return os.str();
}

}  // namespace interaug
