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
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "interaug/ctc.h"
#include "test_util.h"

using namespace interaug;
using test_util::central_diff;
using test_util::close_rel;
using test_util::random_grid;

namespace {
constexpr int kBlank = Vocabulary::kBlank;

TokenSequence random_feasible_target(SeededRng& rng, int T, int V,
                                     int max_len) {
  while (true) {
    TokenSequence y;
    const int L = rng.uniform_int(0, max_len);
    for (int l = 0; l < L; ++l) y.tokens.push_back(rng.uniform_int(1, V));
    if (min_frames_for(y) <= T) return y;
  }
}
}  // namespace

TEST_CASE("collapse merges adjacent repeats then strips blanks") {
  const Vocabulary vocab{2};
  const int a = 1, b = 2;
  CHECK(collapse({{a, a, kBlank, a}}, vocab) == TokenSequence{{a, a}});
  CHECK(collapse({{kBlank, kBlank, kBlank}}, vocab) == TokenSequence{});
  CHECK(collapse({{a, kBlank, kBlank, b, b}}, vocab) == TokenSequence{{a, b}});
}

TEST_CASE("collapse rejects labels outside the vocabulary") {
  const Vocabulary vocab{2};
  CHECK_THROWS_AS(collapse({{1, 3}}, vocab), std::out_of_range);
  CHECK_THROWS_AS(collapse({{-1}}, vocab), std::out_of_range);
}

TEST_CASE("collapse is idempotent on its own output") {
  SeededRng rng(21, "ctc-collapse");
  const Vocabulary vocab{3};
  for (int i = 0; i < 200; ++i) {
    AlignmentPath path;
    const int T = rng.uniform_int(1, 12);
    for (int t = 0; t < T; ++t) path.labels.push_back(rng.uniform_int(0, 3));
    const TokenSequence once = collapse(path, vocab);
    if (once.tokens.empty()) continue;
    // Blank-free re-embedding is a fixed point unless the sequence carries
    // adjacent repeats (those need a separating blank to survive).
    bool has_adjacent_repeat = false;
    for (std::size_t l = 1; l < once.tokens.size(); ++l)
      has_adjacent_repeat |= once.tokens[l] == once.tokens[l - 1];
    if (!has_adjacent_repeat)
      CHECK(collapse({once.tokens}, vocab) == once);
    // The canonical blank-separated embedding always recovers the sequence.
    AlignmentPath canonical;
    for (std::size_t l = 0; l < once.tokens.size(); ++l) {
      if (l > 0 && once.tokens[l] == once.tokens[l - 1])
        canonical.labels.push_back(Vocabulary::kBlank);
      canonical.labels.push_back(once.tokens[l]);
    }
    CHECK(collapse(canonical, vocab) == once);
  }
}

TEST_CASE("uniform two-frame grid has the three-path loss") {
  // B^-1("a") at T=2 is {(a,a), (a,eps), (eps,a)}: 3 * 0.25 = 0.75.
  Tape tape;
  Tensor z({2, 2}, {0.5, 0.5, 0.5, 0.5});
  const TokenSequence y{{1}};
  CtcLossResult res = ctc_loss(tape, z, y);
  CHECK(res.feasible);
  CHECK(res.loss.item() == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  CHECK(ctc_loss_bruteforce(z, y) ==
        doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("empty target reduces to the all-blank path") {
  SeededRng rng(22, "ctc-empty");
  Tensor z = random_grid(rng, 5, 4);
  Tape tape;
  CtcLossResult res = ctc_loss(tape, z, TokenSequence{});
  double expected = 0.0;
  for (int t = 0; t < 5; ++t) expected -= std::log(z.at(t, kBlank));
  CHECK(res.loss.item() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("single-frame bruteforce case") {
  Tensor z({1, 2}, {0.3, 0.7});
  CHECK(ctc_loss_bruteforce(z, TokenSequence{{1}}) ==
        doctest::Approx(-std::log(0.7)).epsilon(1e-14));
}

TEST_CASE("forward-backward equals enumeration on T=3 with two tokens") {
  SeededRng rng(23, "ctc-small");
  Tensor z = random_grid(rng, 3, 3);
  const TokenSequence y{{1, 2}};
  CHECK(std::abs(ctc_loss_value(z, y) - ctc_loss_bruteforce(z, y)) <= 1e-9);
}

TEST_CASE("forward-backward equals enumeration on 200 random instances") {
  SeededRng rng(24, "ctc-property");
  int cases = 0;
  while (cases < 200) {
    const int T = rng.uniform_int(1, 6);
    const int V = rng.uniform_int(1, 3);
    // Keep |V'|^T within the brute-force budget used by the invariant.
    if (std::pow(V + 1, T) > 1e5) continue;
    Tensor z = random_grid(rng, T, V + 1);
    const TokenSequence y = random_feasible_target(rng, T, V, 3);
    const double fb = ctc_loss_value(z, y);
    const double brute = ctc_loss_bruteforce(z, y);
    CHECK(std::abs(fb - brute) <= 1e-9);
    ++cases;
  }
}

TEST_CASE("loss gradient matches finite differences of the enumeration") {
  SeededRng rng(25, "ctc-grad");
  for (int i = 0; i < 10; ++i) {
    const int T = rng.uniform_int(1, 4);
    const int V = rng.uniform_int(1, 2);
    Tensor z = random_grid(rng, T, V + 1);
    Tensor zg(z.shape(), z.values(), /*requires_grad=*/true);
    const TokenSequence y = random_feasible_target(rng, T, V, 2);
    Tape tape;
    CtcLossResult res = ctc_loss(tape, zg, y);
    tape.backward(res.loss);
    // Like-for-like: perturb the unconstrained entry and evaluate the
    // enumeration oracle on the same perturbed grid.
    auto oracle = [&]() { return ctc_loss_bruteforce(zg, y); };
    for (std::size_t idx = 0; idx < zg.values().size(); ++idx) {
      const double fd = central_diff(zg, idx, oracle);
      CHECK_MESSAGE(close_rel(zg.grad()[idx], fd, 1e-4), "entry ", idx,
                    ": analytic ", zg.grad()[idx], " vs fd ", fd);
    }
  }
}

TEST_CASE("loss is invariant under consistent token relabeling") {
  SeededRng rng(26, "ctc-perm");
  const int T = 5, V = 3, K = V + 1;
  Tensor z = random_grid(rng, T, K);
  const TokenSequence y{{2, 1, 3}};
  const double base = ctc_loss_value(z, y);

  // Permutation of non-blank tokens: 1->2->3->1; blank stays put.
  const int perm[4] = {0, 2, 3, 1};
  std::vector<double> permuted(z.values().size());
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < K; ++k)
      permuted[static_cast<std::size_t>(t) * K + perm[k]] =
          z.values()[static_cast<std::size_t>(t) * K + k];
  TokenSequence y_perm;
  for (int tok : y.tokens) y_perm.tokens.push_back(perm[tok]);
  const double relabeled = ctc_loss_value(Tensor({T, K}, permuted), y_perm);
  CHECK(std::abs(base - relabeled) <= 1e-12);
}

TEST_CASE("infeasible target yields +inf loss, zero gradient and a flag") {
  SeededRng rng(27, "ctc-infeasible");
  // Repeated label needs a separating blank: "1 1" needs 3 frames.
  Tensor z = random_grid(rng, 2, 2);
  Tensor zg(z.shape(), z.values(), true);
  Tape tape;
  CtcLossResult res = ctc_loss(tape, zg, TokenSequence{{1, 1}});
  CHECK_FALSE(res.feasible);
  CHECK(res.loss.item() == std::numeric_limits<double>::infinity());
  CHECK_FALSE(zg.has_grad());
  CHECK(min_frames_for(TokenSequence{{1, 1}}) == 3);
  CHECK(min_frames_for(TokenSequence{{1, 2}}) == 2);
  CHECK(min_frames_for(TokenSequence{}) == 0);
}

TEST_CASE("bruteforce guard rejects oversized instances") {
  Tensor z({30, 5}, std::vector<double>(150, 0.2));
  CHECK_THROWS_AS(ctc_loss_bruteforce(z, TokenSequence{{1}}),
                  std::invalid_argument);
}

TEST_CASE("targets outside the vocabulary are rejected") {
  Tensor z({2, 3}, {0.4, 0.3, 0.3, 0.4, 0.3, 0.3});
  Tape tape;
  CHECK_THROWS_AS(ctc_loss(tape, z, TokenSequence{{5}}), std::out_of_range);
  CHECK_THROWS_AS(ctc_loss_value(z, TokenSequence{{0}}), std::out_of_range);
}

TEST_CASE("greedy decode is collapse of the per-frame argmax") {
  SUBCASE("all-blank argmax decodes to empty") {
    Tensor z({3, 2}, {0.9, 0.1, 0.8, 0.2, 0.7, 0.3});
    CHECK(greedy_decode({z}) == TokenSequence{});
  }
  SUBCASE("argmax path [a,a,eps,b] collapses to a b") {
    Tensor z({4, 3},
             {0.1, 0.8, 0.1,  //
              0.2, 0.7, 0.1,  //
              0.9, 0.05, 0.05,  //
              0.1, 0.2, 0.7});
    CHECK(greedy_decode({z}) == TokenSequence{{1, 2}});
  }
  SUBCASE("ties break toward the lowest index, so blank wins") {
    Tensor z({1, 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    CHECK(argmax_path(z).labels == std::vector<int>{kBlank});
    CHECK(greedy_decode({z}) == TokenSequence{});
  }
  SUBCASE("random grids: decode equals collapse(argmax rows) and is blank-free") {
    SeededRng rng(28, "ctc-greedy");
    for (int i = 0; i < 50; ++i) {
      const int T = rng.uniform_int(1, 10), K = rng.uniform_int(2, 5);
      Tensor z = random_grid(rng, T, K);
      const TokenSequence decoded = greedy_decode({z});
      CHECK(decoded == collapse(argmax_path(z), Vocabulary{K - 1}));
      for (int tok : decoded.tokens) CHECK(tok != kBlank);
    }
  }
}

TEST_CASE("posterior grid validation catches broken rows") {
  Tensor bad_sum({1, 2}, {0.7, 0.7});
  CHECK_THROWS_AS(PosteriorGrid{bad_sum}.validate(), std::domain_error);
  Tensor negative({1, 2}, {1.5, -0.5});
  CHECK_THROWS_AS(PosteriorGrid{negative}.validate(), std::domain_error);
  Tensor fine({1, 2}, {0.25, 0.75});
  CHECK_NOTHROW(PosteriorGrid{fine}.validate());
}
