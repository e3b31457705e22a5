/*
   Copyright 2026 The phoncl authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "phoncl/ctc.hpp"

using namespace phoncl;

namespace {

LogitSequence make_logits(const Matrix& m) { return LogitSequence{m}; }

double softmax_prob(const Matrix& logits, int k, int t) {
  double hi = logits(0, t);
  for (int r = 1; r < logits.rows; ++r) hi = std::max(hi, logits(r, t));
  double z = 0.0;
  for (int r = 0; r < logits.rows; ++r) z += std::exp(logits(r, t) - hi);
  return std::exp(logits(k, t) - hi) / z;
}

}  // namespace

TEST_CASE("ctc_loss single frame single label", "[ctc]") {
  Rng rng(11);
  Matrix logits = oracles::random_matrix(3, 1, rng);
  CtcResult r = ctc_loss(make_logits(logits), LabelSequence{{1}});
  // Only one valid path: emit the label at frame 0.
  REQUIRE(r.loss == Catch::Approx(-std::log(softmax_prob(logits, 1, 0))).epsilon(1e-12));
}

TEST_CASE("ctc_loss two frames enumerates the three paths", "[ctc]") {
  Rng rng(12);
  Matrix logits = oracles::random_matrix(4, 2, rng);
  CtcResult r = ctc_loss(make_logits(logits), LabelSequence{{2}});
  double p_aa = softmax_prob(logits, 2, 0) * softmax_prob(logits, 2, 1);
  double p_ba = softmax_prob(logits, 0, 0) * softmax_prob(logits, 2, 1);
  double p_ab = softmax_prob(logits, 2, 0) * softmax_prob(logits, 0, 1);
  REQUIRE(r.loss == Catch::Approx(-std::log(p_aa + p_ba + p_ab)).epsilon(1e-12));
}

TEST_CASE("ctc_loss matches brute force over a small grid", "[ctc]") {
  Rng rng(13);
  for (int T = 1; T <= 5; ++T) {
    for (int L = 1; L <= std::min(3, T); ++L) {
      for (int V = 1; V <= 3; ++V) {
        Matrix logits = oracles::random_matrix(V + 1, T, rng);
        std::vector<int> labels;
        std::uniform_int_distribution<int> pick(1, V);
        for (int i = 0; i < L; ++i) labels.push_back(pick(rng));
        LabelSequence ls{labels};
        int need = L;
        for (int i = 1; i < L; ++i) {
          if (labels[static_cast<size_t>(i)] == labels[static_cast<size_t>(i - 1)]) ++need;
        }
        if (T < need) continue;
        CtcResult r = ctc_loss(make_logits(logits), ls);
        double brute = oracles::brute_ctc_loss(logits, labels);
        REQUIRE(std::abs(r.loss - brute) < 1e-10);
      }
    }
  }
}

TEST_CASE("ctc_loss gradient matches finite differences", "[ctc]") {
  Rng rng(14);
  for (int rep = 0; rep < 20; ++rep) {
    int T = 5, V = 3;
    Matrix logits = oracles::random_matrix(V + 1, T, rng);
    std::vector<int> labels = {1 + rep % V, 1 + (rep + 1) % V};
    CtcResult r = ctc_loss(make_logits(logits), LabelSequence{labels});

    std::vector<std::pair<double*, double>> grads;
    for (int k = 0; k <= V; ++k) {
      for (int t = 0; t < T; ++t) {
        grads.emplace_back(&logits(k, t), r.grad(k, t));
      }
    }
    auto f = [&]() { return ctc_loss(make_logits(logits), LabelSequence{labels}).loss; };
    REQUIRE(oracles::max_grad_error(f, grads) < 1e-4);
  }
}

TEST_CASE("ctc_loss shift invariance", "[ctc]") {
  Rng rng(15);
  Matrix logits = oracles::random_matrix(4, 5, rng);
  std::vector<int> labels = {1, 3};
  double base = ctc_loss(make_logits(logits), LabelSequence{labels}).loss;
  AlignmentResult base_align = ctc_forced_align(make_logits(logits), LabelSequence{labels});

  Matrix shifted = logits;
  for (int t = 0; t < shifted.cols; ++t) {
    for (int k = 0; k < shifted.rows; ++k) shifted(k, t) += 0.37 * (t + 1);
  }
  double moved = ctc_loss(make_logits(shifted), LabelSequence{labels}).loss;
  AlignmentResult moved_align = ctc_forced_align(make_logits(shifted), LabelSequence{labels});
  REQUIRE(std::abs(base - moved) < 1e-9);
  REQUIRE(base_align.frame_labels == moved_align.frame_labels);
}

TEST_CASE("ctc_loss infeasible label sequences", "[ctc]") {
  Rng rng(16);
  Matrix logits = oracles::random_matrix(3, 2, rng);
  // Two equal labels need three frames (separating blank).
  REQUIRE_THROWS_MATCHES(ctc_loss(make_logits(logits), LabelSequence{{1, 1}}), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.kind() == ErrorKind::kInfeasibleAlignment;
                         }));
  REQUIRE_THROWS_AS(ctc_loss(make_logits(logits), LabelSequence{{}}), Error);
}

TEST_CASE("forced alignment follows a sharply peaked diagonal", "[ctc]") {
  // Frame t overwhelmingly favors the t-th extended symbol.
  int V = 2;
  std::vector<int> labels = {1, 2};
  auto ext = oracles::extended(labels);
  int T = static_cast<int>(ext.size());
  Matrix logits(V + 1, T, -10.0);
  for (int t = 0; t < T; ++t) logits(ext[static_cast<size_t>(t)], t) = 10.0;
  AlignmentResult r = ctc_forced_align(LogitSequence{logits}, LabelSequence{labels});
  for (int t = 0; t < T; ++t) REQUIRE(r.frame_labels[static_cast<size_t>(t)] == t);
  REQUIRE(r.spans.size() == 2);
  REQUIRE(r.spans[0].first_frame == 1);
  REQUIRE(r.spans[0].last_frame == 1);
  REQUIRE(r.spans[1].first_frame == 3);
  REQUIRE(r.spans[1].last_frame == 3);
}

TEST_CASE("forced alignment equals brute-force argmax path", "[ctc]") {
  Rng rng(17);
  for (int rep = 0; rep < 60; ++rep) {
    int T = 2 + rep % 5;
    int V = 1 + rep % 3;
    std::uniform_int_distribution<int> lpick(1, V);
    int L = 1 + rep % 2;
    std::vector<int> labels;
    for (int i = 0; i < L; ++i) labels.push_back(lpick(rng));
    int need = L;
    for (int i = 1; i < L; ++i) {
      if (labels[static_cast<size_t>(i)] == labels[static_cast<size_t>(i - 1)]) ++need;
    }
    if (T < need) continue;
    Matrix logits = oracles::random_matrix(V + 1, T, rng);
    AlignmentResult got = ctc_forced_align(LogitSequence{logits}, LabelSequence{labels});
    std::vector<int> want = oracles::brute_best_path(logits, labels);
    REQUIRE(got.frame_labels == want);
  }
}

TEST_CASE("forced alignment tie-break prefers advancing", "[ctc]") {
  // Uniform logits, T=3, one label: every valid path has equal probability,
  // so the walk starts at the label state (emitting at frame 0) and advances.
  Matrix logits(2, 3, 0.0);
  AlignmentResult r = ctc_forced_align(LogitSequence{logits}, LabelSequence{{1}});
  REQUIRE(r.frame_labels == oracles::brute_best_path(logits, {1}));
  // Emits the label at frame 0.
  REQUIRE(r.frame_labels[0] == 1);
  REQUIRE(r.spans[0].first_frame == 0);
  // Path stays valid and monotone.
  for (size_t t = 1; t < r.frame_labels.size(); ++t) {
    REQUIRE(r.frame_labels[t] >= r.frame_labels[t - 1]);
  }
}

TEST_CASE("forced alignment path probability dominates all valid paths", "[ctc]") {
  Rng rng(18);
  for (int rep = 0; rep < 20; ++rep) {
    int T = 4, V = 2;
    std::vector<int> labels = {1 + rep % V, 1 + (rep / 2) % V};
    int need = labels[0] == labels[1] ? 3 : 2;
    REQUIRE(T >= need);
    Matrix logits = oracles::random_matrix(V + 1, T, rng);
    AlignmentResult got = ctc_forced_align(LogitSequence{logits}, LabelSequence{labels});
    auto paths = oracles::enumerate_ctc_paths(logits, labels);
    double got_lp = 0.0;
    for (int t = 0; t < T; ++t) {
      got_lp += std::log(got.scores[static_cast<size_t>(t)]);
    }
    for (double lp : paths.log_probs) {
      REQUIRE(got_lp >= lp - 1e-9);
    }
  }
}

TEST_CASE("alignment scores are the softmax of chosen symbols", "[ctc]") {
  Rng rng(19);
  Matrix logits = oracles::random_matrix(4, 6, rng);
  std::vector<int> labels = {2, 3};
  AlignmentResult r = ctc_forced_align(LogitSequence{logits}, LabelSequence{labels});
  auto ext = oracles::extended(labels);
  for (int t = 0; t < 6; ++t) {
    int sym = ext[static_cast<size_t>(r.frame_labels[static_cast<size_t>(t)])];
    REQUIRE(r.scores[static_cast<size_t>(t)] ==
            Catch::Approx(softmax_prob(logits, sym, t)).epsilon(1e-12));
    REQUIRE(r.scores[static_cast<size_t>(t)] > 0.0);
    REQUIRE(r.scores[static_cast<size_t>(t)] <= 1.0);
  }
  // Every label owns at least one frame; spans are ordered and disjoint.
  REQUIRE(r.spans[0].first_frame <= r.spans[0].last_frame);
  REQUIRE(r.spans[0].last_frame < r.spans[1].first_frame);
}

TEST_CASE("greedy_decode collapse rules", "[ctc]") {
  auto decode_frames = [](const std::vector<int>& argmax, int vocab) {
    Matrix logits(vocab + 1, static_cast<int>(argmax.size()), 0.0);
    for (size_t t = 0; t < argmax.size(); ++t) {
      logits(argmax[t], static_cast<int>(t)) = 5.0;
    }
    return greedy_decode(LogitSequence{logits}).labels;
  };
  REQUIRE(decode_frames({1, 1, 0, 2}, 2) == std::vector<int>{1, 2});
  REQUIRE(decode_frames({0, 0}, 2) == std::vector<int>{});
  REQUIRE(decode_frames({1, 0, 1}, 2) == std::vector<int>{1, 1});
}

TEST_CASE("greedy_decode inverts blank-interleaved one-hot paths", "[ctc]") {
  Rng rng(20);
  std::uniform_int_distribution<int> vpick(1, 4);
  for (int rep = 0; rep < 50; ++rep) {
    // Random label sequence and a random valid blank-interleaved path.
    int L = 1 + rep % 3;
    std::vector<int> labels;
    for (int i = 0; i < L; ++i) labels.push_back(vpick(rng));
    std::vector<int> frames;
    std::uniform_int_distribution<int> repeat(1, 3);
    std::uniform_int_distribution<int> blanks(0, 2);
    int prev = -1;
    for (int i = 0; i < L; ++i) {
      int nb = blanks(rng);
      if (labels[static_cast<size_t>(i)] == prev && nb == 0) nb = 1;  // separate repeats
      for (int b = 0; b < nb; ++b) frames.push_back(0);
      int nr = repeat(rng);
      for (int r = 0; r < nr; ++r) frames.push_back(labels[static_cast<size_t>(i)]);
      prev = labels[static_cast<size_t>(i)];
    }
    for (int b = 0; b < blanks(rng); ++b) frames.push_back(0);

    Matrix logits(5, static_cast<int>(frames.size()), 0.0);
    for (size_t t = 0; t < frames.size(); ++t) logits(frames[t], static_cast<int>(t)) = 8.0;
    REQUIRE(greedy_decode(LogitSequence{logits}).labels == labels);
  }
}
