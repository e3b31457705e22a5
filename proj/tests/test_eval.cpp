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
#include "phoncl/eval.hpp"

using namespace phoncl;

TEST_CASE("per identity, hand cases, and rates above one", "[eval]") {
  REQUIRE(per({1, 2, 3}, {1, 2, 3}) == 0.0);
  REQUIRE(per({1, 2, 3}, {1, 3}) == Catch::Approx(1.0 / 3));
  REQUIRE(per({1}, {2, 3}) == Catch::Approx(2.0));
  REQUIRE_THROWS_AS(per({}, {1}), Error);
}

TEST_CASE("edit distance is symmetric and non-negative", "[eval]") {
  Rng rng(61);
  std::uniform_int_distribution<int> len(0, 6), sym(1, 4);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<int> a, b;
    for (int i = len(rng); i > 0; --i) a.push_back(sym(rng));
    for (int i = len(rng); i > 0; --i) b.push_back(sym(rng));
    int d = edit_distance(a, b);
    REQUIRE(d >= 0);
    REQUIRE(d == edit_distance(b, a));
    REQUIRE(edit_distance(a, a) == 0);
  }
}

TEST_CASE("word_decode picks exact and nearest entries", "[eval]") {
  const auto& table = builtin_feature_table();
  Lexicon lex;
  lex.entries.push_back({"bat", {"b", "ae", "t"}, true});
  lex.entries.push_back({"bad", {"b", "ae", "d"}, true});
  lex.entries.push_back({"zoo", {"z", "uw"}, true});

  auto labels = [&](std::vector<std::string> ph) { return phonemes_to_labels(ph, table); };
  REQUIRE(word_decode(labels({"z", "uw"}), lex, table).word == "zoo");
  // one substitution away from a unique nearest entry
  REQUIRE(word_decode(labels({"z", "uh"}), lex, table).word == "zoo");
  // equidistant between bat and bad: earlier lexicon entry wins
  REQUIRE(word_decode(labels({"b", "ae"}), lex, table).word == "bat");
  // empty decode maps to the nearest-by-distance entry (shortest)
  REQUIRE(word_decode({}, lex, table).word == "zoo");
}

TEST_CASE("group report weighted and unweighted means", "[eval]") {
  // Rates 10/20/30/40 percent with speaker counts 5/3/3/4.
  std::vector<UtteranceScore> scores;
  auto add_group = [&](Group g, int n_speakers, double rate) {
    int utts_per_speaker = 10;
    int wrong_total = static_cast<int>(rate * n_speakers * utts_per_speaker);
    int made = 0;
    for (int s = 0; s < n_speakers; ++s) {
      for (int u = 0; u < utts_per_speaker; ++u) {
        UtteranceScore sc;
        sc.group = g;
        sc.speaker_id = to_string(g) + std::to_string(s);
        sc.word_correct = made >= wrong_total;
        ++made;
        sc.ref_len = 1;
        scores.push_back(sc);
      }
    }
  };
  add_group(Group::H, 5, 0.10);
  add_group(Group::M, 3, 0.20);
  add_group(Group::L, 3, 0.30);
  add_group(Group::VL, 4, 0.40);
  GroupReport rep = make_group_report(scores);
  REQUIRE(rep.rows.at(Group::H).wer == Catch::Approx(0.10));
  REQUIRE(rep.rows.at(Group::VL).n_speakers == 4);
  // (5*10 + 3*20 + 3*30 + 4*40) / 15 = 24.0%
  REQUIRE(rep.all_wer == Catch::Approx(0.24));
  REQUIRE(rep.all_wer_unweighted == Catch::Approx(0.25));
}

TEST_CASE("group report handles absent groups", "[eval]") {
  std::vector<UtteranceScore> scores;
  UtteranceScore a;
  a.group = Group::H;
  a.speaker_id = "H1";
  a.word_correct = true;
  a.ref_len = 3;
  scores.push_back(a);
  GroupReport rep = make_group_report(scores);
  REQUIRE(rep.rows.count(Group::VL) == 0);
  REQUIRE(rep.rows.count(Group::H) == 1);
  REQUIRE(rep.all_wer == 0.0);
}

TEST_CASE("alignment accuracy on exact, shifted, and disjoint spans", "[eval]") {
  std::vector<std::pair<int, int>> truth = {{0, 3}, {4, 7}};
  auto spans = [](std::vector<std::pair<int, int>> ranges) {
    std::vector<PhonemeSpan> out;
    for (auto [a, b] : ranges) {
      PhonemeSpan s;
      s.first_frame = a;
      s.last_frame = b;
      out.push_back(s);
    }
    return out;
  };
  auto exact = alignment_accuracy(spans({{0, 3}, {4, 7}}), truth, 8);
  REQUIRE(exact.mean_iou == Catch::Approx(1.0));
  REQUIRE(exact.frame_accuracy == Catch::Approx(1.0));

  // span of length 4 shifted by half its length: intersection 2, union 6
  auto shifted = alignment_accuracy(spans({{2, 5}, {4, 7}}), {{0, 3}, {4, 7}}, 8);
  REQUIRE(shifted.mean_iou == Catch::Approx((2.0 / 6.0 + 1.0) / 2.0));

  auto disjoint = alignment_accuracy(spans({{4, 7}, {0, 3}}), {{0, 3}, {4, 7}}, 8);
  REQUIRE(disjoint.mean_iou == 0.0);
  REQUIRE(disjoint.frame_accuracy == 0.0);

  REQUIRE_THROWS_AS(alignment_accuracy(spans({{0, 1}}), truth, 8), Error);
}

TEST_CASE("embedding separation orders far and near clusters", "[eval]") {
  Rng rng(62);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto cluster_pair = [&](double gap) {
    std::vector<std::vector<double>> embs;
    std::vector<int> ids;
    for (int c = 0; c < 2; ++c) {
      for (int i = 0; i < 40; ++i) {
        std::vector<double> v = {c * gap + unit(rng), unit(rng)};
        embs.push_back(v);
        ids.push_back(c);
      }
    }
    return embedding_separation(embs, ids);
  };
  auto far = cluster_pair(10.0);
  auto near = cluster_pair(1.0);
  REQUIRE(far.fisher_ratio > near.fisher_ratio);
  REQUIRE(far.silhouette > near.silhouette);
}

TEST_CASE("embedding separation degenerate cases", "[eval]") {
  // Two classes collapsed to two distinct points: intra variance 0.
  std::vector<std::vector<double>> embs = {{0.0, 0.0}, {0.0, 0.0}, {5.0, 5.0}, {5.0, 5.0}};
  std::vector<int> ids = {0, 0, 1, 1};
  auto stats = embedding_separation(embs, ids);
  REQUIRE(stats.fisher_ratio == kFisherCap);

  REQUIRE_THROWS_AS(embedding_separation({{1.0}, {2.0}}, {0, 0}), Error);
  REQUIRE_THROWS_AS(embedding_separation({{1.0}, {2.0}, {3.0}}, {0, 0, 1}), Error);
}

TEST_CASE("embedding separation is permutation invariant", "[eval]") {
  Rng rng(63);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> embs;
  std::vector<int> ids;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 10; ++i) {
      embs.push_back({c * 2.0 + unit(rng), unit(rng), unit(rng)});
      ids.push_back(c);
    }
  }
  auto base = embedding_separation(embs, ids);
  std::vector<int> order(embs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<double>> p_embs;
  std::vector<int> p_ids;
  for (int i : order) {
    p_embs.push_back(embs[static_cast<size_t>(i)]);
    p_ids.push_back(ids[static_cast<size_t>(i)]);
  }
  auto perm = embedding_separation(p_embs, p_ids);
  REQUIRE(base.fisher_ratio == Catch::Approx(perm.fisher_ratio).epsilon(1e-12));
  REQUIRE(base.silhouette == Catch::Approx(perm.silhouette).epsilon(1e-12));
}

TEST_CASE("group report csv includes ALL rows", "[eval]") {
  std::vector<UtteranceScore> scores;
  UtteranceScore a;
  a.group = Group::H;
  a.speaker_id = "H1";
  a.word_correct = false;
  a.phoneme_edits = 1;
  a.ref_len = 2;
  scores.push_back(a);
  std::ostringstream os;
  write_group_report_csv(make_group_report(scores), os);
  std::string csv = os.str();
  REQUIRE(csv.find("group,n_utts,wer,per\n") == 0);
  REQUIRE(csv.find("H,1,1.000000,0.500000") != std::string::npos);
  REQUIRE(csv.find("ALL,") != std::string::npos);
  REQUIRE(csv.find("ALL*,") != std::string::npos);
}
