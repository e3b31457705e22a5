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
#include "phoncl/dynalign.hpp"

using namespace phoncl;

namespace {

AlignmentResult span_result(int label, int first, int last, std::vector<double> scores) {
  AlignmentResult r;
  PhonemeSpan s;
  s.label = label;
  s.first_frame = first;
  s.last_frame = last;
  s.frame_scores = std::move(scores);
  r.spans.push_back(s);
  return r;
}

EmbeddingSequence toy_embeddings(int dim, int frames) {
  Matrix m(dim, frames);
  for (int e = 0; e < dim; ++e) {
    for (int t = 0; t < frames; ++t) m(e, t) = 10.0 * t + e;
  }
  return EmbeddingSequence{m};
}

}  // namespace

TEST_CASE("single-frame span returns that column", "[dynalign]") {
  auto emb = toy_embeddings(3, 5);
  auto align = span_result(1, 2, 2, {0.4});
  auto pe = extract_phoneme_embedding(emb, align, 0);
  REQUIRE(pe.vector == std::vector<double>{20.0, 21.0, 22.0});
  REQUIRE(pe.phoneme == 1);
}

TEST_CASE("two-frame span uses normalized score weights", "[dynalign]") {
  auto emb = toy_embeddings(2, 4);
  auto align = span_result(2, 1, 2, {0.6, 0.2});
  auto pe = extract_phoneme_embedding(emb, align, 0);
  // weights 0.75 / 0.25 over columns 1 and 2
  REQUIRE(pe.vector[0] == Catch::Approx(0.75 * 10.0 + 0.25 * 20.0));
  REQUIRE(pe.vector[1] == Catch::Approx(0.75 * 11.0 + 0.25 * 21.0));
}

TEST_CASE("equal scores pool to the arithmetic mean", "[dynalign]") {
  auto emb = toy_embeddings(2, 6);
  auto align = span_result(1, 1, 4, {0.3, 0.3, 0.3, 0.3});
  auto pe = extract_phoneme_embedding(emb, align, 0);
  REQUIRE(pe.vector[0] == Catch::Approx((10.0 + 20.0 + 30.0 + 40.0) / 4.0));
}

TEST_CASE("pooling weights sum to one and stay in the convex hull", "[dynalign]") {
  Rng rng(42);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    int dim = 3, frames = 6;
    Matrix m = oracles::random_matrix(dim, frames, rng);
    EmbeddingSequence emb{m};
    int first = rep % 3, last = first + 1 + rep % 3;
    std::vector<double> scores;
    for (int t = first; t <= last; ++t) scores.push_back(score(rng) + 1e-3);
    auto align = span_result(1, first, last, scores);
    auto pe = extract_phoneme_embedding(emb, align, 0);
    for (int e = 0; e < dim; ++e) {
      double lo = 1e300, hi = -1e300;
      for (int t = first; t <= last; ++t) {
        lo = std::min(lo, m(e, t));
        hi = std::max(hi, m(e, t));
      }
      REQUIRE(pe.vector[static_cast<size_t>(e)] >= lo - 1e-12);
      REQUIRE(pe.vector[static_cast<size_t>(e)] <= hi + 1e-12);
    }
  }
}

TEST_CASE("out-of-range label position", "[dynalign]") {
  auto emb = toy_embeddings(2, 3);
  auto align = span_result(1, 0, 0, {0.5});
  REQUIRE_THROWS_AS(extract_phoneme_embedding(emb, align, 1), Error);
}

TEST_CASE("extract_all yields one embedding per label in order", "[dynalign]") {
  Rng rng(43);
  int V = 3, T = 8;
  Matrix logits = oracles::random_matrix(V + 1, T, rng);
  Matrix embm = oracles::random_matrix(4, T, rng);
  std::vector<int> labels = {1, 3, 2};
  auto out = extract_all(EmbeddingSequence{embm}, LogitSequence{logits}, LabelSequence{labels});
  REQUIRE(out.size() == 3);
  REQUIRE(out[0].phoneme == 1);
  REQUIRE(out[1].phoneme == 3);
  REQUIRE(out[2].phoneme == 2);
  REQUIRE(out[0].last_frame < out[1].first_frame + 1);
}

TEST_CASE("extract_all is deterministic for fixed logits", "[dynalign]") {
  Rng rng(44);
  Matrix logits = oracles::random_matrix(4, 7, rng);
  Matrix embm = oracles::random_matrix(3, 7, rng);
  std::vector<int> labels = {2, 1};
  auto a = extract_all(EmbeddingSequence{embm}, LogitSequence{logits}, LabelSequence{labels});
  auto b = extract_all(EmbeddingSequence{embm}, LogitSequence{logits}, LabelSequence{labels});
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].vector == b[i].vector);  // bitwise
  }
}

TEST_CASE("timestamp_extract hand index arithmetic", "[dynalign]") {
  auto emb = toy_embeddings(2, 10);
  // hop = window = 5ms: interval [20, 40) covers exactly frames 4..7.
  auto out = timestamp_extract(emb, {{20.0, 40.0}}, 5.0, 5.0);
  REQUIRE(out.size() == 1);
  REQUIRE(out[0].first_frame == 4);
  REQUIRE(out[0].last_frame == 7);
  REQUIRE(out[0].vector[0] == Catch::Approx((40.0 + 50.0 + 60.0 + 70.0) / 4.0));
}

TEST_CASE("timestamp_extract sub-hop interval hits one frame", "[dynalign]") {
  auto emb = toy_embeddings(2, 10);
  auto out = timestamp_extract(emb, {{11.0, 12.0}}, 5.0, 5.0);
  REQUIRE(out.size() == 1);
  REQUIRE(out[0].first_frame == 2);
  REQUIRE(out[0].last_frame == 2);
  REQUIRE(out[0].vector[1] == Catch::Approx(21.0));
}

TEST_CASE("timestamp_extract empty overlap is a degenerate span", "[dynalign]") {
  auto emb = toy_embeddings(2, 4);
  try {
    timestamp_extract(emb, {{100.0, 100.0}}, 5.0, 5.0);
    FAIL("expected error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::kDegenerateSpan);
  }
}

TEST_CASE("timestamp_extract wide windows bleed into neighbours", "[dynalign]") {
  auto emb = toy_embeddings(1, 20);
  // window 25ms >> hop 5ms: interval [30, 45) overlaps every frame whose
  // 25ms window intersects it, i.e. frames 2..8.
  auto out = timestamp_extract(emb, {{30.0, 45.0}}, 5.0, 25.0);
  REQUIRE(out[0].first_frame == 2);
  REQUIRE(out[0].last_frame == 8);
}

TEST_CASE("timestamp_extract validates interval ordering", "[dynalign]") {
  auto emb = toy_embeddings(1, 10);
  REQUIRE_THROWS_AS(timestamp_extract(emb, {{10.0, 20.0}, {15.0, 30.0}}, 5.0, 5.0), Error);
  REQUIRE_THROWS_AS(timestamp_extract(emb, {{20.0, 10.0}}, 5.0, 5.0), Error);
}

TEST_CASE("embedding csv export shape", "[dynalign]") {
  std::ostringstream os;
  write_embedding_csv_header(os, 3);
  write_embedding_csv_row(os, "C01_bat", "ae", Group::C, {1.0, 2.5, -3.0});
  std::string csv = os.str();
  REQUIRE(csv.find("utterance_id,phoneme,group,e_1,e_2,e_3\n") == 0);
  REQUIRE(csv.find("C01_bat,ae,C,1,2.5,-3") != std::string::npos);
}
