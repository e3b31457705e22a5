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

#include <filesystem>
#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "phoncl/synthcorpus.hpp"

using namespace phoncl;
namespace fs = std::filesystem;

namespace {

CorpusConfig small_config() {
  CorpusConfig c;
  c.n_speakers_per_group = 1;
  c.n_repetitions = 1;
  c.feature_dim = 8;
  c.base_segment_len = 4;
  return c;
}

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("phoncl_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("builtin lexicon satisfies its invariants", "[synthcorpus]") {
  const auto& lex = builtin_lexicon();
  const auto& table = builtin_feature_table();
  REQUIRE(lex.size() >= 30);
  REQUIRE(lex.validation_errors(table).empty());
  bool any_common = false, any_uncommon = false;
  for (const auto& e : lex.entries) (e.common ? any_common : any_uncommon) = true;
  REQUIRE(any_common);
  REQUIRE(any_uncommon);
}

TEST_CASE("lexicon validation aggregates every problem", "[synthcorpus]") {
  Lexicon lex;
  lex.entries.push_back({"bad", {"qq", "zz"}, true});
  lex.entries.push_back({"bad", {"k"}, false});
  auto errs = lex.validation_errors(builtin_feature_table());
  // word-count problem + duplicate + two unknown phonemes + coverage gaps
  REQUIRE(errs.size() > 4);
  int unknown = 0;
  for (const auto& e : errs) {
    if (e.find("unknown phoneme") != std::string::npos) ++unknown;
  }
  REQUIRE(unknown == 2);
}

TEST_CASE("clean control profile produces exact prototype repetitions", "[synthcorpus]") {
  CorpusConfig c = small_config();
  for (Group g : kAllGroups) c.profiles[g] = GroupProfile{0.0, 0.0, 1.0, 1.0, 0.0};
  Corpus corpus = generate_corpus(c, 5, builtin_feature_table());
  REQUIRE_FALSE(corpus.utterances.empty());
  for (const auto& u : corpus.utterances) {
    REQUIRE(u.boundaries.size() == u.phonemes.size());
    for (size_t p = 0; p < u.boundaries.size(); ++p) {
      auto [first, last] = u.boundaries[static_cast<size_t>(p)];
      REQUIRE(last - first + 1 == c.base_segment_len);
      // identical columns inside a segment
      for (int t = first + 1; t <= last; ++t) {
        for (int r = 0; r < u.frames.rows; ++r) {
          REQUIRE(u.frames(r, t) == u.frames(r, first));
        }
      }
    }
  }
}

TEST_CASE("boundaries partition the frame range", "[synthcorpus]") {
  CorpusConfig c;
  c.n_speakers_per_group = 2;
  c.feature_dim = 8;
  c.base_segment_len = 5;
  Corpus corpus = generate_corpus(c, 17, builtin_feature_table());
  for (const auto& u : corpus.utterances) {
    int expect = 0;
    for (auto [first, last] : u.boundaries) {
      REQUIRE(first == expect);
      REQUIRE(last >= first);
      expect = last + 1;
    }
    REQUIRE(expect == u.frame_count());
  }
}

TEST_CASE("generation is byte-identical for a fixed seed", "[synthcorpus]") {
  CorpusConfig c = small_config();
  Corpus a = generate_corpus(c, 99, builtin_feature_table());
  Corpus b = generate_corpus(c, 99, builtin_feature_table());
  REQUIRE(a == b);
  Corpus d = generate_corpus(c, 100, builtin_feature_table());
  REQUIRE_FALSE(a == d);
}

TEST_CASE("severity ordering shows up as strictly decreasing SNR", "[synthcorpus]") {
  CorpusConfig c;
  c.n_speakers_per_group = 2;  // 2 speakers x 66 words > 100 utterances per group
  GenerationReport report;
  Corpus corpus = generate_corpus(c, 3, builtin_feature_table(), &report);
  (void)corpus;
  for (Group g : kAllGroups) REQUIRE(report.utterance_count[g] >= 100);
  REQUIRE(report.mean_snr_db[Group::C] > report.mean_snr_db[Group::H]);
  REQUIRE(report.mean_snr_db[Group::H] > report.mean_snr_db[Group::M]);
  REQUIRE(report.mean_snr_db[Group::M] > report.mean_snr_db[Group::L]);
  REQUIRE(report.mean_snr_db[Group::L] > report.mean_snr_db[Group::VL]);
}

TEST_CASE("splits follow the block rules and stay disjoint", "[synthcorpus]") {
  CorpusConfig c;
  c.feature_dim = 8;
  Corpus corpus = generate_corpus(c, 21, builtin_feature_table());
  SplitResult s = split_corpus(corpus);

  std::vector<int> seen(corpus.utterances.size(), 0);
  for (int i : s.train) ++seen[static_cast<size_t>(i)];
  for (int i : s.valid) ++seen[static_cast<size_t>(i)];
  for (int i : s.test) ++seen[static_cast<size_t>(i)];
  for (int count : seen) REQUIRE(count == 1);  // exactly one of TRAIN/VALID/TEST

  for (int i : s.test) {
    const Utterance& u = corpus.utterances[static_cast<size_t>(i)];
    REQUIRE(u.block == 2);
    REQUIRE(u.group != Group::C);
  }
  for (int i : s.train) {
    const Utterance& u = corpus.utterances[static_cast<size_t>(i)];
    REQUIRE((u.block != 2 || u.group == Group::C));
  }
  // CTEST is the common-word subset of TEST.
  std::set<int> test_set(s.test.begin(), s.test.end());
  for (int i : s.ctest) {
    REQUIRE(test_set.count(i) == 1);
    const LexiconEntry* e = corpus.lexicon.find(corpus.utterances[static_cast<size_t>(i)].word);
    REQUIRE(e != nullptr);
    REQUIRE(e->common);
  }
  for (int i : s.test) {
    const LexiconEntry* e = corpus.lexicon.find(corpus.utterances[static_cast<size_t>(i)].word);
    bool in_ctest = std::find(s.ctest.begin(), s.ctest.end(), i) != s.ctest.end();
    REQUIRE(in_ctest == e->common);
  }
  REQUIRE(s.valid.size() > 0);
  REQUIRE(s.valid.size() < s.train.size());
}

TEST_CASE("manifest round trip is structurally exact", "[synthcorpus]") {
  CorpusConfig c = small_config();
  Corpus corpus = generate_corpus(c, 8, builtin_feature_table());
  corpus.utterances.resize(10);
  auto dir = temp_dir("roundtrip");
  save_manifest(corpus, dir.string());
  Corpus loaded = load_manifest(dir.string());
  REQUIRE(loaded == corpus);
}

TEST_CASE("truncated frame blob fails the checksum", "[synthcorpus]") {
  CorpusConfig c = small_config();
  Corpus corpus = generate_corpus(c, 8, builtin_feature_table());
  corpus.utterances.resize(5);
  auto dir = temp_dir("truncated");
  save_manifest(corpus, dir.string());
  // Truncate the blob.
  auto blob = dir / kFramesFileName;
  auto size = fs::file_size(blob);
  fs::resize_file(blob, size - 8);
  try {
    load_manifest(dir.string());
    FAIL("expected checksum error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::kManifestChecksum);
  }
}

TEST_CASE("unknown schema version refuses to load", "[synthcorpus]") {
  CorpusConfig c = small_config();
  Corpus corpus = generate_corpus(c, 8, builtin_feature_table());
  corpus.utterances.resize(3);
  auto dir = temp_dir("version");
  save_manifest(corpus, dir.string());
  // Bump schema_version in the header line.
  auto path = dir / kManifestFileName;
  std::ifstream is(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  std::string text = ss.str();
  is.close();
  size_t pos = text.find("schema_version=1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 16, "schema_version=9");
  std::ofstream(path) << text;
  try {
    load_manifest(dir.string());
    FAIL("expected version error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::kManifestVersion);
  }
}

TEST_CASE("malformed manifest records get their own error", "[synthcorpus]") {
  CorpusConfig c = small_config();
  Corpus corpus = generate_corpus(c, 8, builtin_feature_table());
  corpus.utterances.resize(3);
  auto dir = temp_dir("malformed");
  save_manifest(corpus, dir.string());
  auto path = dir / kManifestFileName;
  std::ofstream(path, std::ios::app) << "this,is,not,a,record\n";
  try {
    load_manifest(dir.string());
    FAIL("expected malformed error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::kManifestMalformed);
  }
}

TEST_CASE("config validation rejects unknown lexicon phonemes", "[synthcorpus]") {
  CorpusConfig c = small_config();
  Lexicon lex = builtin_lexicon();
  lex.entries[0].phonemes.push_back("nope");
  c.lexicon = lex;
  try {
    generate_corpus(c, 1, builtin_feature_table());
    FAIL("expected validation error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::kValidation);
    REQUIRE(std::string(e.what()).find("nope") != std::string::npos);
  }
}

TEST_CASE("frames are exactly float32 representable", "[synthcorpus]") {
  CorpusConfig c = small_config();
  Corpus corpus = generate_corpus(c, 31, builtin_feature_table());
  for (const auto& u : corpus.utterances) {
    for (double v : u.frames.data) {
      REQUIRE(static_cast<double>(static_cast<float>(v)) == v);
    }
  }
}
