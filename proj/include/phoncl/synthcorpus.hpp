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
#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "phoncl/phonetics.hpp"

namespace phoncl {

// ---------------------------------------------------------------------------
// Lexicon.
// ---------------------------------------------------------------------------

struct LexiconEntry {
  std::string word;
  std::vector<std::string> phonemes;
  bool common = false;
};

struct Lexicon {
  std::vector<LexiconEntry> entries;  // order is the decode tie-break order

  int size() const { return static_cast<int>(entries.size()); }

  const LexiconEntry* find(const std::string& word) const {
    for (const auto& e : entries) {
      if (e.word == word) return &e;
    }
    return nullptr;
  }

  // Collects every validation problem instead of stopping at the first.
  std::vector<std::string> validation_errors(const PhonemeFeatureTable& table) const {
    std::vector<std::string> errs;
    if (size() < 30) errs.push_back("lexicon needs >= 30 words, has " + std::to_string(size()));
    std::map<std::string, int> coverage;
    for (const auto& p : table.inventory) coverage[p] = 0;
    std::map<std::string, int> seen;
    for (const auto& e : entries) {
      if (e.word.empty()) errs.push_back("empty word");
      if (++seen[e.word] == 2) errs.push_back("duplicate word '" + e.word + "'");
      if (e.phonemes.empty()) errs.push_back("word '" + e.word + "' has no phonemes");
      for (const auto& p : e.phonemes) {
        if (!table.contains(p)) {
          errs.push_back("word '" + e.word + "' uses unknown phoneme '" + p + "'");
        } else {
          ++coverage[p];
        }
      }
    }
    for (const auto& [p, c] : coverage) {
      if (c < 2) errs.push_back("phoneme '" + p + "' appears in fewer than 2 words");
    }
    return errs;
  }

  void validate(const PhonemeFeatureTable& table) const {
    auto errs = validation_errors(table);
    if (!errs.empty()) fail(ErrorKind::kValidation, join(errs, "; "));
  }
};

// TSV rows: word <TAB> common(0|1) <TAB> space-joined phonemes.
inline Lexicon parse_lexicon(std::istream& is) {
  Lexicon lex;
  std::string line;
  int row = 0;
  while (std::getline(is, line)) {
    ++row;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cells = split(t, '\t');
    if (cells.size() != 3) {
      fail(ErrorKind::kValidation, "lexicon row " + std::to_string(row) + ": want 3 columns");
    }
    LexiconEntry e;
    e.word = cells[0];
    e.common = cells[1] == "1";
    for (auto& p : split(cells[2], ' ')) {
      if (!p.empty()) e.phonemes.push_back(p);
    }
    lex.entries.push_back(std::move(e));
  }
  return lex;
}

inline Lexicon parse_lexicon(const std::string& text) {
  std::istringstream is(text);
  return parse_lexicon(is);
}

inline void write_lexicon(const Lexicon& lex, std::ostream& os) {
  for (const auto& e : lex.entries) {
    os << e.word << '\t' << (e.common ? 1 : 0) << '\t' << join(e.phonemes, " ") << '\n';
  }
}

inline const Lexicon& builtin_lexicon() {
  static const Lexicon lex = parse_lexicon(std::string(data::kLexiconTsv));
  return lex;
}

// ---------------------------------------------------------------------------
// Speakers and generation config.
// ---------------------------------------------------------------------------

struct GroupProfile {
  double noise_sigma = 0.0;
  double distortion_strength = 0.0;  // scale of the random linear map offset
  double tempo_min = 1.0;
  double tempo_max = 1.0;
  double drop_prob = 0.0;
};

// Severity grows from C to VL in every degradation channel. Tuned so that a
// CTC-only model lands in very different per-group regimes (a few percent
// word errors on H, roughly half the words wrong on VL) with visibly
// degrading alignment quality down the severity order.
inline std::map<Group, GroupProfile> default_group_profiles() {
  return {
      {Group::C, {0.05, 0.00, 1.00, 1.00, 0.00}},
      {Group::H, {0.30, 0.15, 0.90, 1.20, 0.02}},
      {Group::M, {0.60, 0.30, 0.80, 1.35, 0.06}},
      {Group::L, {1.00, 0.50, 0.65, 1.50, 0.12}},
      {Group::VL, {1.50, 0.75, 0.50, 1.70, 0.20}},
  };
}

struct SpeakerProfile {
  std::string speaker_id;
  Group group = Group::C;
  Matrix distortion;  // [F_ac x F_ac]
  double noise_sigma = 0.0;
  double tempo_min = 1.0;
  double tempo_max = 1.0;
  double drop_prob = 0.0;
};

struct CorpusConfig {
  int n_speakers_per_group = 2;
  int n_repetitions = 3;     // one utterance per block when 3
  int feature_dim = 16;      // F_ac
  int base_segment_len = 6;  // frames per phoneme before tempo scaling
  double prototype_scale = 1.0;
  Lexicon lexicon;  // empty means builtin
  std::map<Group, GroupProfile> profiles = default_group_profiles();

  const Lexicon& effective_lexicon() const {
    return lexicon.entries.empty() ? builtin_lexicon() : lexicon;
  }

  void validate(const PhonemeFeatureTable& table) const {
    if (n_speakers_per_group < 1) fail(ErrorKind::kValidation, "need >= 1 speaker per group");
    if (n_repetitions < 1 || n_repetitions > 3) {
      fail(ErrorKind::kValidation, "n_repetitions must be between 1 and 3");
    }
    if (feature_dim < 1) fail(ErrorKind::kValidation, "feature_dim must be positive");
    if (base_segment_len < 1) fail(ErrorKind::kValidation, "base_segment_len must be positive");
    effective_lexicon().validate(table);
    for (Group g : kAllGroups) {
      auto it = profiles.find(g);
      if (it == profiles.end()) {
        fail(ErrorKind::kValidation, "missing profile for group " + to_string(g));
      }
      const GroupProfile& p = it->second;
      if (p.noise_sigma < 0 || p.drop_prob < 0 || p.drop_prob >= 1 ||
          p.tempo_min <= 0 || p.tempo_max < p.tempo_min) {
        fail(ErrorKind::kValidation, "bad profile for group " + to_string(g));
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Corpus.
// ---------------------------------------------------------------------------

struct Utterance {
  std::string utterance_id;
  std::string speaker_id;
  Group group = Group::C;
  std::string word;
  std::vector<std::string> phonemes;
  Matrix frames;  // [F_ac x T], values exactly representable as float32
  std::vector<std::pair<int, int>> boundaries;  // inclusive (first, last) per phoneme
  int block = 1;  // 1..3

  int frame_count() const { return frames.cols; }

  bool operator==(const Utterance&) const = default;
};

struct Corpus {
  int feature_dim = 0;
  std::vector<Utterance> utterances;
  Lexicon lexicon;

  bool operator==(const Corpus& o) const {
    if (feature_dim != o.feature_dim || utterances != o.utterances) return false;
    if (lexicon.entries.size() != o.lexicon.entries.size()) return false;
    for (size_t i = 0; i < lexicon.entries.size(); ++i) {
      const auto& a = lexicon.entries[i];
      const auto& b = o.lexicon.entries[i];
      if (a.word != b.word || a.phonemes != b.phonemes || a.common != b.common) return false;
    }
    return true;
  }
};

struct GenerationReport {
  std::map<Group, double> mean_snr_db;
  std::map<Group, int> utterance_count;
  std::vector<SpeakerProfile> speakers;
};

namespace detail {

inline void quantize_f32(Matrix& m) {
  for (double& v : m.data) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace detail

// Builds one utterance per (speaker, word): per-phoneme prototype columns
// repeated for a tempo-scaled length, pushed through the speaker's linear
// distortion, plus Gaussian noise and per-frame drops. Blocks B1/B2/B3 are
// assigned round-robin over (speaker, word) so each word hits different
// blocks for different speakers. Fully deterministic given the seed;
// per-utterance RNG streams make generation order irrelevant.
inline Corpus generate_corpus(const CorpusConfig& config, uint64_t seed,
                              const PhonemeFeatureTable& table,
                              GenerationReport* report = nullptr) {
  config.validate(table);
  const Lexicon& lexicon = config.effective_lexicon();
  const int fdim = config.feature_dim;

  // Phoneme prototypes, one draw per corpus.
  Rng proto_rng(derive_seed(seed, "prototypes"));
  std::normal_distribution<double> unit(0.0, 1.0);
  std::map<std::string, std::vector<double>> prototypes;
  for (const auto& p : table.inventory) {
    std::vector<double> v(static_cast<size_t>(fdim));
    for (auto& x : v) x = config.prototype_scale * unit(proto_rng);
    prototypes[p] = v;
  }

  // Speaker roster with realized distortion maps.
  std::vector<SpeakerProfile> speakers;
  for (Group g : kAllGroups) {
    const GroupProfile& gp = config.profiles.at(g);
    for (int i = 0; i < config.n_speakers_per_group; ++i) {
      SpeakerProfile sp;
      sp.speaker_id = to_string(g) + (i < 9 ? "0" : "") + std::to_string(i + 1);
      sp.group = g;
      sp.noise_sigma = gp.noise_sigma;
      sp.tempo_min = gp.tempo_min;
      sp.tempo_max = gp.tempo_max;
      sp.drop_prob = gp.drop_prob;
      Rng srng(derive_seed(seed, "speaker:" + sp.speaker_id));
      sp.distortion = identity(fdim);
      double scale = gp.distortion_strength / std::sqrt(static_cast<double>(fdim));
      for (int r = 0; r < fdim; ++r) {
        for (int c = 0; c < fdim; ++c) {
          sp.distortion(r, c) += scale * unit(srng);
        }
      }
      speakers.push_back(std::move(sp));
    }
  }

  Corpus corpus;
  corpus.feature_dim = fdim;
  corpus.lexicon = lexicon;

  std::map<Group, double> snr_signal, snr_noise;
  std::map<Group, int> counts;

  for (size_t si = 0; si < speakers.size(); ++si) {
    const SpeakerProfile& sp = speakers[si];
    for (size_t wi = 0; wi < lexicon.entries.size(); ++wi) {
      const LexiconEntry& entry = lexicon.entries[wi];
      for (int rep = 0; rep < config.n_repetitions; ++rep) {
        Utterance utt;
        utt.block = static_cast<int>((si + wi + static_cast<size_t>(rep)) % 3) + 1;
        utt.utterance_id = sp.speaker_id + "_" + entry.word + "_B" + std::to_string(utt.block);
        utt.speaker_id = sp.speaker_id;
        utt.group = sp.group;
        utt.word = entry.word;
        utt.phonemes = entry.phonemes;

        Rng rng(derive_seed(seed, "utt:" + utt.utterance_id));
        std::uniform_real_distribution<double> tempo(sp.tempo_min, sp.tempo_max);
        std::uniform_real_distribution<double> coin(0.0, 1.0);

        // Per-phoneme kept lengths, >= 1 frame each.
        std::vector<int> seg_len;
        for (size_t pi = 0; pi < entry.phonemes.size(); ++pi) {
          int len = std::max(1, static_cast<int>(std::lround(config.base_segment_len * tempo(rng))));
          int kept = 0;
          for (int f = 0; f < len; ++f) {
            if (coin(rng) >= sp.drop_prob) ++kept;
          }
          seg_len.push_back(std::max(1, kept));
      }
      int total = 0;
      for (int l : seg_len) total += l;

      utt.frames = Matrix(fdim, total);
      utt.boundaries.reserve(entry.phonemes.size());
      double sig_power = 0.0, noise_power = 0.0;
      int t = 0;
      for (size_t pi = 0; pi < entry.phonemes.size(); ++pi) {
        const auto& proto = prototypes.at(entry.phonemes[pi]);
        std::vector<double> clean(static_cast<size_t>(fdim), 0.0);
        for (int r = 0; r < fdim; ++r) {
          double acc = 0.0;
          for (int c = 0; c < fdim; ++c) acc += sp.distortion(r, c) * proto[static_cast<size_t>(c)];
          clean[static_cast<size_t>(r)] = acc;
        }
        int first = t;
        for (int f = 0; f < seg_len[pi]; ++f, ++t) {
          for (int r = 0; r < fdim; ++r) {
            double noise = sp.noise_sigma > 0.0 ? sp.noise_sigma * unit(rng) : 0.0;
            utt.frames(r, t) = clean[static_cast<size_t>(r)] + noise;
            sig_power += clean[static_cast<size_t>(r)] * clean[static_cast<size_t>(r)];
            noise_power += noise * noise;
          }
        }
        utt.boundaries.emplace_back(first, t - 1);
      }
      detail::quantize_f32(utt.frames);

      snr_signal[sp.group] += sig_power;
      snr_noise[sp.group] += noise_power;
      counts[sp.group] += 1;
      corpus.utterances.push_back(std::move(utt));
      }
    }
  }

  if (report) {
    report->speakers = speakers;
    report->utterance_count = counts;
    for (Group g : kAllGroups) {
      double n = snr_noise[g];
      report->mean_snr_db[g] =
          n > 0.0 ? 10.0 * std::log10(snr_signal[g] / n) : std::numeric_limits<double>::infinity();
    }
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Splits. TRAIN = B1 + B3 of everyone + B2 of the control group, minus a
// deterministic 10% carved out as VALID; TEST = B2 of the dysarthric groups;
// CTEST = TEST restricted to common words.
// ---------------------------------------------------------------------------

struct SplitResult {
  std::vector<int> train;
  std::vector<int> valid;
  std::vector<int> test;
  std::vector<int> ctest;
};

inline constexpr uint64_t kValidSplitSeed = 0x76616c6964ULL;  // dedicated stream
inline constexpr double kValidFraction = 0.10;

inline SplitResult split_corpus(const Corpus& corpus) {
  SplitResult r;
  std::vector<int> train_pool;
  for (int i = 0; i < static_cast<int>(corpus.utterances.size()); ++i) {
    const Utterance& u = corpus.utterances[static_cast<size_t>(i)];
    if (u.block == 2 && u.group != Group::C) {
      r.test.push_back(i);
      const LexiconEntry* e = corpus.lexicon.find(u.word);
      if (e != nullptr && e->common) r.ctest.push_back(i);
    } else {
      train_pool.push_back(i);
    }
  }
  // Deterministic VALID selection from the shuffled pool.
  std::vector<int> order(train_pool);
  Rng rng(kValidSplitSeed);
  std::shuffle(order.begin(), order.end(), rng);
  size_t n_valid = static_cast<size_t>(std::floor(kValidFraction * static_cast<double>(order.size())));
  std::vector<bool> is_valid(corpus.utterances.size(), false);
  for (size_t i = 0; i < n_valid; ++i) is_valid[static_cast<size_t>(order[i])] = true;
  for (int i : train_pool) {
    (is_valid[static_cast<size_t>(i)] ? r.valid : r.train).push_back(i);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Manifest + frame blob serialization.
//
// Manifest (UTF-8 text):
//   line 1 header:  #phoncl-corpus schema_version=1 f_ac=<int> frames=<file>
//                   frames_checksum=<16 hex> lexicon=<file>
//   one record per utterance:
//   utterance_id,speaker_id,group,word,block,phonemes,frame_offset,frame_count,boundaries
//   with phonemes space-joined and boundaries as first:last pairs space-joined.
// Frames: little-endian float32, column-major [F_ac x T] per utterance,
// concatenated in record order; frame_offset counts frames, not floats.
// ---------------------------------------------------------------------------

inline constexpr int kCorpusSchemaVersion = 1;
inline constexpr const char* kFramesFileName = "frames.f32";
inline constexpr const char* kLexiconFileName = "lexicon.tsv";
inline constexpr const char* kManifestFileName = "manifest.txt";

inline void save_manifest(const Corpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  // Frame blob first so the header can carry its checksum.
  std::string blob;
  {
    std::ostringstream os(std::ios::binary);
    for (const auto& u : corpus.utterances) {
      for (int t = 0; t < u.frames.cols; ++t) {
        for (int r = 0; r < u.frames.rows; ++r) {
          write_f32_le(os, static_cast<float>(u.frames(r, t)));
        }
      }
    }
    blob = os.str();
  }
  Fnv1a64 ck;
  ck.update(blob.data(), blob.size());

  {
    std::ofstream os(fs::path(dir) / kFramesFileName, std::ios::binary);
    if (!os) fail(ErrorKind::kIo, "cannot write frames blob in " + dir);
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  {
    std::ofstream os(fs::path(dir) / kLexiconFileName);
    if (!os) fail(ErrorKind::kIo, "cannot write lexicon in " + dir);
    write_lexicon(corpus.lexicon, os);
  }

  std::ofstream os(fs::path(dir) / kManifestFileName);
  if (!os) fail(ErrorKind::kIo, "cannot write manifest in " + dir);
  os << "#phoncl-corpus schema_version=" << kCorpusSchemaVersion << " f_ac=" << corpus.feature_dim
     << " frames=" << kFramesFileName << " frames_checksum=" << hex64(ck.digest())
     << " lexicon=" << kLexiconFileName << '\n';
  int64_t offset = 0;
  for (const auto& u : corpus.utterances) {
    std::vector<std::string> bounds;
    bounds.reserve(u.boundaries.size());
    for (auto [a, b] : u.boundaries) {
      bounds.push_back(std::to_string(a) + ":" + std::to_string(b));
    }
    os << u.utterance_id << ',' << u.speaker_id << ',' << to_string(u.group) << ',' << u.word
       << ',' << "B" << u.block << ',' << join(u.phonemes, " ") << ',' << offset << ','
       << u.frames.cols << ',' << join(bounds, " ") << '\n';
    offset += u.frames.cols;
  }
}

namespace detail {

inline std::map<std::string, std::string> parse_header_kv(const std::string& line) {
  std::map<std::string, std::string> kv;
  for (const auto& tok : split(line, ' ')) {
    size_t eq = tok.find('=');
    if (eq == std::string::npos) continue;
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

}  // namespace detail

inline Corpus load_manifest(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream is(fs::path(dir) / kManifestFileName);
  if (!is) fail(ErrorKind::kIo, "cannot open manifest in " + dir);

  std::string header;
  if (!std::getline(is, header) || header.rfind("#phoncl-corpus", 0) != 0) {
    fail(ErrorKind::kManifestMalformed, "missing corpus header line");
  }
  auto kv = detail::parse_header_kv(header);
  if (kv["schema_version"] != std::to_string(kCorpusSchemaVersion)) {
    fail(ErrorKind::kManifestVersion,
         "unsupported schema_version '" + kv["schema_version"] + "'");
  }
  if (kv.find("f_ac") == kv.end() || kv.find("frames_checksum") == kv.end()) {
    fail(ErrorKind::kManifestMalformed, "header missing f_ac or frames_checksum");
  }

  Corpus corpus;
  corpus.feature_dim = std::stoi(kv["f_ac"]);
  if (corpus.feature_dim < 1) fail(ErrorKind::kManifestMalformed, "bad f_ac");

  std::string blob;
  {
    std::ifstream bs(fs::path(dir) / kv["frames"], std::ios::binary);
    if (!bs) fail(ErrorKind::kIo, "cannot open frames blob in " + dir);
    std::ostringstream ss(std::ios::binary);
    ss << bs.rdbuf();
    blob = ss.str();
  }
  Fnv1a64 ck;
  ck.update(blob.data(), blob.size());
  if (hex64(ck.digest()) != kv["frames_checksum"]) {
    fail(ErrorKind::kManifestChecksum, "frames blob checksum mismatch");
  }
  if (blob.size() % 4 != 0) fail(ErrorKind::kManifestChecksum, "frames blob truncated");
  int64_t total_floats = static_cast<int64_t>(blob.size() / 4);

  {
    std::ifstream ls(fs::path(dir) / kv["lexicon"]);
    if (!ls) fail(ErrorKind::kIo, "cannot open lexicon in " + dir);
    corpus.lexicon = parse_lexicon(ls);
  }

  auto read_f32_at = [&blob](int64_t idx) {
    uint32_t u = static_cast<uint8_t>(blob[static_cast<size_t>(idx * 4)]) |
                 (static_cast<uint32_t>(static_cast<uint8_t>(blob[static_cast<size_t>(idx * 4 + 1)])) << 8) |
                 (static_cast<uint32_t>(static_cast<uint8_t>(blob[static_cast<size_t>(idx * 4 + 2)])) << 16) |
                 (static_cast<uint32_t>(static_cast<uint8_t>(blob[static_cast<size_t>(idx * 4 + 3)])) << 24);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  };

  std::string line;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    std::string t = trim(line);
    if (t.empty()) continue;
    auto cells = split(t, ',');
    if (cells.size() != 9) {
      fail(ErrorKind::kManifestMalformed, "manifest row " + std::to_string(row) + ": want 9 fields");
    }
    Utterance u;
    u.utterance_id = cells[0];
    u.speaker_id = cells[1];
    u.group = parse_group(cells[2]);
    u.word = cells[3];
    if (cells[4].size() != 2 || cells[4][0] != 'B' || cells[4][1] < '1' || cells[4][1] > '3') {
      fail(ErrorKind::kManifestMalformed, "manifest row " + std::to_string(row) + ": bad block");
    }
    u.block = cells[4][1] - '0';
    for (auto& p : split(cells[5], ' ')) {
      if (!p.empty()) u.phonemes.push_back(p);
    }
    int64_t offset = 0, count = 0;
    try {
      offset = std::stoll(cells[6]);
      count = std::stoll(cells[7]);
    } catch (const std::exception&) {
      fail(ErrorKind::kManifestMalformed, "manifest row " + std::to_string(row) + ": bad offsets");
    }
    if (offset < 0 || count < 1 ||
        (offset + count) * corpus.feature_dim > total_floats) {
      fail(ErrorKind::kManifestMalformed, "manifest row " + std::to_string(row) + ": frame range outside blob");
    }
    u.frames = Matrix(corpus.feature_dim, static_cast<int>(count));
    for (int tcol = 0; tcol < u.frames.cols; ++tcol) {
      for (int r = 0; r < corpus.feature_dim; ++r) {
        u.frames(r, tcol) =
            static_cast<double>(read_f32_at((offset + tcol) * corpus.feature_dim + r));
      }
    }
    for (auto& pair : split(cells[8], ' ')) {
      if (pair.empty()) continue;
      auto ab = split(pair, ':');
      if (ab.size() != 2) {
        fail(ErrorKind::kManifestMalformed, "manifest row " + std::to_string(row) + ": bad boundary");
      }
      u.boundaries.emplace_back(std::stoi(ab[0]), std::stoi(ab[1]));
    }
    if (u.boundaries.size() != u.phonemes.size()) {
      fail(ErrorKind::kManifestMalformed,
           "manifest row " + std::to_string(row) + ": boundary/phoneme count mismatch");
    }
    corpus.utterances.push_back(std::move(u));
  }
  return corpus;
}

}  // namespace phoncl
