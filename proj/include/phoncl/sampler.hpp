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

#include "phoncl/synthcorpus.hpp"

namespace phoncl {

// ---------------------------------------------------------------------------
// Triplet universe construction.
//
// Anchors come from the control group. A positive is the same phoneme at the
// same position of the same word, spoken by a dysarthric speaker; a negative
// is a different phoneme from a different word, also dysarthric. On a
// control-only corpus (healthy_only) positives and negatives come from other
// control speakers instead. Candidate sets are streamed with reservoir
// selection; nothing quadratic is ever materialized.
// ---------------------------------------------------------------------------

struct PhonemeOccurrence {
  int utterance_index = -1;
  std::string utterance_id;
  std::string speaker_id;
  Group group = Group::C;
  std::string word;
  std::string phoneme;
  int position = 0;

  bool operator==(const PhonemeOccurrence&) const = default;
};

struct TripletSpec {
  PhonemeOccurrence anchor;
  PhonemeOccurrence positive;
  PhonemeOccurrence negative;
  double distance = 0.0;
  int bin = 0;
};

struct SamplingCaps {
  int max_positives_per_anchor = 5;
  int max_negatives_per_pair = 5;
  int epoch_size = 2000;

  void validate() const {
    if (max_positives_per_anchor < 1 || max_negatives_per_pair < 1 || epoch_size < 1) {
      fail(ErrorKind::kValidation, "sampling caps must be positive");
    }
  }
};

struct SamplerOptions {
  SamplingCaps caps;
  DifficultyScheme scheme = make_scheme("3LV");
  bool healthy_only = false;
};

struct SkipLog {
  int total_anchors = 0;
  int anchors_without_positive = 0;
  int total_pairs = 0;
  int pairs_without_negative = 0;
  // pair_bin_gaps[b] counts (anchor, positive) pairs with no candidate
  // negative in difficulty bin b.
  std::vector<int> pair_bin_gaps;
};

struct TripletBuild {
  std::vector<TripletSpec> triplets;
  SkipLog skip;
};

inline std::vector<PhonemeOccurrence> enumerate_occurrences(const Corpus& corpus,
                                                            const std::vector<int>& utt_indices) {
  std::vector<PhonemeOccurrence> occs;
  for (int idx : utt_indices) {
    const Utterance& u = corpus.utterances[static_cast<size_t>(idx)];
    for (size_t p = 0; p < u.phonemes.size(); ++p) {
      PhonemeOccurrence o;
      o.utterance_index = idx;
      o.utterance_id = u.utterance_id;
      o.speaker_id = u.speaker_id;
      o.group = u.group;
      o.word = u.word;
      o.phoneme = u.phonemes[p];
      o.position = static_cast<int>(p);
      occs.push_back(std::move(o));
    }
  }
  return occs;
}

namespace detail {

// k distinct positions out of n, deterministic partial Fisher-Yates.
inline std::vector<int> sample_without_replacement(int n, int k, Rng& rng) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  k = std::min(k, n);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(pick(rng))]);
  }
  idx.resize(static_cast<size_t>(k));
  return idx;
}

}  // namespace detail

inline TripletBuild build_triplets(const Corpus& corpus, const std::vector<int>& utt_indices,
                                   const PhonemeFeatureTable& table, const SamplerOptions& opts,
                                   uint64_t seed) {
  opts.caps.validate();
  opts.scheme.validate();

  auto occs = enumerate_occurrences(corpus, utt_indices);
  bool has_control = false, has_dysarthric = false;
  for (const auto& o : occs) {
    (o.group == Group::C ? has_control : has_dysarthric) = true;
  }
  if (!has_control) {
    fail(ErrorKind::kValidation, "triplet construction needs control-group utterances");
  }
  if (!opts.healthy_only && !has_dysarthric) {
    fail(ErrorKind::kValidation,
         "triplet construction needs dysarthric utterances (or healthy_only)");
  }

  auto pool_ok = [&](const PhonemeOccurrence& o) {
    return opts.healthy_only ? o.group == Group::C : o.group != Group::C;
  };

  // Pairwise distances once; the candidate stream only does array lookups.
  const PhonemeDistanceMatrix dm = build_distance_matrix(table);
  std::vector<int> occ_pidx(occs.size());
  for (size_t i = 0; i < occs.size(); ++i) occ_pidx[i] = table.index_of(occs[i].phoneme);

  // Positives keyed by (word, phoneme, position).
  std::map<std::string, std::vector<int>> positive_pool;
  for (size_t i = 0; i < occs.size(); ++i) {
    if (!pool_ok(occs[i])) continue;
    const auto& o = occs[i];
    positive_pool[o.word + "\t" + o.phoneme + "\t" + std::to_string(o.position)].push_back(
        static_cast<int>(i));
  }

  TripletBuild out;
  out.skip.pair_bin_gaps.assign(static_cast<size_t>(opts.scheme.bin_count()), 0);

  for (size_t ai = 0; ai < occs.size(); ++ai) {
    const PhonemeOccurrence& anchor = occs[ai];
    if (anchor.group != Group::C) continue;
    ++out.skip.total_anchors;

    Rng rng(derive_seed(seed, "anchor:" + anchor.utterance_id + ":" +
                                  std::to_string(anchor.position)));

    auto it = positive_pool.find(anchor.word + "\t" + anchor.phoneme + "\t" +
                                 std::to_string(anchor.position));
    std::vector<int> positives;
    if (it != positive_pool.end()) {
      for (int pi : it->second) {
        if (occs[static_cast<size_t>(pi)].speaker_id != anchor.speaker_id) positives.push_back(pi);
      }
    }
    if (positives.empty()) {
      ++out.skip.anchors_without_positive;
      continue;
    }
    std::vector<int> chosen_pos;
    for (int j : detail::sample_without_replacement(static_cast<int>(positives.size()),
                                                    opts.caps.max_positives_per_anchor, rng)) {
      chosen_pos.push_back(positives[static_cast<size_t>(j)]);
    }

    for (int pi : chosen_pos) {
      ++out.skip.total_pairs;
      // Reservoir over the streamed negative candidates.
      std::vector<int> reservoir;
      int n_seen = 0;
      std::vector<bool> bin_seen(static_cast<size_t>(opts.scheme.bin_count()), false);
      int anchor_pidx = occ_pidx[ai];
      for (size_t ni = 0; ni < occs.size(); ++ni) {
        const PhonemeOccurrence& neg = occs[ni];
        if (!pool_ok(neg)) continue;
        if (neg.word == anchor.word || neg.phoneme == anchor.phoneme) continue;
        double d = dm.d(anchor_pidx, occ_pidx[ni]);
        bin_seen[static_cast<size_t>(difficulty_bin(d, opts.scheme))] = true;
        ++n_seen;
        if (static_cast<int>(reservoir.size()) < opts.caps.max_negatives_per_pair) {
          reservoir.push_back(static_cast<int>(ni));
        } else {
          std::uniform_int_distribution<int> pick(0, n_seen - 1);
          int slot = pick(rng);
          if (slot < opts.caps.max_negatives_per_pair) {
            reservoir[static_cast<size_t>(slot)] = static_cast<int>(ni);
          }
        }
      }
      if (reservoir.empty()) {
        ++out.skip.pairs_without_negative;
        continue;
      }
      for (int b = 0; b < opts.scheme.bin_count(); ++b) {
        if (!bin_seen[static_cast<size_t>(b)]) ++out.skip.pair_bin_gaps[static_cast<size_t>(b)];
      }
      for (int ni : reservoir) {
        TripletSpec spec;
        spec.anchor = anchor;
        spec.positive = occs[static_cast<size_t>(pi)];
        spec.negative = occs[static_cast<size_t>(ni)];
        spec.distance = dm.d(anchor_pidx, occ_pidx[static_cast<size_t>(ni)]);
        spec.bin = difficulty_bin(spec.distance, opts.scheme);
        out.triplets.push_back(std::move(spec));
      }
    }
  }
  return out;
}

// Uniform sample of n triplets: without replacement when n <= pool size,
// with replacement (flagged) otherwise.
inline std::vector<TripletSpec> epoch_sample(const std::vector<TripletSpec>& triplets, int n,
                                             uint64_t seed, bool* with_replacement = nullptr) {
  if (n < 1) fail(ErrorKind::kDomain, "epoch_sample: n must be >= 1");
  if (triplets.empty()) fail(ErrorKind::kDomain, "epoch_sample: empty triplet list");
  Rng rng(seed);
  std::vector<TripletSpec> out;
  out.reserve(static_cast<size_t>(n));
  if (n <= static_cast<int>(triplets.size())) {
    if (with_replacement) *with_replacement = false;
    for (int j : detail::sample_without_replacement(static_cast<int>(triplets.size()), n, rng)) {
      out.push_back(triplets[static_cast<size_t>(j)]);
    }
  } else {
    if (with_replacement) *with_replacement = true;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(triplets.size()) - 1);
    for (int i = 0; i < n; ++i) out.push_back(triplets[static_cast<size_t>(pick(rng))]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: one record per line,
//   anchor_uttid:pos, positive_uttid:pos, negative_uttid:pos, distance, bin
// ---------------------------------------------------------------------------

inline void write_triplets(const std::vector<TripletSpec>& triplets, std::ostream& os) {
  char buf[64];
  for (const auto& t : triplets) {
    std::snprintf(buf, sizeof(buf), "%.6f, %d", t.distance, t.bin);
    os << t.anchor.utterance_id << ':' << t.anchor.position << ", "
       << t.positive.utterance_id << ':' << t.positive.position << ", "
       << t.negative.utterance_id << ':' << t.negative.position << ", " << buf << '\n';
  }
}

inline std::vector<TripletSpec> read_triplets(std::istream& is, const Corpus& corpus,
                                              const PhonemeFeatureTable& table,
                                              const DifficultyScheme& scheme) {
  std::map<std::string, int> by_id;
  for (int i = 0; i < static_cast<int>(corpus.utterances.size()); ++i) {
    by_id[corpus.utterances[static_cast<size_t>(i)].utterance_id] = i;
  }
  auto parse_ref = [&](const std::string& token, int row) {
    auto parts = split(trim(token), ':');
    if (parts.size() != 2) {
      fail(ErrorKind::kValidation, "triplet row " + std::to_string(row) + ": bad reference");
    }
    auto it = by_id.find(parts[0]);
    if (it == by_id.end()) {
      fail(ErrorKind::kValidation,
           "triplet row " + std::to_string(row) + ": unknown utterance '" + parts[0] + "'");
    }
    const Utterance& u = corpus.utterances[static_cast<size_t>(it->second)];
    int pos = std::stoi(parts[1]);
    if (pos < 0 || pos >= static_cast<int>(u.phonemes.size())) {
      fail(ErrorKind::kValidation, "triplet row " + std::to_string(row) + ": bad position");
    }
    PhonemeOccurrence o;
    o.utterance_index = it->second;
    o.utterance_id = u.utterance_id;
    o.speaker_id = u.speaker_id;
    o.group = u.group;
    o.word = u.word;
    o.phoneme = u.phonemes[static_cast<size_t>(pos)];
    o.position = pos;
    return o;
  };

  std::vector<TripletSpec> out;
  std::string line;
  int row = 0;
  while (std::getline(is, line)) {
    ++row;
    std::string t = trim(line);
    if (t.empty()) continue;
    auto cells = split(t, ',');
    if (cells.size() != 5) {
      fail(ErrorKind::kValidation, "triplet row " + std::to_string(row) + ": want 5 fields");
    }
    TripletSpec spec;
    spec.anchor = parse_ref(cells[0], row);
    spec.positive = parse_ref(cells[1], row);
    spec.negative = parse_ref(cells[2], row);
    spec.distance = feature_distance(table, spec.anchor.phoneme, spec.negative.phoneme);
    spec.bin = difficulty_bin(spec.distance, scheme);
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace phoncl
