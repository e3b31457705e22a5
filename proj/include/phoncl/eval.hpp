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

#include <set>

#include "phoncl/ctc.hpp"
#include "phoncl/synthcorpus.hpp"

namespace phoncl {

// ---------------------------------------------------------------------------
// Edit distance and error rates.
// ---------------------------------------------------------------------------

inline int edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// (substitutions + insertions + deletions) / |ref|; may exceed 1.
inline double per(const std::vector<int>& ref, const std::vector<int>& hyp) {
  if (ref.empty()) fail(ErrorKind::kDomain, "per: empty reference");
  return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

// ---------------------------------------------------------------------------
// Isolated-word decoding: nearest lexicon entry by phoneme edit distance,
// ties resolved by lexicon order.
// ---------------------------------------------------------------------------

inline std::vector<int> phonemes_to_labels(const std::vector<std::string>& phonemes,
                                           const PhonemeFeatureTable& table) {
  std::vector<int> labels;
  labels.reserve(phonemes.size());
  for (const auto& p : phonemes) labels.push_back(table.index_of(p) + 1);
  return labels;
}

inline const LexiconEntry& word_decode(const std::vector<int>& decoded_labels,
                                       const Lexicon& lexicon,
                                       const PhonemeFeatureTable& table) {
  if (lexicon.entries.empty()) fail(ErrorKind::kValidation, "word_decode: empty lexicon");
  int best = std::numeric_limits<int>::max();
  const LexiconEntry* pick = nullptr;
  for (const auto& e : lexicon.entries) {
    int d = edit_distance(phonemes_to_labels(e.phonemes, table), decoded_labels);
    if (d < best) {
      best = d;
      pick = &e;
    }
  }
  return *pick;
}

// ---------------------------------------------------------------------------
// Group reports. ALL is the speaker-count-weighted mean across groups, ALL*
// the plain mean. Missing groups are simply absent.
// ---------------------------------------------------------------------------

struct UtteranceScore {
  Group group = Group::C;
  std::string speaker_id;
  bool word_correct = false;
  int phoneme_edits = 0;
  int ref_len = 0;
};

struct GroupRow {
  int n_utterances = 0;
  int n_speakers = 0;
  double wer = 0.0;
  double per = 0.0;
};

struct GroupReport {
  std::map<Group, GroupRow> rows;
  double all_wer = 0.0;        // speaker-count weighted over present groups
  double all_wer_unweighted = 0.0;
  double all_per = 0.0;
  double all_per_unweighted = 0.0;
};

inline GroupReport make_group_report(const std::vector<UtteranceScore>& scores) {
  struct Acc {
    int utts = 0, wrong = 0, edits = 0, ref = 0;
    std::set<std::string> speakers;
  };
  std::map<Group, Acc> acc;
  for (const auto& s : scores) {
    Acc& a = acc[s.group];
    ++a.utts;
    if (!s.word_correct) ++a.wrong;
    a.edits += s.phoneme_edits;
    a.ref += s.ref_len;
    a.speakers.insert(s.speaker_id);
  }
  GroupReport rep;
  double wer_w = 0.0, wer_u = 0.0, per_w = 0.0, per_u = 0.0;
  int weight_total = 0;
  for (const auto& [g, a] : acc) {
    GroupRow row;
    row.n_utterances = a.utts;
    row.n_speakers = static_cast<int>(a.speakers.size());
    row.wer = a.utts > 0 ? static_cast<double>(a.wrong) / a.utts : 0.0;
    row.per = a.ref > 0 ? static_cast<double>(a.edits) / a.ref : 0.0;
    rep.rows[g] = row;
    wer_w += row.wer * row.n_speakers;
    per_w += row.per * row.n_speakers;
    wer_u += row.wer;
    per_u += row.per;
    weight_total += row.n_speakers;
  }
  if (!acc.empty()) {
    rep.all_wer = wer_w / weight_total;
    rep.all_per = per_w / weight_total;
    rep.all_wer_unweighted = wer_u / static_cast<double>(acc.size());
    rep.all_per_unweighted = per_u / static_cast<double>(acc.size());
  }
  return rep;
}

inline void write_group_report_csv(const GroupReport& rep, std::ostream& os) {
  os << "group,n_utts,wer,per\n";
  char buf[64];
  for (const auto& [g, row] : rep.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f", to_string(g).c_str(), row.n_utterances,
                  row.wer, row.per);
    os << buf << '\n';
  }
  std::snprintf(buf, sizeof(buf), "ALL,,%.6f,%.6f", rep.all_wer, rep.all_per);
  os << buf << '\n';
  std::snprintf(buf, sizeof(buf), "ALL*,,%.6f,%.6f", rep.all_wer_unweighted, rep.all_per_unweighted);
  os << buf << '\n';
}

inline std::string format_group_report(const GroupReport& rep) {
  std::string out = "group   n_utts   wer      per\n";
  char buf[128];
  for (const auto& [g, row] : rep.rows) {
    std::snprintf(buf, sizeof(buf), "%-7s %-8d %-8.4f %-8.4f\n", to_string(g).c_str(),
                  row.n_utterances, row.wer, row.per);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-7s %-8s %-8.4f %-8.4f\n", "ALL", "", rep.all_wer, rep.all_per);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-7s %-8s %-8.4f %-8.4f\n", "ALL*", "", rep.all_wer_unweighted,
                rep.all_per_unweighted);
  out += buf;
  return out;
}

// ---------------------------------------------------------------------------
// Alignment accuracy against ground-truth segment boundaries.
// ---------------------------------------------------------------------------

struct AlignmentAccuracy {
  double mean_iou = 0.0;
  double frame_accuracy = 0.0;  // fraction of frames on the correct phoneme
};

inline AlignmentAccuracy alignment_accuracy(const std::vector<PhonemeSpan>& spans,
                                            const std::vector<std::pair<int, int>>& truth,
                                            int total_frames) {
  if (spans.size() != truth.size()) {
    fail(ErrorKind::kValidation, "alignment_accuracy: span/boundary count mismatch");
  }
  if (spans.empty()) fail(ErrorKind::kValidation, "alignment_accuracy: empty spans");
  AlignmentAccuracy out;
  int correct = 0;
  for (size_t i = 0; i < spans.size(); ++i) {
    int a0 = spans[i].first_frame, a1 = spans[i].last_frame;
    int b0 = truth[i].first, b1 = truth[i].second;
    int inter = std::max(0, std::min(a1, b1) - std::max(a0, b0) + 1);
    int uni = (a1 - a0 + 1) + (b1 - b0 + 1) - inter;
    out.mean_iou += static_cast<double>(inter) / static_cast<double>(uni);
    correct += inter;
  }
  out.mean_iou /= static_cast<double>(spans.size());
  out.frame_accuracy = static_cast<double>(correct) / static_cast<double>(total_frames);
  return out;
}

// ---------------------------------------------------------------------------
// Embedding separation: Fisher-style ratio of mean inter-class squared
// centroid distance to mean intra-class variance, plus the mean silhouette
// coefficient, both over squared Euclidean distances.
// ---------------------------------------------------------------------------

inline constexpr double kFisherCap = 1e9;

struct SeparationStats {
  double fisher_ratio = 0.0;
  double silhouette = 0.0;
};

inline SeparationStats embedding_separation(const std::vector<std::vector<double>>& embeddings,
                                            const std::vector<int>& class_ids) {
  if (embeddings.size() != class_ids.size() || embeddings.empty()) {
    fail(ErrorKind::kValidation, "embedding_separation: size mismatch");
  }
  std::map<int, std::vector<int>> by_class;
  for (size_t i = 0; i < class_ids.size(); ++i) {
    by_class[class_ids[i]].push_back(static_cast<int>(i));
  }
  if (by_class.size() < 2) {
    fail(ErrorKind::kDomain, "embedding_separation: need >= 2 classes");
  }
  for (const auto& [c, members] : by_class) {
    if (members.size() < 2) {
      fail(ErrorKind::kDomain,
           "embedding_separation: class " + std::to_string(c) + " has < 2 samples");
    }
  }
  size_t dim = embeddings[0].size();
  for (const auto& e : embeddings) {
    if (e.size() != dim) fail(ErrorKind::kValidation, "embedding_separation: ragged embeddings");
  }

  // Centroids and intra-class variance.
  std::map<int, std::vector<double>> centroid;
  double intra = 0.0;
  for (const auto& [c, members] : by_class) {
    std::vector<double> mu(dim, 0.0);
    for (int i : members) {
      for (size_t k = 0; k < dim; ++k) mu[k] += embeddings[static_cast<size_t>(i)][k];
    }
    for (auto& v : mu) v /= static_cast<double>(members.size());
    double var = 0.0;
    for (int i : members) var += squared_distance(embeddings[static_cast<size_t>(i)], mu);
    intra += var / static_cast<double>(members.size());
    centroid[c] = std::move(mu);
  }
  intra /= static_cast<double>(by_class.size());

  double inter = 0.0;
  int pairs = 0;
  for (auto it = centroid.begin(); it != centroid.end(); ++it) {
    for (auto jt = std::next(it); jt != centroid.end(); ++jt) {
      inter += squared_distance(it->second, jt->second);
      ++pairs;
    }
  }
  inter /= static_cast<double>(pairs);

  SeparationStats stats;
  stats.fisher_ratio = intra > inter / kFisherCap ? inter / intra : kFisherCap;

  // Mean silhouette over squared distances.
  double sil = 0.0;
  for (size_t i = 0; i < embeddings.size(); ++i) {
    int own = class_ids[i];
    double a = 0.0;
    int an = 0;
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [c, members] : by_class) {
      double sum = 0.0;
      int n = 0;
      for (int j : members) {
        if (static_cast<size_t>(j) == i) continue;
        sum += squared_distance(embeddings[i], embeddings[static_cast<size_t>(j)]);
        ++n;
      }
      if (c == own) {
        a = n > 0 ? sum / n : 0.0;
        an = n;
      } else if (n > 0) {
        b = std::min(b, sum / n);
      }
    }
    (void)an;
    double denom = std::max(a, b);
    sil += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  stats.silhouette = sil / static_cast<double>(embeddings.size());
  return stats;
}

}  // namespace phoncl
