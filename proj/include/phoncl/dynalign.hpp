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

#include "phoncl/ctc.hpp"
#include "phoncl/common.hpp"

namespace phoncl {

// ---------------------------------------------------------------------------
// Phoneme-level embedding extraction: collapse the frame span owned by each
// label into a single vector, weighted by the per-frame alignment scores.
// ---------------------------------------------------------------------------

struct EmbeddingSequence {
  Matrix values;  // [E x T]

  int dim() const { return values.rows; }
  int frames() const { return values.cols; }

  void validate() const {
    if (values.rows < 1 || values.cols < 1) {
      fail(ErrorKind::kValidation, "embedding sequence needs E >= 1 and T >= 1");
    }
    if (!values.all_finite()) {
      fail(ErrorKind::kValidation, "embedding sequence contains non-finite entries");
    }
  }
};

struct PhonemeEmbedding {
  std::vector<double> vector;
  int phoneme = 0;          // label index; 0 marks a whole-utterance pooling
  int first_frame = 0;
  int last_frame = 0;
};

enum class AlignmentMode { kTimestamp, kFrozenLogit, kDynamic };

inline std::string to_string(AlignmentMode m) {
  switch (m) {
    case AlignmentMode::kTimestamp: return "timestamp";
    case AlignmentMode::kFrozenLogit: return "frozen";
    case AlignmentMode::kDynamic: return "dynamic";
  }
  return "?";
}

inline AlignmentMode parse_alignment_mode(std::string_view s) {
  if (s == "timestamp") return AlignmentMode::kTimestamp;
  if (s == "frozen" || s == "frozen_logit") return AlignmentMode::kFrozenLogit;
  if (s == "dynamic") return AlignmentMode::kDynamic;
  fail(ErrorKind::kValidation, "unknown alignment mode '" + std::string(s) + "'");
}

// Raw scores are floored before normalization so that pathological all-zero
// spans fail loudly instead of dividing by zero.
inline constexpr double kScoreFloor = 1e-12;

// Weighted mean of the span's embedding columns with weights proportional to
// the alignment scores; weights sum to 1 over the span.
inline PhonemeEmbedding extract_phoneme_embedding(const EmbeddingSequence& emb,
                                                  const AlignmentResult& align,
                                                  int label_position) {
  emb.validate();
  if (label_position < 0 || label_position >= static_cast<int>(align.spans.size())) {
    fail(ErrorKind::kValidation,
         "label position " + std::to_string(label_position) + " out of range");
  }
  const PhonemeSpan& span = align.spans[static_cast<size_t>(label_position)];
  if (span.first_frame < 0 || span.frame_scores.empty()) {
    fail(ErrorKind::kDegenerateSpan, "span owns no frames");
  }
  if (span.last_frame >= emb.frames()) {
    fail(ErrorKind::kValidation, "span exceeds embedding frame count");
  }
  double total = 0.0;
  std::vector<double> w(span.frame_scores.size());
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] = std::max(span.frame_scores[i], kScoreFloor);
    total += w[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    fail(ErrorKind::kDegenerateWeights, "alignment scores sum to zero over span");
  }
  PhonemeEmbedding out;
  out.phoneme = span.label;
  out.first_frame = span.first_frame;
  out.last_frame = span.last_frame;
  out.vector.assign(static_cast<size_t>(emb.dim()), 0.0);
  for (size_t i = 0; i < w.size(); ++i) {
    int t = span.first_frame + static_cast<int>(i);
    double weight = w[i] / total;
    for (int e = 0; e < emb.dim(); ++e) {
      out.vector[static_cast<size_t>(e)] += weight * emb.values(e, t);
    }
  }
  return out;
}

// One pooled embedding per label, in label order, from a fresh forced
// alignment of the given logits. Whether those logits come from the live
// model or from a frozen snapshot is the caller's choice of alignment mode.
inline std::vector<PhonemeEmbedding> extract_all(const EmbeddingSequence& emb,
                                                 const LogitSequence& logits,
                                                 const LabelSequence& labels) {
  if (emb.frames() != logits.frames()) {
    fail(ErrorKind::kValidation, "embedding/logit frame count mismatch");
  }
  AlignmentResult align = ctc_forced_align(logits, labels);
  std::vector<PhonemeEmbedding> out;
  out.reserve(labels.labels.size());
  for (size_t i = 0; i < labels.labels.size(); ++i) {
    out.push_back(extract_phoneme_embedding(emb, align, static_cast<int>(i)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Timestamp baseline. Frame t covers the time window
// [t * hop, t * hop + window); a phoneme interval selects every frame whose
// window overlaps it and pools them with an unweighted mean (this mode has
// no per-frame score concept). With window >> hop the selection bleeds into
// neighbouring phonemes, which is the conversion error inherent to the mode.
// ---------------------------------------------------------------------------

struct TimeInterval {
  double start = 0.0;
  double end = 0.0;
};

inline std::vector<int> frames_overlapping(const TimeInterval& iv, double frame_hop,
                                           double frame_window, int total_frames) {
  if (!(frame_hop > 0.0) || !(frame_window >= frame_hop)) {
    fail(ErrorKind::kValidation, "need frame_window >= frame_hop > 0");
  }
  std::vector<int> frames;
  if (!(iv.start < iv.end)) return frames;  // empty interval overlaps nothing
  for (int t = 0; t < total_frames; ++t) {
    double w0 = t * frame_hop;
    double w1 = w0 + frame_window;
    if (w0 < iv.end && w1 > iv.start) frames.push_back(t);
  }
  return frames;
}

inline std::vector<PhonemeEmbedding> timestamp_extract(const EmbeddingSequence& emb,
                                                       const std::vector<TimeInterval>& boundaries,
                                                       double frame_hop,
                                                       double frame_window) {
  emb.validate();
  double prev_end = -1.0;
  for (const auto& iv : boundaries) {
    if (iv.start > iv.end) {
      fail(ErrorKind::kValidation, "interval with start > end");
    }
    if (iv.start < prev_end) {
      fail(ErrorKind::kValidation, "overlapping or unordered intervals");
    }
    prev_end = iv.end;
  }
  std::vector<PhonemeEmbedding> out;
  out.reserve(boundaries.size());
  for (const auto& iv : boundaries) {
    std::vector<int> frames = frames_overlapping(iv, frame_hop, frame_window, emb.frames());
    if (frames.empty()) {
      fail(ErrorKind::kDegenerateSpan,
           "interval [" + std::to_string(iv.start) + ", " + std::to_string(iv.end) +
               ") maps to zero frames");
    }
    PhonemeEmbedding pe;
    pe.first_frame = frames.front();
    pe.last_frame = frames.back();
    pe.vector.assign(static_cast<size_t>(emb.dim()), 0.0);
    double weight = 1.0 / static_cast<double>(frames.size());
    for (int t : frames) {
      for (int e = 0; e < emb.dim(); ++e) {
        pe.vector[static_cast<size_t>(e)] += weight * emb.values(e, t);
      }
    }
    out.push_back(std::move(pe));
  }
  return out;
}

// CSV export shared with the evaluation reports:
// utterance_id, phoneme, group, e_1..e_E.
inline void write_embedding_csv_header(std::ostream& os, int dim) {
  os << "utterance_id,phoneme,group";
  for (int e = 1; e <= dim; ++e) os << ",e_" << e;
  os << '\n';
}

inline void write_embedding_csv_row(std::ostream& os, const std::string& utterance_id,
                                    const std::string& phoneme, Group group,
                                    const std::vector<double>& vec) {
  os << utterance_id << ',' << phoneme << ',' << to_string(group);
  char buf[32];
  for (double v : vec) {
    std::snprintf(buf, sizeof(buf), ",%.9g", v);
    os << buf;
  }
  os << '\n';
}

}  // namespace phoncl
