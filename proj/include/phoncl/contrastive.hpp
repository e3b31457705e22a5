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

#include "phoncl/dynalign.hpp"

namespace phoncl {

// ---------------------------------------------------------------------------
// Triplet hinge on squared Euclidean distances plus the multitask total.
// ---------------------------------------------------------------------------

// The margin lives on the squared-distance scale of the raw embeddings. At
// the default model size, trained same-phoneme pairs sit near 25 and
// different-phoneme pairs near 250, so 150 keeps the hinge engaged on the
// confusable tail (roughly a fifth of sampled triplets). Unit normalization
// is available as an alternative; with it a margin around 1 is appropriate.
struct LossConfig {
  double margin = 150.0;
  double lambda = 0.5;
  bool normalize_embeddings = false;

  void validate() const {
    if (margin < 0.0 || lambda < 0.0) {
      fail(ErrorKind::kValidation, "margin and lambda must be non-negative");
    }
  }
};

inline std::vector<double> unit_normalized(const std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(std::max(n, 1e-24));
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

struct LossReport {
  double l_ctc_anchor = 0.0;
  double l_ctc_positive = 0.0;
  double l_ctc_negative = 0.0;
  double l_triplet = 0.0;
  double l_total = 0.0;
};

struct TripletLossResult {
  double loss = 0.0;
  bool active = false;  // hinge engaged
  std::vector<double> grad_anchor;
  std::vector<double> grad_positive;
  std::vector<double> grad_negative;
};

// max(0, |fa - fp|^2 - |fa - fn|^2 + m) with the exact subgradient; the zero
// subgradient is chosen when the hinge argument is exactly 0.
inline TripletLossResult triplet_loss(const std::vector<double>& fa,
                                      const std::vector<double>& fp,
                                      const std::vector<double>& fn, double margin) {
  if (fa.size() != fp.size() || fa.size() != fn.size() || fa.empty()) {
    fail(ErrorKind::kValidation, "triplet embeddings must share a non-zero length");
  }
  if (margin < 0.0) fail(ErrorKind::kValidation, "margin must be non-negative");

  TripletLossResult r;
  size_t n = fa.size();
  r.grad_anchor.assign(n, 0.0);
  r.grad_positive.assign(n, 0.0);
  r.grad_negative.assign(n, 0.0);

  double hinge = squared_distance(fa, fp) - squared_distance(fa, fn) + margin;
  if (hinge <= 0.0) return r;

  r.loss = hinge;
  r.active = true;
  for (size_t i = 0; i < n; ++i) {
    // d/d fa = 2(fn - fp); d/d fp = 2(fp - fa); d/d fn = 2(fa - fn)
    r.grad_anchor[i] = 2.0 * (fn[i] - fp[i]);
    r.grad_positive[i] = 2.0 * (fp[i] - fa[i]);
    r.grad_negative[i] = 2.0 * (fa[i] - fn[i]);
  }
  return r;
}

// Batch bookkeeping for the multitask objective: mean CTC over the three
// roles, each itself a batch mean, plus lambda times the mean triplet term.
inline LossReport total_loss(const std::vector<double>& ctc_anchor,
                             const std::vector<double>& ctc_positive,
                             const std::vector<double>& ctc_negative,
                             const std::vector<double>& triplet_terms,
                             const LossConfig& cfg) {
  cfg.validate();
  size_t n = ctc_anchor.size();
  if (ctc_positive.size() != n || ctc_negative.size() != n || triplet_terms.size() != n || n == 0) {
    fail(ErrorKind::kValidation, "total_loss: batch size mismatch");
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  LossReport rep;
  rep.l_ctc_anchor = mean(ctc_anchor);
  rep.l_ctc_positive = mean(ctc_positive);
  rep.l_ctc_negative = mean(ctc_negative);
  rep.l_triplet = mean(triplet_terms);
  rep.l_total = (rep.l_ctc_anchor + rep.l_ctc_positive + rep.l_ctc_negative) / 3.0 +
                cfg.lambda * rep.l_triplet;
  return rep;
}

// Whole-utterance baseline: unweighted mean over all frames, tagged with
// phoneme = 0 to mark word granularity.
inline PhonemeEmbedding word_level_embedding(const EmbeddingSequence& emb) {
  emb.validate();
  PhonemeEmbedding out;
  out.phoneme = 0;
  out.first_frame = 0;
  out.last_frame = emb.frames() - 1;
  out.vector.assign(static_cast<size_t>(emb.dim()), 0.0);
  double w = 1.0 / static_cast<double>(emb.frames());
  for (int t = 0; t < emb.frames(); ++t) {
    for (int e = 0; e < emb.dim(); ++e) {
      out.vector[static_cast<size_t>(e)] += w * emb.values(e, t);
    }
  }
  return out;
}

}  // namespace phoncl
