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

#include "phoncl/common.hpp"

namespace phoncl {

// ---------------------------------------------------------------------------
// CTC over a blank-extended label sequence.
//
// Vocabulary layout is fixed across the project: index 0 is the blank, label
// indices run 1..V. Logits are [V+1 x T]. The extended sequence for labels
// l_1..l_L is [blank, l_1, blank, l_2, ..., l_L, blank] with S = 2L+1 states;
// valid paths move through it monotonically (stay, advance by one, or skip a
// blank between two distinct labels) and must end in state S-1 or S-2.
//
// All dynamic programming runs in log space; kLogZero is the log(0) sentinel.
// ---------------------------------------------------------------------------

inline constexpr int kBlank = 0;

struct LogitSequence {
  Matrix values;  // [V+1 x T]

  int frames() const { return values.cols; }
  int vocab() const { return values.rows - 1; }

  void validate() const {
    if (values.rows < 2 || values.cols < 1) {
      fail(ErrorKind::kValidation, "logits need V >= 1 and T >= 1");
    }
    if (!values.all_finite()) {
      fail(ErrorKind::kValidation, "logits contain non-finite entries");
    }
  }
};

struct LabelSequence {
  std::vector<int> labels;  // values in [1, V]

  int size() const { return static_cast<int>(labels.size()); }

  void validate(int vocab) const {
    if (labels.empty()) fail(ErrorKind::kValidation, "empty label sequence");
    for (int l : labels) {
      if (l < 1 || l > vocab) {
        fail(ErrorKind::kValidation,
             "label index " + std::to_string(l) + " outside [1, " +
                 std::to_string(vocab) + "]");
      }
    }
  }
};

struct PhonemeSpan {
  int label = 0;        // label index in [1, V]
  int first_frame = 0;  // inclusive
  int last_frame = 0;   // inclusive
  std::vector<double> frame_scores;
};

struct AlignmentResult {
  std::vector<int> frame_labels;   // extended-state index per frame
  std::vector<double> scores;      // softmax prob of the chosen symbol per frame
  std::vector<PhonemeSpan> spans;  // one per label position, in order
};

struct CtcResult {
  double loss = 0.0;
  Matrix grad;  // [V+1 x T], d loss / d raw logits
};

namespace detail {

// Minimum frame count: every label needs a frame, plus a separating blank
// between equal adjacent labels.
inline int min_frames_for(const std::vector<int>& labels) {
  int need = static_cast<int>(labels.size());
  for (size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++need;
  }
  return need;
}

inline void check_feasible(const LogitSequence& logits, const LabelSequence& labels) {
  logits.validate();
  labels.validate(logits.vocab());
  int need = min_frames_for(labels.labels);
  if (logits.frames() < need) {
    fail(ErrorKind::kInfeasibleAlignment,
         "label sequence needs at least " + std::to_string(need) + " frames, got " +
             std::to_string(logits.frames()));
  }
}

inline std::vector<int> extended_sequence(const std::vector<int>& labels) {
  std::vector<int> ext(2 * labels.size() + 1, kBlank);
  for (size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];
  return ext;
}

// Column-wise log-softmax of raw logits.
inline Matrix log_softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows, logits.cols);
  for (int t = 0; t < logits.cols; ++t) {
    double hi = logits(0, t);
    for (int k = 1; k < logits.rows; ++k) hi = std::max(hi, logits(k, t));
    double z = 0.0;
    for (int k = 0; k < logits.rows; ++k) z += std::exp(logits(k, t) - hi);
    double logz = hi + std::log(z);
    for (int k = 0; k < logits.rows; ++k) out(k, t) = logits(k, t) - logz;
  }
  return out;
}

// Skip transition s-2 -> s exists for odd s >= 2 with a different label than
// the one two states back.
inline bool skip_into(const std::vector<int>& ext, int s) {
  return s >= 2 && (s % 2 == 1) && ext[static_cast<size_t>(s)] != ext[static_cast<size_t>(s - 2)];
}

}  // namespace detail

// Negative log-likelihood of the label sequence under the softmax-normalized
// logits, summed over all valid alignment paths, with the exact gradient
// w.r.t. the raw logits from forward-backward posteriors.
inline CtcResult ctc_loss(const LogitSequence& logits, const LabelSequence& labels) {
  detail::check_feasible(logits, labels);
  const int T = logits.frames();
  const int K = logits.values.rows;
  const auto ext = detail::extended_sequence(labels.labels);
  const int S = static_cast<int>(ext.size());
  const Matrix lp = detail::log_softmax_columns(logits.values);

  // Forward: alpha(t, s) includes the emission at frame t.
  Matrix alpha(T, S, kLogZero);
  alpha(0, 0) = lp(kBlank, 0);
  if (S > 1) alpha(0, 1) = lp(ext[1], 0);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double acc = alpha(t - 1, s);
      if (s >= 1) acc = log_add(acc, alpha(t - 1, s - 1));
      if (detail::skip_into(ext, s)) acc = log_add(acc, alpha(t - 1, s - 2));
      if (acc <= kLogGuard) continue;
      alpha(t, s) = acc + lp(ext[static_cast<size_t>(s)], t);
    }
  }
  double log_p = log_add(alpha(T - 1, S - 1), S >= 2 ? alpha(T - 1, S - 2) : kLogZero);
  if (log_p <= kLogGuard) {
    fail(ErrorKind::kNumeric, "ctc_loss: zero total path probability");
  }

  // Backward: beta(t, s) excludes the emission at frame t, so
  // alpha(t, s) + beta(t, s) is the log-mass of paths through (t, s).
  Matrix beta(T, S, kLogZero);
  beta(T - 1, S - 1) = 0.0;
  if (S >= 2) beta(T - 1, S - 2) = 0.0;
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double acc = kLogZero;
      if (beta(t + 1, s) > kLogGuard) {
        acc = log_add(acc, lp(ext[static_cast<size_t>(s)], t + 1) + beta(t + 1, s));
      }
      if (s + 1 < S && beta(t + 1, s + 1) > kLogGuard) {
        acc = log_add(acc, lp(ext[static_cast<size_t>(s + 1)], t + 1) + beta(t + 1, s + 1));
      }
      if (s + 2 < S && detail::skip_into(ext, s + 2) && beta(t + 1, s + 2) > kLogGuard) {
        acc = log_add(acc, lp(ext[static_cast<size_t>(s + 2)], t + 1) + beta(t + 1, s + 2));
      }
      beta(t, s) = acc;
    }
  }

  CtcResult result;
  result.loss = -log_p;
  result.grad = Matrix(K, T);
  std::vector<double> log_q(static_cast<size_t>(K));
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) log_q[static_cast<size_t>(k)] = kLogZero;
    for (int s = 0; s < S; ++s) {
      if (alpha(t, s) <= kLogGuard || beta(t, s) <= kLogGuard) continue;
      int k = ext[static_cast<size_t>(s)];
      log_q[static_cast<size_t>(k)] = log_add(log_q[static_cast<size_t>(k)], alpha(t, s) + beta(t, s));
    }
    for (int k = 0; k < K; ++k) {
      double posterior =
          log_q[static_cast<size_t>(k)] <= kLogGuard ? 0.0 : std::exp(log_q[static_cast<size_t>(k)] - log_p);
      result.grad(k, t) = std::exp(lp(k, t)) - posterior;
    }
  }
  return result;
}

// Most probable valid alignment path (Viterbi over the extended sequence).
// Ties are broken by preferring to advance to the next extended state over
// staying, which pushes emissions as early as possible. Equivalently: among
// all maximum-probability paths, the lexicographically largest state
// sequence is returned.
inline AlignmentResult ctc_forced_align(const LogitSequence& logits,
                                        const LabelSequence& labels) {
  detail::check_feasible(logits, labels);
  const int T = logits.frames();
  const auto ext = detail::extended_sequence(labels.labels);
  const int S = static_cast<int>(ext.size());
  const Matrix lp = detail::log_softmax_columns(logits.values);

  // suffix(t, s): max log-prob of completing the path from state s at frame t
  // (emission at t included), kLogZero when no valid completion exists.
  Matrix suffix(T, S, kLogZero);
  suffix(T - 1, S - 1) = lp(ext[static_cast<size_t>(S - 1)], T - 1);
  if (S >= 2) suffix(T - 1, S - 2) = lp(ext[static_cast<size_t>(S - 2)], T - 1);
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double best = suffix(t + 1, s);
      if (s + 1 < S) best = std::max(best, suffix(t + 1, s + 1));
      if (s + 2 < S && detail::skip_into(ext, s + 2)) best = std::max(best, suffix(t + 1, s + 2));
      if (best <= kLogGuard) continue;
      suffix(t, s) = best + lp(ext[static_cast<size_t>(s)], t);
    }
  }

  AlignmentResult result;
  result.frame_labels.resize(static_cast<size_t>(T));
  result.scores.resize(static_cast<size_t>(T));

  // Forward walk; at every decision point ties go to the largest next state.
  int state = 0;
  if (S >= 2 && suffix(0, 1) >= suffix(0, 0)) state = 1;
  if (suffix(0, state) <= kLogGuard) {
    fail(ErrorKind::kNumeric, "ctc_forced_align: no valid path");
  }
  result.frame_labels[0] = state;
  result.scores[0] = std::exp(lp(ext[static_cast<size_t>(state)], 0));
  for (int t = 1; t < T; ++t) {
    int best_state = state;
    double best = suffix(t, state);
    if (state + 1 < S && suffix(t, state + 1) >= best) {
      best = suffix(t, state + 1);
      best_state = state + 1;
    }
    if (state + 2 < S && detail::skip_into(ext, state + 2) && suffix(t, state + 2) >= best) {
      best = suffix(t, state + 2);
      best_state = state + 2;
    }
    state = best_state;
    result.frame_labels[static_cast<size_t>(t)] = state;
    result.scores[static_cast<size_t>(t)] = std::exp(lp(ext[static_cast<size_t>(state)], t));
  }

  result.spans.resize(labels.labels.size());
  for (size_t i = 0; i < labels.labels.size(); ++i) {
    result.spans[i].label = labels.labels[i];
    result.spans[i].first_frame = -1;
  }
  for (int t = 0; t < T; ++t) {
    int s = result.frame_labels[static_cast<size_t>(t)];
    if (s % 2 == 0) continue;  // blank
    auto& span = result.spans[static_cast<size_t>(s / 2)];
    if (span.first_frame < 0) span.first_frame = t;
    span.last_frame = t;
    span.frame_scores.push_back(result.scores[static_cast<size_t>(t)]);
  }
  return result;
}

// Per-frame argmax, collapse consecutive repeats, delete blanks. Exact
// argmax ties resolve to the lowest index (so the blank wins a tie).
inline LabelSequence greedy_decode(const LogitSequence& logits) {
  logits.validate();
  LabelSequence out;
  int prev = -1;
  for (int t = 0; t < logits.frames(); ++t) {
    int arg = 0;
    double best = logits.values(0, t);
    for (int k = 1; k < logits.values.rows; ++k) {
      if (logits.values(k, t) > best) {
        best = logits.values(k, t);
        arg = k;
      }
    }
    if (arg != prev && arg != kBlank) out.labels.push_back(arg);
    prev = arg;
  }
  return out;
}

}  // namespace phoncl
