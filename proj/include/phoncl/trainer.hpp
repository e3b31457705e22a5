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

#include <functional>
#include <memory>
#include <sstream>

#include "phoncl/contrastive.hpp"
#include "phoncl/curriculum.hpp"
#include "phoncl/eval.hpp"

namespace phoncl {

// ---------------------------------------------------------------------------
// Toy frame-synchronous encoder + CTC head.
//
//   h1     = W_in x + b_in                      [H x T]
//   h2     = tanh(W_ctx [h1(t-w)..h1(t+w)] + b_ctx)   zero-padded window
//   emb    = W_emb h2 + b_emb                   [E x T]
//   logits = W_ctc emb + b_ctc                  [V+1 x T]
//
// All gradients are exact reverse-mode, written out by hand so that every
// loss in the project stays finite-difference checkable.
// ---------------------------------------------------------------------------

struct ModelConfig {
  int f_ac = 16;
  int hidden = 32;
  int embed = 16;
  int context = 1;  // window half-width w
  int vocab = 0;    // labels 1..V; logit rows V+1

  int window_cols() const { return hidden * (2 * context + 1); }

  bool operator==(const ModelConfig&) const = default;

  void validate() const {
    if (f_ac < 1 || hidden < 1 || embed < 1 || context < 0 || vocab < 1) {
      fail(ErrorKind::kValidation, "bad model config");
    }
  }
};

struct ModelParams {
  ModelConfig cfg;
  Matrix w_in;               // [H x F_ac]
  std::vector<double> b_in;  // [H]
  Matrix w_ctx;              // [H x H*(2w+1)]
  std::vector<double> b_ctx; // [H]
  Matrix w_emb;              // [E x H]
  std::vector<double> b_emb; // [E]
  Matrix w_ctc;              // [V+1 x E]
  std::vector<double> b_ctc; // [V+1]

  bool operator==(const ModelParams&) const = default;
};

// Declared parameter order; checkpoints and the optimizer both follow it.
template <class Params, class F>
void for_each_array(Params& p, F&& f) {
  f(p.w_in.data);
  f(p.b_in);
  f(p.w_ctx.data);
  f(p.b_ctx);
  f(p.w_emb.data);
  f(p.b_emb);
  f(p.w_ctc.data);
  f(p.b_ctc);
}

inline ModelParams zero_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  p.cfg = cfg;
  p.w_in = Matrix(cfg.hidden, cfg.f_ac);
  p.b_in.assign(static_cast<size_t>(cfg.hidden), 0.0);
  p.w_ctx = Matrix(cfg.hidden, cfg.window_cols());
  p.b_ctx.assign(static_cast<size_t>(cfg.hidden), 0.0);
  p.w_emb = Matrix(cfg.embed, cfg.hidden);
  p.b_emb.assign(static_cast<size_t>(cfg.embed), 0.0);
  p.w_ctc = Matrix(cfg.vocab + 1, cfg.embed);
  p.b_ctc.assign(static_cast<size_t>(cfg.vocab) + 1, 0.0);
  return p;
}

inline ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
  ModelParams p = zero_params(cfg);
  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto fill = [&](Matrix& m) {
    double scale = 1.0 / std::sqrt(static_cast<double>(m.cols));
    for (double& v : m.data) v = scale * unit(rng);
  };
  fill(p.w_in);
  fill(p.w_ctx);
  fill(p.w_emb);
  fill(p.w_ctc);
  return p;
}

inline uint64_t params_hash(const ModelParams& p) {
  Fnv1a64 h;
  for_each_array(const_cast<ModelParams&>(p), [&](const std::vector<double>& a) {
    h.update(a.data(), a.size() * sizeof(double));
  });
  return h.digest();
}

struct ForwardCache {
  Matrix h1;      // [H x T]
  Matrix h2;      // [H x T] (post-tanh)
  Matrix emb;     // [E x T]
  Matrix logits;  // [V+1 x T]
};

inline ForwardCache forward(const ModelParams& p, const Matrix& frames) {
  const ModelConfig& c = p.cfg;
  if (frames.rows != c.f_ac || frames.cols < 1) {
    fail(ErrorKind::kValidation, "forward: frame matrix shape mismatch");
  }
  const int T = frames.cols;
  ForwardCache f;
  f.h1 = Matrix(c.hidden, T);
  for (int t = 0; t < T; ++t) {
    for (int r = 0; r < c.hidden; ++r) {
      double acc = p.b_in[static_cast<size_t>(r)];
      for (int k = 0; k < c.f_ac; ++k) acc += p.w_in(r, k) * frames(k, t);
      f.h1(r, t) = acc;
    }
  }
  f.h2 = Matrix(c.hidden, T);
  for (int t = 0; t < T; ++t) {
    for (int r = 0; r < c.hidden; ++r) {
      double acc = p.b_ctx[static_cast<size_t>(r)];
      for (int o = -c.context; o <= c.context; ++o) {
        int s = t + o;
        if (s < 0 || s >= T) continue;
        int block = (o + c.context) * c.hidden;
        for (int k = 0; k < c.hidden; ++k) acc += p.w_ctx(r, block + k) * f.h1(k, s);
      }
      f.h2(r, t) = std::tanh(acc);
    }
  }
  f.emb = Matrix(c.embed, T);
  for (int t = 0; t < T; ++t) {
    for (int r = 0; r < c.embed; ++r) {
      double acc = p.b_emb[static_cast<size_t>(r)];
      for (int k = 0; k < c.hidden; ++k) acc += p.w_emb(r, k) * f.h2(k, t);
      f.emb(r, t) = acc;
    }
  }
  f.logits = Matrix(c.vocab + 1, T);
  for (int t = 0; t < T; ++t) {
    for (int r = 0; r <= c.vocab; ++r) {
      double acc = p.b_ctc[static_cast<size_t>(r)];
      for (int k = 0; k < c.embed; ++k) acc += p.w_ctc(r, k) * f.emb(k, t);
      f.logits(r, t) = acc;
    }
  }
  return f;
}

struct ParamGrads {
  ModelParams g;  // same shapes, gradient values

  explicit ParamGrads(const ModelConfig& cfg) : g(zero_params(cfg)) {}
};

// Accumulates exact parameter gradients for upstream d_emb [E x T] and
// d_logits [V+1 x T]. Either may be empty (treated as zero).
inline void backward(const ModelParams& p, const ForwardCache& f, const Matrix& frames,
                     const Matrix& d_emb, const Matrix& d_logits, ParamGrads& out) {
  const ModelConfig& c = p.cfg;
  const int T = frames.cols;
  const bool has_emb = d_emb.rows > 0;
  const bool has_logits = d_logits.rows > 0;
  if (has_emb && (d_emb.rows != c.embed || d_emb.cols != T)) {
    fail(ErrorKind::kValidation, "backward: d_emb shape mismatch");
  }
  if (has_logits && (d_logits.rows != c.vocab + 1 || d_logits.cols != T)) {
    fail(ErrorKind::kValidation, "backward: d_logits shape mismatch");
  }

  // d_emb_total = d_emb + W_ctc^T d_logits
  Matrix de(c.embed, T);
  if (has_logits) {
    for (int t = 0; t < T; ++t) {
      for (int r = 0; r <= c.vocab; ++r) {
        double dl = d_logits(r, t);
        if (dl == 0.0) continue;
        out.g.b_ctc[static_cast<size_t>(r)] += dl;
        for (int k = 0; k < c.embed; ++k) {
          out.g.w_ctc(r, k) += dl * f.emb(k, t);
          de(k, t) += p.w_ctc(r, k) * dl;
        }
      }
    }
  }
  if (has_emb) {
    for (int t = 0; t < T; ++t) {
      for (int k = 0; k < c.embed; ++k) de(k, t) += d_emb(k, t);
    }
  }

  // Embedding projection and tanh context layer.
  Matrix dpre(c.hidden, T);
  for (int t = 0; t < T; ++t) {
    for (int r = 0; r < c.embed; ++r) {
      double dv = de(r, t);
      if (dv == 0.0) continue;
      out.g.b_emb[static_cast<size_t>(r)] += dv;
      for (int k = 0; k < c.hidden; ++k) {
        out.g.w_emb(r, k) += dv * f.h2(k, t);
        dpre(k, t) += p.w_emb(r, k) * dv;
      }
    }
    for (int k = 0; k < c.hidden; ++k) {
      double h = f.h2(k, t);
      dpre(k, t) *= (1.0 - h * h);
    }
  }

  Matrix dh1(c.hidden, T);
  for (int t = 0; t < T; ++t) {
    for (int r = 0; r < c.hidden; ++r) {
      double dv = dpre(r, t);
      if (dv == 0.0) continue;
      out.g.b_ctx[static_cast<size_t>(r)] += dv;
      for (int o = -c.context; o <= c.context; ++o) {
        int s = t + o;
        if (s < 0 || s >= T) continue;
        int block = (o + c.context) * c.hidden;
        for (int k = 0; k < c.hidden; ++k) {
          out.g.w_ctx(r, block + k) += dv * f.h1(k, s);
          dh1(k, s) += p.w_ctx(r, block + k) * dv;
        }
      }
    }
  }

  for (int t = 0; t < T; ++t) {
    for (int r = 0; r < c.hidden; ++r) {
      double dv = dh1(r, t);
      if (dv == 0.0) continue;
      out.g.b_in[static_cast<size_t>(r)] += dv;
      for (int k = 0; k < c.f_ac; ++k) out.g.w_in(r, k) += dv * frames(k, t);
    }
  }
}

// ---------------------------------------------------------------------------
// Decoupled-weight-decay adaptive-moment update. The decay multiplies the
// parameter directly (not the gradient, not the learning rate), so lr = 0
// leaves pure exponential shrinkage.
// ---------------------------------------------------------------------------

struct AdamState {
  ModelParams m;
  ModelParams v;
  int64_t step = 0;

  explicit AdamState(const ModelConfig& cfg) : m(zero_params(cfg)), v(zero_params(cfg)) {}
};

// Desk-scale defaults. The reference full-scale recipe uses 3e-4 with a
// ~50k-step budget; at this project's default corpus size (about 5k steps)
// that learning rate provably under-trains, so the default is 1e-3 and the
// full-scale value stays reachable through the config.
struct OptimConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
};

inline void adamw_step(ModelParams& params, const ParamGrads& grads, AdamState& state,
                       const OptimConfig& oc, double lr_now) {
  state.step += 1;
  double bc1 = 1.0 - std::pow(oc.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(oc.beta2, static_cast<double>(state.step));

  std::vector<std::vector<double>*> ps, gs, ms, vs;
  for_each_array(params, [&](std::vector<double>& a) { ps.push_back(&a); });
  for_each_array(const_cast<ModelParams&>(grads.g), [&](std::vector<double>& a) { gs.push_back(&a); });
  for_each_array(state.m, [&](std::vector<double>& a) { ms.push_back(&a); });
  for_each_array(state.v, [&](std::vector<double>& a) { vs.push_back(&a); });

  for (size_t a = 0; a < ps.size(); ++a) {
    auto& p = *ps[a];
    auto& g = *gs[a];
    auto& m = *ms[a];
    auto& v = *vs[a];
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = oc.beta1 * m[i] + (1.0 - oc.beta1) * g[i];
      v[i] = oc.beta2 * v[i] + (1.0 - oc.beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p[i] = (1.0 - oc.weight_decay) * p[i] - lr_now * mhat / (std::sqrt(vhat) + oc.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Training configuration.
// ---------------------------------------------------------------------------

struct TrainConfig {
  OptimConfig optim;
  int stage1_epochs = 30;
  int stage1_batch = 16;
  int stage2_epochs = 5;
  int stage2_batch = 8;
  int epoch_triplets = 2000;
  uint64_t seed = 1;
  AlignmentMode align_mode = AlignmentMode::kDynamic;
  LossConfig loss;
  Strategy strategy = Strategy::GP;
  std::string scheme_name = "3LV";
  int hidden = 32;
  int embed = 16;
  int context = 1;
  double frame_hop_ms = 5.0;     // timestamp-mode conversion convention
  double frame_window_ms = 25.0;

  std::string canonical_string() const {
    std::ostringstream os;
    os << "lr=" << optim.learning_rate << ";wd=" << optim.weight_decay
       << ";b1=" << optim.beta1 << ";b2=" << optim.beta2 << ";eps=" << optim.epsilon
       << ";e1=" << stage1_epochs << ";bs1=" << stage1_batch << ";e2=" << stage2_epochs
       << ";bs2=" << stage2_batch << ";nt=" << epoch_triplets << ";seed=" << seed
       << ";mode=" << to_string(align_mode) << ";m=" << loss.margin << ";l=" << loss.lambda
       << ";strat=" << to_string(strategy) << ";scheme=" << scheme_name << ";h=" << hidden
       << ";e=" << embed << ";w=" << context << ";hop=" << frame_hop_ms
       << ";win=" << frame_window_ms;
    return os.str();
  }

  uint64_t hash() const { return fnv1a64(canonical_string()); }

  void validate() const {
    if (optim.learning_rate < 0 || optim.weight_decay < 0 || optim.epsilon <= 0 ||
        stage1_epochs < 1 || stage1_batch < 1 || stage2_epochs < 1 || stage2_batch < 1 ||
        epoch_triplets < 1 || hidden < 1 || embed < 1 || context < 0) {
      fail(ErrorKind::kValidation, "bad train config");
    }
    loss.validate();
  }
};

// ---------------------------------------------------------------------------
// Checkpoints. The canonical section stores the best-on-validation weights
// as little-endian float32 blobs in declared order; an optional full-
// precision section carries last weights, moments, and RNG state so training
// can resume bit-exactly.
// ---------------------------------------------------------------------------

inline constexpr uint32_t kCheckpointSchemaVersion = 1;
inline constexpr const char* kCheckpointMagic = "PHONCKPT";

struct TrainState {
  ModelParams last_params;
  ModelParams best_params;
  AdamState adam;
  double best_metric = std::numeric_limits<double>::infinity();
  int completed_epochs = 0;
  std::string rng_state;

  explicit TrainState(const ModelConfig& cfg)
      : last_params(zero_params(cfg)), best_params(zero_params(cfg)), adam(cfg) {}
};

struct Checkpoint {
  int stage = 1;
  uint64_t config_hash = 0;
  uint64_t seed = 0;
  ModelParams params;  // canonical, float32-rounded
  bool has_state = false;
  std::shared_ptr<TrainState> state;  // full precision, optional
};

namespace detail {

inline void round_params_f32(ModelParams& p) {
  for_each_array(p, [](std::vector<double>& a) {
    for (double& v : a) v = static_cast<double>(static_cast<float>(v));
  });
}

inline void write_params_f32(std::ostream& os, const ModelParams& p) {
  for_each_array(const_cast<ModelParams&>(p), [&](const std::vector<double>& a) {
    for (double v : a) write_f32_le(os, static_cast<float>(v));
  });
}

inline void read_params_f32(std::istream& is, ModelParams& p) {
  for_each_array(p, [&](std::vector<double>& a) {
    for (double& v : a) v = static_cast<double>(read_f32_le(is));
  });
}

inline void write_params_f64(std::ostream& os, const ModelParams& p) {
  for_each_array(const_cast<ModelParams&>(p), [&](const std::vector<double>& a) {
    for (double v : a) write_f64_le(os, v);
  });
}

inline void read_params_f64(std::istream& is, ModelParams& p) {
  for_each_array(p, [&](std::vector<double>& a) {
    for (double& v : a) v = read_f64_le(is);
  });
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ostringstream body(std::ios::binary);
  write_u32_le(body, kCheckpointSchemaVersion);
  write_u32_le(body, static_cast<uint32_t>(ckpt.stage));
  write_u64_le(body, ckpt.config_hash);
  write_u64_le(body, ckpt.seed);
  const ModelConfig& c = ckpt.params.cfg;
  write_u32_le(body, static_cast<uint32_t>(c.f_ac));
  write_u32_le(body, static_cast<uint32_t>(c.hidden));
  write_u32_le(body, static_cast<uint32_t>(c.embed));
  write_u32_le(body, static_cast<uint32_t>(c.context));
  write_u32_le(body, static_cast<uint32_t>(c.vocab));
  detail::write_params_f32(body, ckpt.params);
  write_u32_le(body, ckpt.has_state ? 1u : 0u);
  if (ckpt.has_state) {
    const TrainState& st = *ckpt.state;
    detail::write_params_f64(body, st.last_params);
    detail::write_params_f64(body, st.best_params);
    detail::write_params_f64(body, st.adam.m);
    detail::write_params_f64(body, st.adam.v);
    write_u64_le(body, static_cast<uint64_t>(st.adam.step));
    write_f64_le(body, st.best_metric);
    write_u32_le(body, static_cast<uint32_t>(st.completed_epochs));
    write_u32_le(body, static_cast<uint32_t>(st.rng_state.size()));
    body.write(st.rng_state.data(), static_cast<std::streamsize>(st.rng_state.size()));
  }
  std::string payload = body.str();
  Fnv1a64 ck;
  ck.update(payload.data(), payload.size());

  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kIo, "cannot write checkpoint " + path);
  os.write(kCheckpointMagic, 8);
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  write_u64_le(os, ck.digest());
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::kIo, "cannot open checkpoint " + path);
  std::ostringstream ss(std::ios::binary);
  ss << is.rdbuf();
  std::string all = ss.str();
  if (all.size() < 16 || std::memcmp(all.data(), kCheckpointMagic, 8) != 0) {
    fail(ErrorKind::kManifestMalformed, "not a checkpoint file: " + path);
  }
  std::string payload = all.substr(8, all.size() - 16);
  uint64_t stored;
  {
    std::istringstream tail(all.substr(all.size() - 8), std::ios::binary);
    stored = read_u64_le(tail);
  }
  Fnv1a64 ck;
  ck.update(payload.data(), payload.size());
  if (ck.digest() != stored) {
    fail(ErrorKind::kManifestChecksum, "checkpoint checksum mismatch: " + path);
  }

  std::istringstream body(payload, std::ios::binary);
  uint32_t version = read_u32_le(body);
  if (version != kCheckpointSchemaVersion) {
    fail(ErrorKind::kManifestVersion,
         "unsupported checkpoint schema_version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.stage = static_cast<int>(read_u32_le(body));
  ckpt.config_hash = read_u64_le(body);
  ckpt.seed = read_u64_le(body);
  ModelConfig c;
  c.f_ac = static_cast<int>(read_u32_le(body));
  c.hidden = static_cast<int>(read_u32_le(body));
  c.embed = static_cast<int>(read_u32_le(body));
  c.context = static_cast<int>(read_u32_le(body));
  c.vocab = static_cast<int>(read_u32_le(body));
  c.validate();
  ckpt.params = zero_params(c);
  detail::read_params_f32(body, ckpt.params);
  ckpt.has_state = read_u32_le(body) != 0;
  if (ckpt.has_state) {
    ckpt.state = std::make_shared<TrainState>(c);
    TrainState& st = *ckpt.state;
    detail::read_params_f64(body, st.last_params);
    detail::read_params_f64(body, st.best_params);
    detail::read_params_f64(body, st.adam.m);
    detail::read_params_f64(body, st.adam.v);
    st.adam.step = static_cast<int64_t>(read_u64_le(body));
    st.best_metric = read_f64_le(body);
    st.completed_epochs = static_cast<int>(read_u32_le(body));
    uint32_t n = read_u32_le(body);
    st.rng_state.resize(n);
    body.read(st.rng_state.data(), n);
    if (!body) fail(ErrorKind::kManifestMalformed, "truncated checkpoint state");
  }
  return ckpt;
}

inline std::string serialize_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline void restore_rng(Rng& rng, const std::string& s) {
  std::istringstream is(s);
  is >> rng;
  if (!is) fail(ErrorKind::kManifestMalformed, "bad RNG state in checkpoint");
}

// ---------------------------------------------------------------------------
// Shared helpers.
// ---------------------------------------------------------------------------

inline LabelSequence labels_for(const Utterance& u, const PhonemeFeatureTable& table) {
  LabelSequence l;
  l.labels = phonemes_to_labels(u.phonemes, table);
  return l;
}

struct StepRecord {
  int64_t step = 0;
  double l_ctc = 0.0;
  double l_triplet = 0.0;
  double l_total = 0.0;
};

struct PhaseRecord {
  int epoch = 0;
  int phase_index = 0;
  std::string phase;
  int n_triplets = 0;
  bool with_replacement = false;
  int skipped = 0;
  double l_ctc = 0.0;
  double l_triplet = 0.0;
  double l_total = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<StepRecord> curve;
  std::vector<PhaseRecord> phases;   // stage 2 only
  std::vector<double> valid_wer_per_epoch;
  int skipped_triplets = 0;          // stage 2 only
};

inline void write_loss_curve_csv(const std::vector<StepRecord>& curve, std::ostream& os) {
  os << "step,l_ctc,l_triplet,l_total\n";
  char buf[128];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g", static_cast<long long>(r.step),
                  r.l_ctc, r.l_triplet, r.l_total);
    os << buf << '\n';
  }
}

// Plain utterance-level word error over a split; the stage-selection metric.
inline double validation_wer(const ModelParams& params, const Corpus& corpus,
                             const std::vector<int>& indices, const PhonemeFeatureTable& table) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  int wrong = 0;
  for (int i : indices) {
    const Utterance& u = corpus.utterances[static_cast<size_t>(i)];
    ForwardCache f = forward(params, u.frames);
    LabelSequence decoded = greedy_decode(LogitSequence{f.logits});
    const LexiconEntry& e = word_decode(decoded.labels, corpus.lexicon, table);
    if (e.word != u.word) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(indices.size());
}

// ---------------------------------------------------------------------------
// Stage 1: CTC training.
// ---------------------------------------------------------------------------

// epoch_limit < 0 trains the full cfg.stage1_epochs; a smaller limit stops
// early with a resumable checkpoint (the LR schedule still spans the full
// plan, so resumed training reproduces an uninterrupted run exactly).
inline TrainResult train_stage1(const Corpus& corpus, const SplitResult& split,
                                const PhonemeFeatureTable& table, const TrainConfig& cfg,
                                const Checkpoint* resume = nullptr, int epoch_limit = -1) {
  cfg.validate();
  if (split.train.empty()) fail(ErrorKind::kValidation, "stage 1: empty TRAIN split");

  ModelConfig mc;
  mc.f_ac = corpus.feature_dim;
  mc.hidden = cfg.hidden;
  mc.embed = cfg.embed;
  mc.context = cfg.context;
  mc.vocab = table.size();

  TrainResult result;
  auto state = std::make_shared<TrainState>(mc);
  Rng rng(derive_seed(cfg.seed, "stage1"));
  int start_epoch = 0;

  if (resume != nullptr) {
    if (!resume->has_state) fail(ErrorKind::kValidation, "resume checkpoint lacks train state");
    *state = *resume->state;
    restore_rng(rng, state->rng_state);
    start_epoch = state->completed_epochs;
  } else {
    state->last_params = init_params(mc, derive_seed(cfg.seed, "init"));
    state->best_params = state->last_params;
  }

  const int n_train = static_cast<int>(split.train.size());
  const int steps_per_epoch = (n_train + cfg.stage1_batch - 1) / cfg.stage1_batch;
  const int64_t total_steps = static_cast<int64_t>(steps_per_epoch) * cfg.stage1_epochs;
  const int end_epoch =
      epoch_limit < 0 ? cfg.stage1_epochs : std::min(epoch_limit, cfg.stage1_epochs);

  for (int epoch = start_epoch; epoch < end_epoch; ++epoch) {
    std::vector<int> order(split.train);
    std::shuffle(order.begin(), order.end(), rng);
    for (int b = 0; b < steps_per_epoch; ++b) {
      int lo = b * cfg.stage1_batch;
      int hi = std::min(n_train, lo + cfg.stage1_batch);
      int n = hi - lo;
      ParamGrads grads(mc);
      double batch_loss = 0.0;
      for (int i = lo; i < hi; ++i) {
        const Utterance& u = corpus.utterances[static_cast<size_t>(order[static_cast<size_t>(i)])];
        ForwardCache f = forward(state->last_params, u.frames);
        CtcResult ctc = ctc_loss(LogitSequence{f.logits}, labels_for(u, table));
        batch_loss += ctc.loss;
        for (double& v : ctc.grad.data) v /= static_cast<double>(n);
        backward(state->last_params, f, u.frames, Matrix(), ctc.grad, grads);
      }
      batch_loss /= static_cast<double>(n);
      if (!std::isfinite(batch_loss)) {
        fail(ErrorKind::kNumeric, "stage 1 diverged at epoch " + std::to_string(epoch) +
                                      " step " + std::to_string(b) + ": non-finite loss");
      }
      double lr_now = cfg.optim.learning_rate *
                      (1.0 - static_cast<double>(state->adam.step) / static_cast<double>(total_steps));
      adamw_step(state->last_params, grads, state->adam, cfg.optim, lr_now);
      result.curve.push_back({state->adam.step, batch_loss, 0.0, batch_loss});
    }
    double wer = validation_wer(state->last_params, corpus, split.valid, table);
    result.valid_wer_per_epoch.push_back(wer);
    if (std::isnan(wer) || wer < state->best_metric) {
      state->best_metric = std::isnan(wer) ? state->best_metric : wer;
      state->best_params = state->last_params;
    }
    state->completed_epochs = epoch + 1;
  }

  state->rng_state = serialize_rng(rng);
  Checkpoint ckpt;
  ckpt.stage = 1;
  ckpt.config_hash = cfg.hash();
  ckpt.seed = cfg.seed;
  ckpt.params = state->best_params;
  detail::round_params_f32(ckpt.params);
  ckpt.has_state = true;
  ckpt.state = state;
  result.checkpoint = std::move(ckpt);
  return result;
}

// ---------------------------------------------------------------------------
// Stage 2: CTC/PCL with curriculum phases.
// ---------------------------------------------------------------------------

// How one pooled phoneme embedding is produced from an utterance forward
// pass. Empty weights mean dynamic pooling: weights are the live softmax
// scores of `label` over `frames`, floored and renormalized, and gradients
// flow through them.
struct PoolPlan {
  std::vector<int> frames;
  std::vector<double> weights;  // fixed weights; empty => dynamic
  int label = 0;
};

struct TripletWork {
  int utt[3] = {-1, -1, -1};  // corpus indices: anchor, positive, negative
  PoolPlan plan[3];
};

namespace detail {

struct PooledEmbedding {
  std::vector<double> vec;
  std::vector<double> weights;  // effective weights used
  double weight_sum = 0.0;      // pre-normalization sum (dynamic only)
  std::vector<double> scores;   // floored raw scores (dynamic only)
};

inline PooledEmbedding pool_with_plan(const ForwardCache& f, const PoolPlan& plan) {
  PooledEmbedding out;
  const int E = f.emb.rows;
  out.vec.assign(static_cast<size_t>(E), 0.0);
  size_t n = plan.frames.size();
  if (n == 0) fail(ErrorKind::kDegenerateSpan, "pooling plan owns no frames");
  out.weights.assign(n, 0.0);
  if (plan.weights.empty()) {
    // Dynamic: weights from the live logits' softmax at the planned label.
    out.scores.assign(n, 0.0);
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      int t = plan.frames[i];
      double hi = f.logits(0, t);
      for (int k = 1; k < f.logits.rows; ++k) hi = std::max(hi, f.logits(k, t));
      double z = 0.0;
      for (int k = 0; k < f.logits.rows; ++k) z += std::exp(f.logits(k, t) - hi);
      double s = std::exp(f.logits(plan.label, t) - hi) / z;
      s = std::max(s, kScoreFloor);
      out.scores[i] = s;
      total += s;
    }
    out.weight_sum = total;
    for (size_t i = 0; i < n; ++i) out.weights[i] = out.scores[i] / total;
  } else {
    if (plan.weights.size() != n) fail(ErrorKind::kValidation, "pooling plan weight mismatch");
    out.weights = plan.weights;
  }
  for (size_t i = 0; i < n; ++i) {
    int t = plan.frames[i];
    for (int e = 0; e < E; ++e) out.vec[static_cast<size_t>(e)] += out.weights[i] * f.emb(e, t);
  }
  return out;
}

// Backpropagates d_pooled through the pooling into d_emb and (dynamic mode)
// d_logits. The alignment itself is piecewise-constant and gets no gradient.
inline void pool_backward(const ForwardCache& f, const PoolPlan& plan,
                          const PooledEmbedding& pooled, const std::vector<double>& d_pooled,
                          Matrix& d_emb, Matrix& d_logits) {
  const int E = f.emb.rows;
  size_t n = plan.frames.size();
  for (size_t i = 0; i < n; ++i) {
    int t = plan.frames[i];
    for (int e = 0; e < E; ++e) {
      d_emb(e, t) += pooled.weights[i] * d_pooled[static_cast<size_t>(e)];
    }
  }
  if (plan.weights.empty()) {
    // d s_i = d_pooled . (emb_i - pooled) / sum(s)
    for (size_t i = 0; i < n; ++i) {
      if (pooled.scores[i] <= kScoreFloor) continue;  // floored: constant
      int t = plan.frames[i];
      double ds = 0.0;
      for (int e = 0; e < E; ++e) {
        ds += d_pooled[static_cast<size_t>(e)] *
              (f.emb(e, t) - pooled.vec[static_cast<size_t>(e)]);
      }
      ds /= pooled.weight_sum;
      // softmax jacobian at the planned label
      double hi = f.logits(0, t);
      for (int k = 1; k < f.logits.rows; ++k) hi = std::max(hi, f.logits(k, t));
      double z = 0.0;
      for (int k = 0; k < f.logits.rows; ++k) z += std::exp(f.logits(k, t) - hi);
      double s = pooled.scores[i];
      for (int k = 0; k < f.logits.rows; ++k) {
        double yk = std::exp(f.logits(k, t) - hi) / z;
        double delta = (k == plan.label) ? 1.0 : 0.0;
        d_logits(k, t) += ds * s * (delta - yk);
      }
    }
  }
}

}  // namespace detail

struct Stage2BatchLoss {
  double l_ctc_anchor = 0.0;
  double l_ctc_positive = 0.0;
  double l_ctc_negative = 0.0;
  double l_triplet = 0.0;
  double l_total = 0.0;
};

// Loss (and optionally gradients) of a stage-2 batch with the pooling plans
// held fixed. Training rebuilds the plans every batch; the finite-difference
// oracle reuses one set of plans across perturbations.
inline Stage2BatchLoss stage2_loss_and_grads(const ModelParams& params, const Corpus& corpus,
                                             const PhonemeFeatureTable& table,
                                             const std::vector<TripletWork>& items,
                                             const LossConfig& loss_cfg, ParamGrads* grads) {
  if (items.empty()) fail(ErrorKind::kValidation, "stage 2: empty batch");
  Stage2BatchLoss out;
  const double inv_n = 1.0 / static_cast<double>(items.size());

  for (const auto& item : items) {
    ForwardCache fwd[3];
    detail::PooledEmbedding pooled[3];
    std::vector<double> feat[3];   // what the triplet loss sees
    double norms[3] = {1.0, 1.0, 1.0};
    double ctc_losses[3];
    Matrix d_emb[3], d_logits[3];
    for (int role = 0; role < 3; ++role) {
      const Utterance& u = corpus.utterances[static_cast<size_t>(item.utt[role])];
      fwd[role] = forward(params, u.frames);
      CtcResult ctc = ctc_loss(LogitSequence{fwd[role].logits}, labels_for(u, table));
      ctc_losses[role] = ctc.loss;
      pooled[role] = detail::pool_with_plan(fwd[role], item.plan[role]);
      if (loss_cfg.normalize_embeddings) {
        double n = 0.0;
        for (double v : pooled[role].vec) n += v * v;
        norms[role] = std::sqrt(std::max(n, 1e-24));
        feat[role] = pooled[role].vec;
        for (double& v : feat[role]) v /= norms[role];
      } else {
        feat[role] = pooled[role].vec;
      }
      if (grads != nullptr) {
        d_emb[role] = Matrix(fwd[role].emb.rows, fwd[role].emb.cols);
        d_logits[role] = ctc.grad;
        for (double& v : d_logits[role].data) v *= inv_n / 3.0;
      }
    }
    TripletLossResult trip = triplet_loss(feat[0], feat[1], feat[2], loss_cfg.margin);

    out.l_ctc_anchor += ctc_losses[0] * inv_n;
    out.l_ctc_positive += ctc_losses[1] * inv_n;
    out.l_ctc_negative += ctc_losses[2] * inv_n;
    out.l_triplet += trip.loss * inv_n;

    if (grads != nullptr) {
      const std::vector<double>* trip_grads[3] = {&trip.grad_anchor, &trip.grad_positive,
                                                  &trip.grad_negative};
      for (int role = 0; role < 3; ++role) {
        std::vector<double> d_pooled((*trip_grads[role]).size(), 0.0);
        if (loss_cfg.normalize_embeddings) {
          // y = x / |x|:  dL/dx = (g - y (y . g)) / |x|
          const std::vector<double>& g = *trip_grads[role];
          const std::vector<double>& y = feat[role];
          double dot = 0.0;
          for (size_t e = 0; e < g.size(); ++e) dot += y[e] * g[e];
          for (size_t e = 0; e < g.size(); ++e) {
            d_pooled[e] = loss_cfg.lambda * inv_n * (g[e] - y[e] * dot) / norms[role];
          }
        } else {
          for (size_t e = 0; e < d_pooled.size(); ++e) {
            d_pooled[e] = loss_cfg.lambda * inv_n * (*trip_grads[role])[e];
          }
        }
        detail::pool_backward(fwd[role], item.plan[role], pooled[role], d_pooled, d_emb[role],
                              d_logits[role]);
        const Utterance& u = corpus.utterances[static_cast<size_t>(item.utt[role])];
        backward(params, fwd[role], u.frames, d_emb[role], d_logits[role], *grads);
      }
    }
  }
  out.l_total = (out.l_ctc_anchor + out.l_ctc_positive + out.l_ctc_negative) / 3.0 +
                loss_cfg.lambda * out.l_triplet;
  return out;
}

// Builds the pooling plans for one triplet under the active alignment mode.
// Throws kInfeasibleAlignment / kDegenerateSpan for items that cannot be
// aligned; callers skip and count those.
inline TripletWork plan_triplet(const ModelParams& live, const ModelParams& frozen,
                                const Corpus& corpus, const PhonemeFeatureTable& table,
                                const TripletSpec& spec, const TrainConfig& cfg) {
  TripletWork work;
  const PhonemeOccurrence* occ[3] = {&spec.anchor, &spec.positive, &spec.negative};
  for (int role = 0; role < 3; ++role) {
    int ui = occ[role]->utterance_index;
    if (ui < 0 || ui >= static_cast<int>(corpus.utterances.size())) {
      fail(ErrorKind::kValidation, "triplet references unknown utterance");
    }
    const Utterance& u = corpus.utterances[static_cast<size_t>(ui)];
    work.utt[role] = ui;
    PoolPlan& plan = work.plan[role];
    int position = occ[role]->position;
    LabelSequence labels = labels_for(u, table);
    if (position < 0 || position >= labels.size()) {
      fail(ErrorKind::kValidation, "triplet position out of range");
    }
    plan.label = labels.labels[static_cast<size_t>(position)];

    switch (cfg.align_mode) {
      case AlignmentMode::kDynamic: {
        ForwardCache f = forward(live, u.frames);
        AlignmentResult align = ctc_forced_align(LogitSequence{f.logits}, labels);
        const PhonemeSpan& span = align.spans[static_cast<size_t>(position)];
        for (int t = span.first_frame; t <= span.last_frame; ++t) plan.frames.push_back(t);
        break;
      }
      case AlignmentMode::kFrozenLogit: {
        ForwardCache f = forward(frozen, u.frames);
        AlignmentResult align = ctc_forced_align(LogitSequence{f.logits}, labels);
        const PhonemeSpan& span = align.spans[static_cast<size_t>(position)];
        double total = 0.0;
        for (double s : span.frame_scores) total += std::max(s, kScoreFloor);
        for (size_t i = 0; i < span.frame_scores.size(); ++i) {
          plan.frames.push_back(span.first_frame + static_cast<int>(i));
          plan.weights.push_back(std::max(span.frame_scores[i], kScoreFloor) / total);
        }
        break;
      }
      case AlignmentMode::kTimestamp: {
        // Frozen alignment exported as millisecond timestamps, then mapped
        // back to frame indices through the hop/window convention.
        ForwardCache f = forward(frozen, u.frames);
        AlignmentResult align = ctc_forced_align(LogitSequence{f.logits}, labels);
        const PhonemeSpan& span = align.spans[static_cast<size_t>(position)];
        TimeInterval iv{span.first_frame * cfg.frame_hop_ms,
                        (span.last_frame + 1) * cfg.frame_hop_ms};
        plan.frames = frames_overlapping(iv, cfg.frame_hop_ms, cfg.frame_window_ms, u.frame_count());
        if (plan.frames.empty()) {
          fail(ErrorKind::kDegenerateSpan, "timestamp interval maps to zero frames");
        }
        plan.weights.assign(plan.frames.size(), 1.0 / static_cast<double>(plan.frames.size()));
        break;
      }
    }
  }
  return work;
}

inline TrainResult train_stage2(const Checkpoint& stage1, const Corpus& corpus,
                                const SplitResult& split, const PhonemeFeatureTable& table,
                                const std::vector<TripletSpec>& triplets, const TrainConfig& cfg) {
  cfg.validate();
  if (stage1.stage != 1) {
    fail(ErrorKind::kValidation, "stage 2 requires a stage-1 checkpoint");
  }
  if (triplets.empty()) fail(ErrorKind::kValidation, "stage 2: empty triplet list");

  const ModelConfig mc = stage1.params.cfg;
  if (mc.vocab != table.size() || mc.f_ac != corpus.feature_dim) {
    fail(ErrorKind::kValidation, "stage-1 checkpoint does not match corpus/feature table");
  }

  DifficultyScheme scheme = make_scheme(cfg.scheme_name);
  CurriculumSchedule schedule = make_schedule(cfg.strategy, scheme, cfg.epoch_triplets);

  auto state = std::make_shared<TrainState>(mc);
  state->last_params = stage1.params;  // canonical float32 weights
  state->best_params = state->last_params;
  const ModelParams frozen = stage1.params;
  const uint64_t frozen_hash = params_hash(frozen);

  TrainResult result;
  const int64_t steps_per_epoch = [&] {
    int64_t s = 0;
    for (const auto& ph : schedule.phases) {
      s += (ph.budget + cfg.stage2_batch - 1) / cfg.stage2_batch;
    }
    return s;
  }();
  const int64_t total_steps = steps_per_epoch * cfg.stage2_epochs;

  for (int epoch = 0; epoch < cfg.stage2_epochs; ++epoch) {
    for (size_t pi = 0; pi < schedule.phases.size(); ++pi) {
      const Phase& phase = schedule.phases[pi];
      PhaseSample sample = phase_filter(
          triplets, phase,
          derive_seed(cfg.seed, "phase:" + std::to_string(epoch) + ":" + std::to_string(pi)));
      PhaseRecord rec;
      rec.epoch = epoch;
      rec.phase_index = static_cast<int>(pi);
      rec.phase = phase.describe();
      rec.n_triplets = static_cast<int>(sample.triplets.size());
      rec.with_replacement = sample.with_replacement;

      int n_batches = (static_cast<int>(sample.triplets.size()) + cfg.stage2_batch - 1) /
                      cfg.stage2_batch;
      for (int b = 0; b < n_batches; ++b) {
        int lo = b * cfg.stage2_batch;
        int hi = std::min<int>(static_cast<int>(sample.triplets.size()), lo + cfg.stage2_batch);
        std::vector<TripletWork> items;
        for (int i = lo; i < hi; ++i) {
          try {
            items.push_back(plan_triplet(state->last_params, frozen, corpus, table,
                                         sample.triplets[static_cast<size_t>(i)], cfg));
          } catch (const Error& e) {
            if (e.kind() == ErrorKind::kInfeasibleAlignment ||
                e.kind() == ErrorKind::kDegenerateSpan) {
              ++result.skipped_triplets;
              ++rec.skipped;
            } else {
              throw;
            }
          }
        }
        if (items.empty()) continue;
        ParamGrads grads(mc);
        Stage2BatchLoss loss =
            stage2_loss_and_grads(state->last_params, corpus, table, items, cfg.loss, &grads);
        if (!std::isfinite(loss.l_total)) {
          fail(ErrorKind::kNumeric, "stage 2 diverged: non-finite loss");
        }
        double lr_now =
            cfg.optim.learning_rate *
            (1.0 - static_cast<double>(state->adam.step) / static_cast<double>(total_steps));
        adamw_step(state->last_params, grads, state->adam, cfg.optim, lr_now);
        double l_ctc = (loss.l_ctc_anchor + loss.l_ctc_positive + loss.l_ctc_negative) / 3.0;
        result.curve.push_back({state->adam.step, l_ctc, loss.l_triplet, loss.l_total});
        rec.l_ctc += l_ctc;
        rec.l_triplet += loss.l_triplet;
        rec.l_total += loss.l_total;
      }
      if (n_batches > 0) {
        rec.l_ctc /= n_batches;
        rec.l_triplet /= n_batches;
        rec.l_total /= n_batches;
      }
      result.phases.push_back(std::move(rec));
    }
    double wer = validation_wer(state->last_params, corpus, split.valid, table);
    result.valid_wer_per_epoch.push_back(wer);
    if (std::isnan(wer) || wer < state->best_metric) {
      state->best_metric = std::isnan(wer) ? state->best_metric : wer;
      state->best_params = state->last_params;
    }
    state->completed_epochs = epoch + 1;
  }

  if (params_hash(frozen) != frozen_hash) {
    fail(ErrorKind::kNumeric, "frozen aligner snapshot mutated during stage 2");
  }

  Checkpoint ckpt;
  ckpt.stage = 2;
  ckpt.config_hash = cfg.hash();
  ckpt.seed = cfg.seed;
  ckpt.params = state->best_params;
  detail::round_params_f32(ckpt.params);
  ckpt.has_state = true;
  state->rng_state = serialize_rng(Rng(derive_seed(cfg.seed, "stage2-final")));
  ckpt.state = state;
  result.checkpoint = std::move(ckpt);
  return result;
}

// ---------------------------------------------------------------------------
// Model-level evaluation.
// ---------------------------------------------------------------------------

inline GroupReport evaluate_model(const ModelParams& params, const Corpus& corpus,
                                  const std::vector<int>& indices,
                                  const PhonemeFeatureTable& table) {
  std::vector<UtteranceScore> scores;
  scores.reserve(indices.size());
  for (int i : indices) {
    const Utterance& u = corpus.utterances[static_cast<size_t>(i)];
    ForwardCache f = forward(params, u.frames);
    LabelSequence decoded = greedy_decode(LogitSequence{f.logits});
    const LexiconEntry& e = word_decode(decoded.labels, corpus.lexicon, table);
    std::vector<int> ref = phonemes_to_labels(u.phonemes, table);
    UtteranceScore s;
    s.group = u.group;
    s.speaker_id = u.speaker_id;
    s.word_correct = e.word == u.word;
    s.phoneme_edits = edit_distance(ref, decoded.labels);
    s.ref_len = static_cast<int>(ref.size());
    scores.push_back(std::move(s));
  }
  return make_group_report(scores);
}

struct ExtractedEmbedding {
  std::string utterance_id;
  Group group = Group::C;
  std::string phoneme;
  int label = 0;
  std::vector<double> vec;
};

// Phoneme embeddings of a split via the model's own forced alignment with
// score-weighted pooling. Infeasible utterances are skipped.
inline std::vector<ExtractedEmbedding> extract_corpus_embeddings(
    const ModelParams& params, const Corpus& corpus, const std::vector<int>& indices,
    const PhonemeFeatureTable& table) {
  std::vector<ExtractedEmbedding> out;
  for (int i : indices) {
    const Utterance& u = corpus.utterances[static_cast<size_t>(i)];
    ForwardCache f = forward(params, u.frames);
    std::vector<PhonemeEmbedding> embs;
    try {
      embs = extract_all(EmbeddingSequence{f.emb}, LogitSequence{f.logits}, labels_for(u, table));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kInfeasibleAlignment) continue;
      throw;
    }
    for (size_t pi = 0; pi < embs.size(); ++pi) {
      ExtractedEmbedding ee;
      ee.utterance_id = u.utterance_id;
      ee.group = u.group;
      ee.phoneme = u.phonemes[pi];
      ee.label = embs[pi].phoneme;
      ee.vec = std::move(embs[pi].vector);
      out.push_back(std::move(ee));
    }
  }
  return out;
}

}  // namespace phoncl
