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

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "phoncl/trainer.hpp"

namespace phoncl::cli {

using nlohmann::json;
namespace fs = std::filesystem;

// Exit codes are a stable scripting contract: 0 success, 2 validation, 3
// runtime/numeric trouble.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
    case ErrorKind::kDomain:
    case ErrorKind::kInfeasibleAlignment:
    case ErrorKind::kDegenerateSpan:
    case ErrorKind::kDegenerateWeights:
    case ErrorKind::kPhaseStarvation:
    case ErrorKind::kManifestVersion:
    case ErrorKind::kManifestMalformed:
      return 2;
    case ErrorKind::kManifestChecksum:
    case ErrorKind::kIo:
    case ErrorKind::kNumeric:
      return 3;
  }
  return 3;
}

inline std::string iso8601_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) fail(ErrorKind::kIo, "cannot write " + tmp);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Run manifests: every command records its full effective configuration so
// the run can be replayed from the manifest alone.
// ---------------------------------------------------------------------------

struct RunManifestWriter {
  json doc;
  std::string path;

  RunManifestWriter(const std::string& command, const std::string& manifest_path)
      : path(manifest_path) {
    doc["command"] = command;
    doc["tool_version"] = kVersion;
    doc["started_at"] = iso8601_now();
  }

  void finish(const json& result) {
    doc["finished_at"] = iso8601_now();
    doc["result"] = result;
    write_file_atomic(path, doc.dump(2) + "\n");
  }
};

// ---------------------------------------------------------------------------
// Config <-> JSON.
// ---------------------------------------------------------------------------

inline json lexicon_to_json(const Lexicon& lex) {
  json arr = json::array();
  for (const auto& e : lex.entries) {
    arr.push_back({{"word", e.word}, {"common", e.common}, {"phonemes", e.phonemes}});
  }
  return arr;
}

inline Lexicon lexicon_from_json(const json& arr) {
  Lexicon lex;
  for (const auto& item : arr) {
    LexiconEntry e;
    e.word = item.at("word").get<std::string>();
    e.common = item.value("common", false);
    for (const auto& p : item.at("phonemes")) e.phonemes.push_back(p.get<std::string>());
    lex.entries.push_back(std::move(e));
  }
  return lex;
}

inline json corpus_config_to_json(const CorpusConfig& c) {
  json profiles;
  for (const auto& [g, p] : c.profiles) {
    profiles[to_string(g)] = {{"noise_sigma", p.noise_sigma},
                              {"distortion_strength", p.distortion_strength},
                              {"tempo_min", p.tempo_min},
                              {"tempo_max", p.tempo_max},
                              {"drop_prob", p.drop_prob}};
  }
  return {{"n_speakers_per_group", c.n_speakers_per_group},
          {"n_repetitions", c.n_repetitions},
          {"feature_dim", c.feature_dim},
          {"base_segment_len", c.base_segment_len},
          {"prototype_scale", c.prototype_scale},
          {"profiles", profiles},
          {"lexicon", lexicon_to_json(c.effective_lexicon())}};
}

inline CorpusConfig corpus_config_from_json(const json& j) {
  CorpusConfig c;
  c.n_speakers_per_group = j.value("n_speakers_per_group", c.n_speakers_per_group);
  c.n_repetitions = j.value("n_repetitions", c.n_repetitions);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.base_segment_len = j.value("base_segment_len", c.base_segment_len);
  c.prototype_scale = j.value("prototype_scale", c.prototype_scale);
  if (j.contains("profiles")) {
    for (const auto& [name, pj] : j.at("profiles").items()) {
      Group g = parse_group(name);
      GroupProfile& p = c.profiles[g];
      p.noise_sigma = pj.value("noise_sigma", p.noise_sigma);
      p.distortion_strength = pj.value("distortion_strength", p.distortion_strength);
      p.tempo_min = pj.value("tempo_min", p.tempo_min);
      p.tempo_max = pj.value("tempo_max", p.tempo_max);
      p.drop_prob = pj.value("drop_prob", p.drop_prob);
    }
  }
  if (j.contains("lexicon_file")) {
    std::ifstream is(j.at("lexicon_file").get<std::string>());
    if (!is) fail(ErrorKind::kIo, "cannot open lexicon file");
    c.lexicon = parse_lexicon(is);
  } else if (j.contains("lexicon")) {
    c.lexicon = lexicon_from_json(j.at("lexicon"));
  }
  return c;
}

inline json train_config_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.optim.learning_rate},
          {"weight_decay", c.optim.weight_decay},
          {"beta1", c.optim.beta1},
          {"beta2", c.optim.beta2},
          {"adam_epsilon", c.optim.epsilon},
          {"stage1_epochs", c.stage1_epochs},
          {"stage1_batch", c.stage1_batch},
          {"stage2_epochs", c.stage2_epochs},
          {"stage2_batch", c.stage2_batch},
          {"epoch_triplets", c.epoch_triplets},
          {"seed", c.seed},
          {"align_mode", to_string(c.align_mode)},
          {"margin", c.loss.margin},
          {"lambda", c.loss.lambda},
          {"strategy", to_string(c.strategy)},
          {"scheme", c.scheme_name},
          {"hidden", c.hidden},
          {"embed", c.embed},
          {"context", c.context},
          {"frame_hop_ms", c.frame_hop_ms},
          {"frame_window_ms", c.frame_window_ms}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.optim.learning_rate = j.value("learning_rate", c.optim.learning_rate);
  c.optim.weight_decay = j.value("weight_decay", c.optim.weight_decay);
  c.optim.beta1 = j.value("beta1", c.optim.beta1);
  c.optim.beta2 = j.value("beta2", c.optim.beta2);
  c.optim.epsilon = j.value("adam_epsilon", c.optim.epsilon);
  c.stage1_epochs = j.value("stage1_epochs", c.stage1_epochs);
  c.stage1_batch = j.value("stage1_batch", c.stage1_batch);
  c.stage2_epochs = j.value("stage2_epochs", c.stage2_epochs);
  c.stage2_batch = j.value("stage2_batch", c.stage2_batch);
  c.epoch_triplets = j.value("epoch_triplets", c.epoch_triplets);
  c.seed = j.value("seed", c.seed);
  if (j.contains("align_mode")) c.align_mode = parse_alignment_mode(j.at("align_mode").get<std::string>());
  c.loss.margin = j.value("margin", c.loss.margin);
  c.loss.lambda = j.value("lambda", c.loss.lambda);
  if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  c.scheme_name = j.value("scheme", c.scheme_name);
  c.hidden = j.value("hidden", c.hidden);
  c.embed = j.value("embed", c.embed);
  c.context = j.value("context", c.context);
  c.frame_hop_ms = j.value("frame_hop_ms", c.frame_hop_ms);
  c.frame_window_ms = j.value("frame_window_ms", c.frame_window_ms);
  return c;
}

inline json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::kIo, "cannot open config file " + path);
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::kValidation, "bad JSON in " + path + ": " + e.what());
  }
  return j;
}

inline const PhonemeFeatureTable& table_for(const std::string& features_path,
                                            PhonemeFeatureTable& storage) {
  if (features_path.empty()) return builtin_feature_table();
  std::ifstream is(features_path);
  if (!is) fail(ErrorKind::kIo, "cannot open feature table " + features_path);
  storage = parse_feature_table(is);
  return storage;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

struct GenDataOptions {
  std::string config_path;
  uint64_t seed = 1;
  std::string out_dir;
};

inline int cmd_gen_data(const GenDataOptions& opts, std::ostream& log = std::cout) {
  CorpusConfig config;
  if (!opts.config_path.empty()) config = corpus_config_from_json(load_json_file(opts.config_path));
  const PhonemeFeatureTable& table = builtin_feature_table();

  // All validation problems at once.
  std::vector<std::string> errors;
  try {
    config.validate(table);
  } catch (const Error& e) {
    errors.push_back(e.what());
  }
  if (!errors.empty()) {
    fail(ErrorKind::kValidation, join(errors, "; "));
  }

  RunManifestWriter manifest("gen-data", (fs::path(opts.out_dir) / "run_manifest.json").string());
  manifest.doc["seed"] = opts.seed;
  manifest.doc["config"] = corpus_config_to_json(config);
  manifest.doc["outputs"] = {opts.out_dir};

  fs::create_directories(opts.out_dir);
  GenerationReport report;
  Corpus corpus = generate_corpus(config, opts.seed, table, &report);
  save_manifest(corpus, opts.out_dir);

  json result;
  result["n_utterances"] = corpus.utterances.size();
  for (Group g : kAllGroups) {
    result["per_group"][to_string(g)] = {{"n", report.utterance_count[g]},
                                         {"snr_db", report.mean_snr_db[g]}};
  }
  SplitResult split = split_corpus(corpus);
  result["splits"] = {{"train", split.train.size()},
                      {"valid", split.valid.size()},
                      {"test", split.test.size()},
                      {"ctest", split.ctest.size()}};
  manifest.finish(result);
  log << "gen-data: " << corpus.utterances.size() << " utterances -> " << opts.out_dir << "\n";
  for (Group g : kAllGroups) {
    log << "  " << to_string(g) << ": n=" << report.utterance_count[g]
        << " snr_db=" << report.mean_snr_db[g] << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// distance-matrix
// ---------------------------------------------------------------------------

struct DistanceMatrixOptions {
  std::string features_path;
  std::string out_csv;
  bool stats = false;
};

inline int cmd_distance_matrix(const DistanceMatrixOptions& opts, std::ostream& log = std::cout) {
  PhonemeFeatureTable storage;
  const PhonemeFeatureTable& table = table_for(opts.features_path, storage);
  PhonemeDistanceMatrix m = build_distance_matrix(table);

  RunManifestWriter manifest("distance-matrix", opts.out_csv + ".manifest.json");
  manifest.doc["features"] = opts.features_path.empty() ? "builtin" : opts.features_path;
  manifest.doc["outputs"] = {opts.out_csv};

  {
    std::ofstream os(opts.out_csv);
    if (!os) fail(ErrorKind::kIo, "cannot write " + opts.out_csv);
    write_distance_matrix_csv(m, os);
  }

  json result;
  result["phonemes"] = m.inventory.size();
  if (opts.stats) {
    DistanceStats stats = distance_stats(m);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "distance stats: mean %.4f (reference 0.28), median %.4f (reference 0.29)",
                  stats.mean, stats.median);
    log << buf << "\n";
    log << "histogram (0.05 buckets):";
    for (size_t i = 0; i < stats.histogram.size(); ++i) {
      if (stats.histogram[i] > 0) {
        log << " [" << i * kHistogramBucketWidth << "," << (i + 1) * kHistogramBucketWidth
            << ")=" << stats.histogram[i];
      }
    }
    log << "\n";
    result["mean"] = stats.mean;
    result["median"] = stats.median;
  }
  manifest.finish(result);
  log << "distance-matrix: " << m.inventory.size() << " phonemes -> " << opts.out_csv << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// build-triplets
// ---------------------------------------------------------------------------

struct BuildTripletsOptions {
  std::string corpus_dir;
  std::string features_path;
  int cap_positives = 5;
  int cap_negatives = 5;
  std::string scheme = "3LV";
  bool healthy_only = false;
  uint64_t seed = 1;
  std::string out_path;
};

inline int cmd_build_triplets(const BuildTripletsOptions& opts, std::ostream& log = std::cout) {
  PhonemeFeatureTable storage;
  const PhonemeFeatureTable& table = table_for(opts.features_path, storage);
  Corpus corpus = load_manifest(opts.corpus_dir);
  SplitResult split = split_corpus(corpus);

  SamplerOptions sopts;
  sopts.caps.max_positives_per_anchor = opts.cap_positives;
  sopts.caps.max_negatives_per_pair = opts.cap_negatives;
  sopts.scheme = make_scheme(opts.scheme);
  sopts.healthy_only = opts.healthy_only;

  RunManifestWriter manifest("build-triplets", opts.out_path + ".manifest.json");
  manifest.doc["seed"] = opts.seed;
  manifest.doc["config"] = {{"corpus", opts.corpus_dir},
                            {"caps", {opts.cap_positives, opts.cap_negatives}},
                            {"scheme", opts.scheme},
                            {"healthy_only", opts.healthy_only},
                            {"features", opts.features_path.empty() ? "builtin" : opts.features_path}};
  manifest.doc["outputs"] = {opts.out_path};

  TripletBuild build = build_triplets(corpus, split.train, table, sopts, opts.seed);
  {
    std::ofstream os(opts.out_path);
    if (!os) fail(ErrorKind::kIo, "cannot write " + opts.out_path);
    write_triplets(build.triplets, os);
  }

  std::vector<int> bin_histogram(static_cast<size_t>(sopts.scheme.bin_count()), 0);
  for (const auto& t : build.triplets) ++bin_histogram[static_cast<size_t>(t.bin)];

  json result;
  result["n_triplets"] = build.triplets.size();
  result["bin_histogram"] = bin_histogram;
  result["skip"] = {{"anchors", build.skip.total_anchors},
                    {"anchors_without_positive", build.skip.anchors_without_positive},
                    {"pairs", build.skip.total_pairs},
                    {"pairs_without_negative", build.skip.pairs_without_negative},
                    {"pair_bin_gaps", build.skip.pair_bin_gaps}};
  manifest.finish(result);

  log << "build-triplets: " << build.triplets.size() << " triplets -> " << opts.out_path << "\n";
  log << "  bins (0 = hardest):";
  for (size_t b = 0; b < bin_histogram.size(); ++b) log << " " << b << "=" << bin_histogram[b];
  log << "\n  anchors=" << build.skip.total_anchors
      << " no-positive=" << build.skip.anchors_without_positive
      << " pairs=" << build.skip.total_pairs
      << " no-negative=" << build.skip.pairs_without_negative << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
  int stage = 1;
  std::string corpus_dir;
  std::string features_path;
  std::string config_path;
  std::string triplets_path;
  std::string stage1_ckpt;
  std::string strategy;
  std::string scheme;
  std::string align_mode;
  double margin = -1.0;   // <0 = not set on the command line
  double lambda = -1.0;
  int64_t seed = -1;
  std::string out_ckpt;
};

inline int cmd_train(const TrainOptions& opts, std::ostream& log = std::cout) {
  if (opts.stage != 1 && opts.stage != 2) {
    fail(ErrorKind::kValidation, "train: --stage must be 1 or 2");
  }
  TrainConfig cfg;
  if (!opts.config_path.empty()) cfg = train_config_from_json(load_json_file(opts.config_path));
  if (!opts.strategy.empty()) cfg.strategy = parse_strategy(opts.strategy);
  if (!opts.scheme.empty()) cfg.scheme_name = opts.scheme;
  if (!opts.align_mode.empty()) cfg.align_mode = parse_alignment_mode(opts.align_mode);
  if (opts.margin >= 0) cfg.loss.margin = opts.margin;
  if (opts.lambda >= 0) cfg.loss.lambda = opts.lambda;
  if (opts.seed >= 0) cfg.seed = static_cast<uint64_t>(opts.seed);

  PhonemeFeatureTable storage;
  const PhonemeFeatureTable& table = table_for(opts.features_path, storage);
  Corpus corpus = load_manifest(opts.corpus_dir);
  SplitResult split = split_corpus(corpus);

  RunManifestWriter manifest("train", opts.out_ckpt + ".manifest.json");
  manifest.doc["seed"] = cfg.seed;
  manifest.doc["stage"] = opts.stage;
  manifest.doc["config"] = train_config_to_json(cfg);
  manifest.doc["inputs"] = {opts.corpus_dir, opts.triplets_path, opts.stage1_ckpt};
  manifest.doc["outputs"] = {opts.out_ckpt};

  TrainResult result;
  if (opts.stage == 1) {
    result = train_stage1(corpus, split, table, cfg);
  } else {
    if (opts.stage1_ckpt.empty()) {
      fail(ErrorKind::kValidation, "train --stage 2 requires --stage1-ckpt");
    }
    if (opts.triplets_path.empty()) {
      fail(ErrorKind::kValidation, "train --stage 2 requires --triplets");
    }
    Checkpoint stage1 = load_checkpoint(opts.stage1_ckpt);
    std::ifstream is(opts.triplets_path);
    if (!is) fail(ErrorKind::kIo, "cannot open triplets " + opts.triplets_path);
    std::vector<TripletSpec> triplets =
        read_triplets(is, corpus, table, make_scheme(cfg.scheme_name));
    CurriculumSchedule schedule =
        make_schedule(cfg.strategy, make_scheme(cfg.scheme_name), cfg.epoch_triplets);
    log << schedule_dump(schedule);
    result = train_stage2(stage1, corpus, split, table, triplets, cfg);
  }

  save_checkpoint(result.checkpoint, opts.out_ckpt);
  {
    std::ofstream os(opts.out_ckpt + ".loss.csv");
    write_loss_curve_csv(result.curve, os);
  }
  if (!result.phases.empty()) {
    std::ofstream os(opts.out_ckpt + ".phases.csv");
    os << "epoch,phase_index,phase,n_triplets,with_replacement,skipped,l_ctc,l_triplet,l_total\n";
    for (const auto& r : result.phases) {
      os << r.epoch << ',' << r.phase_index << ',' << '"' << r.phase << '"' << ',' << r.n_triplets
         << ',' << (r.with_replacement ? 1 : 0) << ',' << r.skipped << ',' << r.l_ctc << ','
         << r.l_triplet << ',' << r.l_total << '\n';
    }
  }

  json res;
  res["valid_wer_per_epoch"] = result.valid_wer_per_epoch;
  res["skipped_triplets"] = result.skipped_triplets;
  res["checkpoint"] = opts.out_ckpt;
  manifest.finish(res);

  log << "train stage " << opts.stage << ": checkpoint -> " << opts.out_ckpt << "\n";
  if (!result.valid_wer_per_epoch.empty()) {
    log << "  final valid WER " << result.valid_wer_per_epoch.back() << ", best "
        << result.checkpoint.state->best_metric << "\n";
  }
  if (opts.stage == 2) {
    log << "  skipped triplets: " << result.skipped_triplets << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalCmdOptions {
  std::string ckpt;
  std::string corpus_dir;
  std::string features_path;
  std::string split = "TEST";
  std::string export_embeddings;
  std::string report_csv;
};

inline int cmd_eval(const EvalCmdOptions& opts, std::ostream& log = std::cout) {
  PhonemeFeatureTable storage;
  const PhonemeFeatureTable& table = table_for(opts.features_path, storage);
  Corpus corpus = load_manifest(opts.corpus_dir);
  SplitResult split = split_corpus(corpus);

  const std::vector<int>* indices = nullptr;
  if (opts.split == "TEST") indices = &split.test;
  else if (opts.split == "CTEST") indices = &split.ctest;
  else fail(ErrorKind::kValidation, "eval: --split must be TEST or CTEST");

  Checkpoint ckpt = load_checkpoint(opts.ckpt);
  if (ckpt.params.cfg.vocab != table.size() || ckpt.params.cfg.f_ac != corpus.feature_dim) {
    fail(ErrorKind::kValidation, "checkpoint does not match corpus/feature table");
  }

  RunManifestWriter manifest("eval", opts.ckpt + ".eval_manifest.json");
  manifest.doc["inputs"] = {opts.ckpt, opts.corpus_dir};
  manifest.doc["config"] = {{"split", opts.split}};

  GroupReport report = evaluate_model(ckpt.params, corpus, *indices, table);
  log << "eval split " << opts.split << " (" << indices->size() << " utterances)\n";
  log << format_group_report(report);

  if (!opts.report_csv.empty()) {
    std::ofstream os(opts.report_csv);
    if (!os) fail(ErrorKind::kIo, "cannot write " + opts.report_csv);
    write_group_report_csv(report, os);
  }
  if (!opts.export_embeddings.empty()) {
    auto embs = extract_corpus_embeddings(ckpt.params, corpus, *indices, table);
    std::ofstream os(opts.export_embeddings);
    if (!os) fail(ErrorKind::kIo, "cannot write " + opts.export_embeddings);
    write_embedding_csv_header(os, ckpt.params.cfg.embed);
    for (const auto& e : embs) {
      write_embedding_csv_row(os, e.utterance_id, e.phoneme, e.group, e.vec);
    }
    log << "exported " << embs.size() << " embeddings -> " << opts.export_embeddings << "\n";
  }

  json res;
  res["all_wer"] = report.all_wer;
  res["all_wer_unweighted"] = report.all_wer_unweighted;
  res["all_per"] = report.all_per;
  for (const auto& [g, row] : report.rows) {
    res["per_group"][to_string(g)] = {{"wer", row.wer}, {"per", row.per}, {"n", row.n_utterances}};
  }
  manifest.finish(res);
  return 0;
}

}  // namespace phoncl::cli
