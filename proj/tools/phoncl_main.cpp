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

#include <CLI11.hpp>

#include "phoncl/cli.hpp"

int main(int argc, char** argv) {
  using namespace phoncl;
  CLI::App app{"phoneme-level contrastive learning toolkit"};
  app.require_subcommand(1);

  cli::GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic corpus");
  gen_cmd->add_option("--config", gen.config_path, "corpus config JSON");
  gen_cmd->add_option("--seed", gen.seed, "master seed")->default_val(1);
  gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();

  cli::DistanceMatrixOptions dm;
  auto* dm_cmd = app.add_subcommand("distance-matrix", "export the phoneme distance matrix");
  dm_cmd->add_option("--features", dm.features_path, "feature table TSV (default: builtin)");
  dm_cmd->add_option("--out", dm.out_csv, "output CSV")->required();
  dm_cmd->add_flag("--stats", dm.stats, "print mean/median/histogram");

  cli::BuildTripletsOptions bt;
  std::string caps = "5,5";
  auto* bt_cmd = app.add_subcommand("build-triplets", "construct the triplet universe");
  bt_cmd->add_option("--corpus", bt.corpus_dir, "corpus directory")->required();
  bt_cmd->add_option("--features", bt.features_path, "feature table TSV (default: builtin)");
  bt_cmd->add_option("--caps", caps, "max positives,per-pair negatives (default 5,5)");
  bt_cmd->add_option("--scheme", bt.scheme, "difficulty scheme 2LV|3LV|6LV")->default_val("3LV");
  bt_cmd->add_flag("--healthy-only", bt.healthy_only, "control-group-only pairing rule");
  bt_cmd->add_option("--seed", bt.seed, "sampling seed")->default_val(1);
  bt_cmd->add_option("--out", bt.out_path, "output triplet list")->required();

  cli::TrainOptions tr;
  auto* tr_cmd = app.add_subcommand("train", "run stage 1 (CTC) or stage 2 (CTC/PCL)");
  tr_cmd->add_option("--stage", tr.stage, "1 or 2")->required();
  tr_cmd->add_option("--corpus", tr.corpus_dir, "corpus directory")->required();
  tr_cmd->add_option("--features", tr.features_path, "feature table TSV (default: builtin)");
  tr_cmd->add_option("--config", tr.config_path, "train config JSON");
  tr_cmd->add_option("--triplets", tr.triplets_path, "triplet list (stage 2)");
  tr_cmd->add_option("--stage1-ckpt", tr.stage1_ckpt, "stage-1 checkpoint (stage 2)");
  tr_cmd->add_option("--strategy", tr.strategy, "R|G|P|PG|GP");
  tr_cmd->add_option("--scheme", tr.scheme, "2LV|3LV|6LV");
  tr_cmd->add_option("--align-mode", tr.align_mode, "timestamp|frozen|dynamic");
  tr_cmd->add_option("--margin", tr.margin, "triplet margin");
  tr_cmd->add_option("--lambda", tr.lambda, "triplet weight in the total loss");
  tr_cmd->add_option("--seed", tr.seed, "master seed");
  tr_cmd->add_option("--out", tr.out_ckpt, "output checkpoint")->required();

  cli::EvalCmdOptions ev;
  auto* ev_cmd = app.add_subcommand("eval", "score a checkpoint on TEST or CTEST");
  ev_cmd->add_option("--ckpt", ev.ckpt, "checkpoint path")->required();
  ev_cmd->add_option("--corpus", ev.corpus_dir, "corpus directory")->required();
  ev_cmd->add_option("--features", ev.features_path, "feature table TSV (default: builtin)");
  ev_cmd->add_option("--split", ev.split, "TEST or CTEST")->default_val("TEST");
  ev_cmd->add_option("--export-embeddings", ev.export_embeddings, "write phoneme embedding CSV");
  ev_cmd->add_option("--report-csv", ev.report_csv, "write the group report CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) return cli::cmd_gen_data(gen);
    if (dm_cmd->parsed()) return cli::cmd_distance_matrix(dm);
    if (bt_cmd->parsed()) {
      auto parts = split(caps, ',');
      if (parts.size() != 2) fail(ErrorKind::kValidation, "--caps wants 'P,N'");
      bt.cap_positives = std::stoi(parts[0]);
      bt.cap_negatives = std::stoi(parts[1]);
      return cli::cmd_build_triplets(bt);
    }
    if (tr_cmd->parsed()) return cli::cmd_train(tr);
    if (ev_cmd->parsed()) return cli::cmd_eval(ev);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
