// Copyright 2026 the nfad authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. All work happens behind the C API in libnfad;
// this binary only assembles configuration JSON from presets, an optional
// config file and per-command flags.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nfad.h"

using nlohmann::json;

namespace {

struct SessionDeleter {
  void operator()(nfad_session* s) const { nfad_session_free(s); }
};

json load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CLI::ValidationError("--config", "cannot open " + path);
  json doc;
  try {
    f >> doc;
  } catch (const json::parse_error& e) {
    throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
  }
  return doc;
}

int run(nfad_session* session, const std::string& command, const json& cfg) {
  int rc = nfad_run(session, command.c_str(), cfg.dump().c_str());
  if (rc != NFAD_OK) {
    std::cerr << "nfad " << command << ": " << nfad_last_error(session) << "\n";
    return rc;
  }
  // Manifest of produced files, as the final output line.
  std::cout << nfad_artifacts_json(session) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nfad: anomalous machine-sound detection with a "
               "velocity-conditioned normalizing flow"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand name

  std::string preset = "desk";
  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
  app.add_option("--preset", preset, "Configuration preset: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--config", config_path, "JSON config file merged over the preset");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Master seed");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic dataset");
  std::optional<int> train_clips, test_clips;
  synth->add_option("--train-clips", train_clips, "Clips per training parameter set");
  synth->add_option("--test-clips", test_clips, "Clips per test velocity and class");

  // featurize
  auto* featurize =
      app.add_subcommand("featurize", "Extract log-mel patches into feature caches");
  std::string data_dir;
  featurize->add_option("--data", data_dir, "Dataset directory (with manifest.json)")
      ->required();

  // train
  auto* train = app.add_subcommand("train", "Train a flow or VAE model");
  std::string features_dir, model = "glow-multi";
  bool constrained = false;
  std::optional<int> epochs, batch_size, checkpoint_interval;
  std::optional<double> lr, gamma, grad_clip, val_fraction, prior_k;
  train->add_option("--features-dir", features_dir, "Directory with train.nfft")
      ->required();
  train->add_option("--model", model, "glow-single, glow-multi or vae")
      ->check(CLI::IsMember({"glow-single", "glow-multi", "vae"}));
  train->add_flag("--constrained", constrained,
                  "Condition z_d on velocity (proposed method)");
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--batch-size", batch_size, "Mini-batch size");
  train->add_option("--lr", lr, "Adam learning rate");
  train->add_option("--gamma", gamma, "VAE supervision weight (0 disables)");
  train->add_option("--k", prior_k, "Latent mean per mm/s for the conditioned prior");
  train->add_option("--checkpoint-interval", checkpoint_interval,
                    "Save every N epochs in addition to the end");
  train->add_option("--grad-clip", grad_clip, "Global gradient-norm clip (0 = off)");
  train->add_option("--val-fraction", val_fraction,
                    "Held-out monitoring fraction (0 = off)");

  // score
  auto* score = app.add_subcommand("score", "Score a feature cache with a checkpoint");
  std::string ckpt_path, features_path, aggregate;
  score->add_option("--checkpoint", ckpt_path, "Model checkpoint (.nfad)")->required();
  score->add_option("--features", features_path, "Feature cache (.nfft)")->required();
  score->add_option("--aggregate", aggregate, "Clip aggregation: mean or max")
      ->check(CLI::IsMember({"mean", "max"}));

  // eval
  auto* eval =
      app.add_subcommand("eval", "Method-comparison AUC table over checkpoints");
  std::string checkpoints_dir, manifest_path;
  eval->add_option("--checkpoints-dir", checkpoints_dir,
                   "Directory with the trained checkpoints")
      ->required();
  eval->add_option("--features", features_path, "Test feature cache")->required();
  eval->add_option("--manifest", manifest_path, "Dataset manifest.json")->required();

  // velocity
  auto* velocity =
      app.add_subcommand("velocity", "Velocity-estimation report (unseen velocities)");
  velocity->add_option("--checkpoint", ckpt_path, "Conditioned checkpoint")->required();
  velocity->add_option("--features", features_path, "Test feature cache")->required();
  velocity->add_option("--manifest", manifest_path, "Dataset manifest.json")
      ->required();

  // report
  auto* report =
      app.add_subcommand("report", "Per-velocity score summaries from a scores CSV");
  std::string scores_path, column = "invariant";
  report->add_option("--scores", scores_path, "Scores CSV from `score` or `eval`")
      ->required();
  report->add_option("--column", column, "Score column: invariant or full_nll")
      ->check(CLI::IsMember({"invariant", "full_nll"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message and usage hint
    return 1;     // validation failure
  }

  std::unique_ptr<nfad_session, SessionDeleter> session(nfad_session_new());
  if (!session) {
    std::cerr << "nfad: cannot create session\n";
    return 2;
  }

  const char* preset_text = nfad_preset_json(session.get(), preset.c_str());
  if (!preset_text) {
    std::cerr << "nfad: " << nfad_last_error(session.get()) << "\n";
    return 1;
  }
  json cfg = json::parse(preset_text);
  if (!config_path.empty()) cfg.merge_patch(load_config_file(config_path));
  if (!out_dir.empty()) cfg["out"] = out_dir;
  if (seed) {
    cfg["seed"] = *seed;
    cfg["train"]["seed"] = *seed;
  }

  std::string command;
  if (*synth) {
    command = "synth";
    if (train_clips) cfg["synth"]["train_clips_per_set"] = *train_clips;
    if (test_clips) cfg["synth"]["test_clips_per_set"] = *test_clips;
  } else if (*featurize) {
    command = "featurize";
    cfg["data"] = data_dir;
  } else if (*train) {
    command = "train";
    cfg["features_dir"] = features_dir;
    cfg["train"]["model"] = model;
    cfg["train"]["constrained"] = constrained;
    if (epochs) cfg["train"]["epochs"] = *epochs;
    if (batch_size) cfg["train"]["batch_size"] = *batch_size;
    if (lr) cfg["train"]["lr"] = *lr;
    if (gamma) cfg["train"]["vae"]["gamma"] = *gamma;
    if (prior_k) cfg["prior"]["k"] = *prior_k;
    if (checkpoint_interval) cfg["train"]["checkpoint_interval"] = *checkpoint_interval;
    if (grad_clip) cfg["train"]["grad_clip_norm"] = *grad_clip;
    if (val_fraction) cfg["train"]["val_fraction"] = *val_fraction;
  } else if (*score) {
    command = "score";
    cfg["checkpoint"] = ckpt_path;
    cfg["features"] = features_path;
    if (!aggregate.empty()) cfg["score"]["aggregate"] = aggregate;
  } else if (*eval) {
    command = "eval";
    cfg["checkpoints_dir"] = checkpoints_dir;
    cfg["features"] = features_path;
    cfg["manifest"] = manifest_path;
  } else if (*velocity) {
    command = "velocity";
    cfg["checkpoint"] = ckpt_path;
    cfg["features"] = features_path;
    cfg["manifest"] = manifest_path;
  } else if (*report) {
    command = "report";
    cfg["scores"] = scores_path;
    cfg["column"] = column;
  }

  if (!cfg.contains("out") || cfg["out"].get<std::string>().empty()) {
    std::cerr << "nfad " << command << ": --out is required\n";
    return 1;
  }
  return run(session.get(), command, cfg);
}
