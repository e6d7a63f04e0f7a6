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

#ifndef NFAD_RUN_PIPELINE_HPP
#define NFAD_RUN_PIPELINE_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "model/checkpoint.hpp"
#include "run/evalkit.hpp"
#include "run/trainer.hpp"

namespace nfad {

struct Artifacts {
  std::vector<std::string> files;
  void add(const std::string& path) { files.push_back(path); }
  nlohmann::json to_json() const { return nlohmann::json{{"artifacts", files}}; }
};

// Baseline config documents. "desk" runs end to end on a workstation CPU;
// "paper" mirrors the full-scale experimental settings (1024/512 STFT,
// 128 mels, 64-frame patches, Glow 3x5 / 1x5, 1000 epochs, lr 1e-4,
// batch 128, beta 1, gamma 0.01).
nlohmann::json preset_config(const std::string& name);

// Subcommand entry points. Each validates its slice of the config, writes
// its artifacts plus a resolved-config snapshot under cfg["out"], and
// returns the produced file list.
Artifacts run_synth(const nlohmann::json& cfg);
Artifacts run_featurize(const nlohmann::json& cfg);
Artifacts run_train(const nlohmann::json& cfg);
Artifacts run_score(const nlohmann::json& cfg);
Artifacts run_eval(const nlohmann::json& cfg);
Artifacts run_velocity(const nlohmann::json& cfg);
Artifacts run_report(const nlohmann::json& cfg);

Artifacts run_command(const std::string& command, const nlohmann::json& cfg);

// Scoring helpers shared with the evaluation harness and tests.
std::vector<ScoredClip> score_clips_glow(const Checkpoint& ckpt,
                                         const std::vector<ClipFeatures>& clips,
                                         ClipAggregate aggregate);
std::vector<ScoredClip> score_clips_vae(const Checkpoint& ckpt,
                                        const std::vector<ClipFeatures>& clips,
                                        ClipAggregate aggregate);

// Velocity-estimation report over normal clips at the unseen velocities.
VelocityReport velocity_report(const Checkpoint& ckpt,
                               const std::vector<ClipFeatures>& clips,
                               const std::vector<double>& unseen_velocities);

// Canonical checkpoint stem for a trained configuration, e.g.
// glow_multi_cond, glow_single, vae, vae_sup.
std::string checkpoint_stem(const std::string& model, bool constrained, double gamma);

}  // namespace nfad

#endif  // NFAD_RUN_PIPELINE_HPP
