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

#ifndef NFAD_RUN_TRAINER_HPP
#define NFAD_RUN_TRAINER_HPP

#include <functional>
#include <string>
#include <vector>

#include "feat/cache.hpp"
#include "model/checkpoint.hpp"

namespace nfad {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 128;
  double lr = 1e-4;
  uint64_t seed = 0;
  int checkpoint_interval = 0;    // 0: only the final checkpoint
  bool nan_guard = true;          // abort on non-finite loss
  double grad_clip_norm = 0.0;    // 0: off; > 0 clips the global gradient norm
  double val_fraction = 0.0;      // optional held-out monitoring split

  void validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (lr <= 0.0) throw ConfigError("train: lr must be positive");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
      throw ConfigError("train: val_fraction must be in [0, 1)");
  }
};

struct LossRow {
  int epoch = 0;
  std::string term;
  double value = 0.0;
};

struct TrainResult {
  std::vector<LossRow> loss_log;
  double first_epoch_loss = 0.0;
  double final_epoch_loss = 0.0;
};

// Flattened training patches: data is count x (n_mels * n_frames), already
// standardized; one velocity per patch.
struct PatchSet {
  int n_mels = 0;
  int n_frames = 0;
  size_t count = 0;
  std::vector<float> data;
  std::vector<double> velocities;

  size_t patch_dim() const { return static_cast<size_t>(n_mels) * n_frames; }
};

PatchSet build_patch_set(const std::vector<ClipFeatures>& clips,
                         const NormalizerStats& stats);

using EpochCallback = std::function<void(int epoch)>;

// Seeded-shuffle mini-batch loops. Both are deterministic given
// (seed, config, dataset): two identical runs produce bit-identical
// parameters.
TrainResult train_flow(GlowModel<float>& model, const PatchSet& train_set,
                       const PriorConfig& prior, const TrainConfig& cfg,
                       const EpochCallback& on_epoch = nullptr);

TrainResult train_vae(VaeModel<float>& model, const PatchSet& train_set,
                      const TrainConfig& cfg, const EpochCallback& on_epoch = nullptr);

void write_loss_log(const std::vector<LossRow>& log, const std::string& path);

}  // namespace nfad

#endif  // NFAD_RUN_TRAINER_HPP
