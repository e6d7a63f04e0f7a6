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

#ifndef NFAD_MODEL_CHECKPOINT_HPP
#define NFAD_MODEL_CHECKPOINT_HPP

#include <string>

#include "feat/features.hpp"
#include "model/glow.hpp"
#include "model/prior.hpp"
#include "model/vae.hpp"

namespace nfad {

// One trained model plus everything needed to score with it. Serialized as
// a binary container: magic "NFAD", version u32, architecture descriptor
// (with a distinct tag per model kind), prior config, normalizer stats, then
// named f32 tensors. Loading rejects any descriptor mismatch by field name.
struct Checkpoint {
  enum class Kind : uint32_t { kGlow = 1, kVae = 2 };

  Kind kind = Kind::kGlow;
  GlowModel<float> glow;  // valid when kind == kGlow
  VaeModel<float> vae;    // valid when kind == kVae
  PriorConfig prior;      // meaningful for glow checkpoints
  NormalizerStats stats;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nfad

#endif  // NFAD_MODEL_CHECKPOINT_HPP
