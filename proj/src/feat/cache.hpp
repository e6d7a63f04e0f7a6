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

#ifndef NFAD_FEAT_CACHE_HPP
#define NFAD_FEAT_CACHE_HPP

#include <string>
#include <vector>

#include "feat/features.hpp"

namespace nfad {

// All patches of one clip, as stored in the feature cache.
struct ClipFeatures {
  std::string clip_id;
  float velocity = 0.0f;  // mm/s
  bool anomalous = false;
  int n_mels = 0;
  int patch_frames = 0;
  std::vector<std::vector<float>> patches;  // each n_mels * patch_frames
};

// Binary feature cache: magic "NFFT", version u32, then per-clip records
// (id length + bytes, velocity f32, anomalous u8, n_patches u32,
//  dims u32 x2, f32 little-endian payload).
void write_feature_cache(const std::vector<ClipFeatures>& clips,
                         const std::string& path);
std::vector<ClipFeatures> read_feature_cache(const std::string& path);

}  // namespace nfad

#endif  // NFAD_FEAT_CACHE_HPP
