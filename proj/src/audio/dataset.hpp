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

#ifndef NFAD_AUDIO_DATASET_HPP
#define NFAD_AUDIO_DATASET_HPP

#include <string>
#include <vector>

#include "audio/synth.hpp"

namespace nfad {

struct SynthConfig {
  std::vector<double> train_velocities = {100, 200, 300, 400, 500, 600, 700};
  std::vector<double> test_velocities = {50,  100, 150, 200, 250, 300, 350, 400,
                                         450, 500, 550, 600, 650, 700, 750};
  std::vector<double> train_distances = {100, 250, 500};
  double test_distance = 500;
  int train_clips_per_set = 10;
  int test_clips_per_set = 10;
  uint64_t seed = 0;
};

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  SlideRailParams params;
  std::string split;  // "train" | "test-normal" | "test-anomalous"
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<double> seen_velocities;    // velocities present in training
  std::vector<double> unseen_velocities;  // test-only velocities
};

// Synthesizes every clip of the configured layout into out_dir/clips/ and
// writes out_dir/manifest.json. Clips are a pure function of (config, seed).
DatasetManifest make_dataset(const std::string& out_dir, const SynthConfig& cfg);

void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

}  // namespace nfad

#endif  // NFAD_AUDIO_DATASET_HPP
