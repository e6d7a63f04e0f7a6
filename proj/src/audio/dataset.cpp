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

#include "audio/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "audio/wav.hpp"
#include "common.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace nfad {

namespace {

std::string clip_name(const std::string& split, double velocity, double distance,
                      int index) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s_v%04d_d%03d_%02d.wav", split.c_str(),
                static_cast<int>(velocity), static_cast<int>(distance), index);
  return buf;
}

}  // namespace

DatasetManifest make_dataset(const std::string& out_dir, const SynthConfig& cfg) {
  if (cfg.train_velocities.empty() || cfg.test_velocities.empty())
    throw ConfigError("make_dataset: velocity list must not be empty");
  if (cfg.train_clips_per_set <= 0 || cfg.test_clips_per_set <= 0)
    throw ConfigError("make_dataset: clips per parameter set must be positive");
  if (cfg.train_distances.empty())
    throw ConfigError("make_dataset: distance list must not be empty");

  fs::path clips_dir = fs::path(out_dir) / "clips";
  std::error_code ec;
  fs::create_directories(clips_dir, ec);
  if (ec) throw IoError("make_dataset: cannot create " + clips_dir.string());

  DatasetManifest manifest;
  uint64_t counter = 0;
  auto push = [&](double v, double d, bool anomalous, const std::string& split) {
    ManifestEntry e;
    e.params.velocity = v;
    e.params.distance = d;
    e.params.anomalous = anomalous;
    e.params.seed = mix_seed(cfg.seed, counter);
    e.split = split;
    e.path = "clips/" + clip_name(split, v, d, static_cast<int>(counter));
    ++counter;
    manifest.entries.push_back(std::move(e));
  };

  for (double v : cfg.train_velocities)
    for (double d : cfg.train_distances)
      for (int i = 0; i < cfg.train_clips_per_set; ++i) push(v, d, false, "train");
  for (double v : cfg.test_velocities)
    for (int i = 0; i < cfg.test_clips_per_set; ++i)
      push(v, cfg.test_distance, false, "test-normal");
  for (double v : cfg.test_velocities)
    for (int i = 0; i < cfg.test_clips_per_set; ++i)
      push(v, cfg.test_distance, true, "test-anomalous");

  // Per-file synthesis is independent; order of file writes does not matter.
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(manifest.entries.size()); ++i) {
    const ManifestEntry& e = manifest.entries[static_cast<size_t>(i)];
    WaveformClip clip = synth_clip(e.params);
    WavData wav;
    wav.samples = std::move(clip.samples);
    wav.sample_rate = clip.sample_rate;
    write_wav(wav, (fs::path(out_dir) / e.path).string());
  }

  std::set<double> seen(cfg.train_velocities.begin(), cfg.train_velocities.end());
  manifest.seen_velocities.assign(seen.begin(), seen.end());
  for (double v : cfg.test_velocities)
    if (!seen.count(v)) manifest.unseen_velocities.push_back(v);
  std::sort(manifest.unseen_velocities.begin(), manifest.unseen_velocities.end());
  manifest.unseen_velocities.erase(std::unique(manifest.unseen_velocities.begin(),
                                               manifest.unseen_velocities.end()),
                                   manifest.unseen_velocities.end());

  write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  json doc;
  doc["seen_velocities"] = manifest.seen_velocities;
  doc["unseen_velocities"] = manifest.unseen_velocities;
  doc["synthesis"] = {
      {"sliding_band_center_hz", "500 + 8*velocity"},
      {"distance_effect",
       "carriage-pass period = 2*distance/velocity seconds (modeling choice; "
       "distance only modulates transient rate)"},
      {"anomaly", "velocity-independent 16 Hz rattle at 7.7 kHz"},
  };
  doc["entries"] = json::array();
  for (const ManifestEntry& e : manifest.entries) {
    doc["entries"].push_back({{"path", e.path},
                              {"velocity_mm_s", e.params.velocity},
                              {"distance_mm", e.params.distance},
                              {"anomalous", e.params.anomalous},
                              {"split", e.split},
                              {"seed", e.params.seed}});
  }
  std::ofstream f(path);
  if (!f) throw IoError("write_manifest: cannot open " + path);
  f << doc.dump(2) << "\n";
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_manifest: cannot open " + path);
  json doc;
  try {
    f >> doc;
  } catch (const json::parse_error& e) {
    throw DataError("read_manifest: " + std::string(e.what()));
  }
  DatasetManifest manifest;
  try {
    manifest.seen_velocities = doc.at("seen_velocities").get<std::vector<double>>();
    manifest.unseen_velocities =
        doc.at("unseen_velocities").get<std::vector<double>>();
    for (const json& j : doc.at("entries")) {
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.params.velocity = j.at("velocity_mm_s").get<double>();
      e.params.distance = j.at("distance_mm").get<double>();
      e.params.anomalous = j.at("anomalous").get<bool>();
      e.params.seed = j.at("seed").get<uint64_t>();
      e.split = j.at("split").get<std::string>();
      manifest.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError("read_manifest: missing or ill-typed field: " +
                    std::string(e.what()));
  }
  return manifest;
}

}  // namespace nfad
