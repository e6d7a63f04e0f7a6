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

#include "feat/cache.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "common.hpp"

namespace nfad {

namespace {

constexpr char kMagic[4] = {'N', 'F', 'F', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ofstream& f, uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t read_u32(std::ifstream& f, const char* field) {
  uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  if (!f) throw DataError(std::string("feature cache: truncated ") + field);
  return v;
}

}  // namespace

void write_feature_cache(const std::vector<ClipFeatures>& clips,
                         const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("feature cache: cannot open for writing: " + path);
  f.write(kMagic, 4);
  write_u32(f, kVersion);
  write_u32(f, static_cast<uint32_t>(clips.size()));
  for (const ClipFeatures& c : clips) {
    write_u32(f, static_cast<uint32_t>(c.clip_id.size()));
    f.write(c.clip_id.data(), static_cast<std::streamsize>(c.clip_id.size()));
    f.write(reinterpret_cast<const char*>(&c.velocity), 4);
    uint8_t anon = c.anomalous ? 1 : 0;
    f.write(reinterpret_cast<const char*>(&anon), 1);
    write_u32(f, static_cast<uint32_t>(c.patches.size()));
    write_u32(f, static_cast<uint32_t>(c.n_mels));
    write_u32(f, static_cast<uint32_t>(c.patch_frames));
    for (const std::vector<float>& p : c.patches)
      f.write(reinterpret_cast<const char*>(p.data()),
              static_cast<std::streamsize>(p.size() * sizeof(float)));
  }
  if (!f) throw IoError("feature cache: short write: " + path);
}

std::vector<ClipFeatures> read_feature_cache(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("feature cache: cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("feature cache: bad magic (want NFFT): " + path);
  uint32_t version = read_u32(f, "version");
  if (version != kVersion)
    throw DataError("feature cache: unsupported version " + std::to_string(version) +
                    " (expected " + std::to_string(kVersion) + ")");
  uint32_t n_clips = read_u32(f, "clip count");
  std::vector<ClipFeatures> clips;
  clips.reserve(n_clips);
  for (uint32_t i = 0; i < n_clips; ++i) {
    ClipFeatures c;
    uint32_t id_len = read_u32(f, "id length");
    c.clip_id.resize(id_len);
    f.read(c.clip_id.data(), id_len);
    f.read(reinterpret_cast<char*>(&c.velocity), 4);
    uint8_t anon = 0;
    f.read(reinterpret_cast<char*>(&anon), 1);
    if (!f) throw DataError("feature cache: truncated clip header");
    c.anomalous = anon != 0;
    uint32_t n_patches = read_u32(f, "patch count");
    c.n_mels = static_cast<int>(read_u32(f, "n_mels"));
    c.patch_frames = static_cast<int>(read_u32(f, "patch_frames"));
    size_t patch_len = static_cast<size_t>(c.n_mels) * c.patch_frames;
    c.patches.assign(n_patches, std::vector<float>(patch_len));
    for (std::vector<float>& p : c.patches) {
      f.read(reinterpret_cast<char*>(p.data()),
             static_cast<std::streamsize>(patch_len * sizeof(float)));
      if (!f) throw DataError("feature cache: truncated patch payload");
    }
    clips.push_back(std::move(c));
  }
  return clips;
}

}  // namespace nfad
