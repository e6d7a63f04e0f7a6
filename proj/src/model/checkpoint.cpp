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

#include "model/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace nfad {

namespace {

constexpr char kMagic[4] = {'N', 'F', 'A', 'D'};
constexpr uint32_t kVersion = 1;

void w_u32(std::ofstream& f, uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }
void w_u8(std::ofstream& f, uint8_t v) { f.write(reinterpret_cast<const char*>(&v), 1); }
void w_f64(std::ofstream& f, double v) { f.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t r_u32(std::ifstream& f, const char* field) {
  uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  if (!f) throw DataError(std::string("checkpoint: truncated field '") + field + "'");
  return v;
}
uint8_t r_u8(std::ifstream& f, const char* field) {
  uint8_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 1);
  if (!f) throw DataError(std::string("checkpoint: truncated field '") + field + "'");
  return v;
}
double r_f64(std::ifstream& f, const char* field) {
  double v = 0;
  f.read(reinterpret_cast<char*>(&v), 8);
  if (!f) throw DataError(std::string("checkpoint: truncated field '") + field + "'");
  return v;
}

void expect_u32(std::ifstream& f, uint32_t want, const char* field) {
  uint32_t got = r_u32(f, field);
  if (got != want)
    throw DataError("checkpoint: field '" + std::string(field) + "' mismatch: file has " +
                    std::to_string(got) + ", expected " + std::to_string(want));
}

void write_tensors(std::ofstream& f, const std::vector<std::string>& names,
                   const std::vector<const Tensor<float>*>& tensors) {
  w_u32(f, static_cast<uint32_t>(tensors.size()));
  for (size_t i = 0; i < tensors.size(); ++i) {
    const std::string& name = names[i];
    w_u32(f, static_cast<uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Tensor<float>& t = *tensors[i];
    w_u32(f, static_cast<uint32_t>(t.dims.size()));
    for (int d : t.dims) w_u32(f, static_cast<uint32_t>(d));
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
}

void read_tensors(std::ifstream& f, const std::vector<std::string>& names,
                  const std::vector<Tensor<float>*>& tensors) {
  uint32_t count = r_u32(f, "tensor count");
  if (count != tensors.size())
    throw DataError("checkpoint: field 'tensor count' mismatch: file has " +
                    std::to_string(count) + ", expected " +
                    std::to_string(tensors.size()));
  for (size_t i = 0; i < tensors.size(); ++i) {
    uint32_t name_len = r_u32(f, "tensor name length");
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    if (!f || name != names[i])
      throw DataError("checkpoint: tensor name mismatch: file has '" + name +
                      "', expected '" + names[i] + "'");
    Tensor<float>& t = *tensors[i];
    uint32_t ndim = r_u32(f, "tensor rank");
    if (ndim != t.dims.size())
      throw DataError("checkpoint: tensor '" + name + "' rank mismatch");
    for (size_t d = 0; d < ndim; ++d) {
      uint32_t e = r_u32(f, "tensor dim");
      if (static_cast<int>(e) != t.dims[d])
        throw DataError("checkpoint: tensor '" + name + "' dim " + std::to_string(d) +
                        " mismatch: file has " + std::to_string(e) + ", expected " +
                        std::to_string(t.dims[d]));
    }
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!f) throw DataError("checkpoint: truncated payload for tensor '" + name + "'");
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot open for writing: " + path);
  f.write(kMagic, 4);
  w_u32(f, kVersion);
  w_u32(f, static_cast<uint32_t>(ckpt.kind));
  if (ckpt.kind == Checkpoint::Kind::kGlow) {
    const GlowConfig& g = ckpt.glow.cfg;
    w_u32(f, static_cast<uint32_t>(g.n_blocks));
    w_u32(f, static_cast<uint32_t>(g.k_steps));
    w_u32(f, static_cast<uint32_t>(g.in_channels));
    w_u32(f, static_cast<uint32_t>(g.in_height));
    w_u32(f, static_cast<uint32_t>(g.in_width));
    w_u32(f, static_cast<uint32_t>(g.hidden_channels));
    w_u32(f, static_cast<uint32_t>(g.zd_channels()));  // latent partition
    w_u8(f, ckpt.glow.actnorm_ready() ? 1 : 0);
    w_u8(f, ckpt.prior.constrained ? 1 : 0);
    w_f64(f, ckpt.prior.k);
    w_f64(f, ckpt.stats.mean);
    w_f64(f, ckpt.stats.stddev);
    write_tensors(f, ckpt.glow.parameter_names(), ckpt.glow.parameters());
  } else {
    const VaeConfig& v = ckpt.vae.cfg;
    w_u32(f, static_cast<uint32_t>(v.input_dim));
    w_u32(f, static_cast<uint32_t>(v.hidden_dim));
    w_u32(f, static_cast<uint32_t>(v.latent_dim));
    w_f64(f, v.beta);
    w_f64(f, v.gamma);
    w_f64(f, v.k_vae);
    w_f64(f, ckpt.stats.mean);
    w_f64(f, ckpt.stats.stddev);
    write_tensors(f, ckpt.vae.parameter_names(), ckpt.vae.parameters());
  }
  if (!f) throw IoError("checkpoint: short write: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("checkpoint: field 'magic' mismatch (want NFAD): " + path);
  expect_u32(f, kVersion, "version");

  Checkpoint ckpt;
  uint32_t kind = r_u32(f, "kind");
  if (kind == static_cast<uint32_t>(Checkpoint::Kind::kGlow)) {
    ckpt.kind = Checkpoint::Kind::kGlow;
    GlowConfig g;
    g.n_blocks = static_cast<int>(r_u32(f, "n_blocks"));
    g.k_steps = static_cast<int>(r_u32(f, "k_steps"));
    g.in_channels = static_cast<int>(r_u32(f, "in_channels"));
    g.in_height = static_cast<int>(r_u32(f, "in_height"));
    g.in_width = static_cast<int>(r_u32(f, "in_width"));
    g.hidden_channels = static_cast<int>(r_u32(f, "hidden_channels"));
    uint32_t zd = r_u32(f, "zd_channels");
    ckpt.glow = GlowModel<float>::init(g, 0);
    if (zd != static_cast<uint32_t>(g.zd_channels()))
      throw DataError("checkpoint: field 'zd_channels' mismatch: file has " +
                      std::to_string(zd) + ", expected " +
                      std::to_string(g.zd_channels()));
    bool an_ready = r_u8(f, "actnorm_initialized") != 0;
    ckpt.prior.constrained = r_u8(f, "constrained") != 0;
    ckpt.prior.k = r_f64(f, "k");
    ckpt.stats.mean = r_f64(f, "normalizer mean");
    ckpt.stats.stddev = r_f64(f, "normalizer stddev");
    read_tensors(f, ckpt.glow.parameter_names(), ckpt.glow.parameters());
    if (an_ready) ckpt.glow.mark_actnorm_initialized();
  } else if (kind == static_cast<uint32_t>(Checkpoint::Kind::kVae)) {
    ckpt.kind = Checkpoint::Kind::kVae;
    VaeConfig v;
    v.input_dim = static_cast<int>(r_u32(f, "input_dim"));
    v.hidden_dim = static_cast<int>(r_u32(f, "hidden_dim"));
    v.latent_dim = static_cast<int>(r_u32(f, "latent_dim"));
    v.beta = r_f64(f, "beta");
    v.gamma = r_f64(f, "gamma");
    v.k_vae = r_f64(f, "k_vae");
    ckpt.stats.mean = r_f64(f, "normalizer mean");
    ckpt.stats.stddev = r_f64(f, "normalizer stddev");
    ckpt.vae = VaeModel<float>::init(v, 0);
    read_tensors(f, ckpt.vae.parameter_names(), ckpt.vae.parameters());
  } else {
    throw DataError("checkpoint: field 'kind' has unknown value " +
                    std::to_string(kind));
  }
  return ckpt;
}

}  // namespace nfad
