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

#include "model/vae.hpp"

#include <cmath>

namespace nfad {

namespace {

// Layer widths for the ten linear layers, in order: encoder 1-4, mean head,
// log-variance head, decoder 1-4 plus output layer.
template <typename S>
void layer_dims(const VaeConfig& cfg, std::vector<std::pair<int, int>>& dims) {
  const int d = cfg.input_dim, h = cfg.hidden_dim, z = cfg.latent_dim;
  dims = {{d, h}, {h, h}, {h, h}, {h, h},  // encoder trunk
          {h, z},                          // mean head
          {h, z},                          // log-variance head
          {z, h}, {h, h}, {h, h}, {h, h},  // decoder trunk
          {h, d}};                         // output layer
}

}  // namespace

template <typename S>
VaeModel<S> VaeModel<S>::init(const VaeConfig& cfg, uint64_t seed) {
  cfg.validate();
  VaeModel<S> model;
  model.cfg = cfg;
  Rng rng(mix_seed(seed, 0x7ae1));
  std::vector<std::pair<int, int>> dims;
  layer_dims<S>(cfg, dims);
  for (auto [in, out] : dims) {
    Tensor<S> w({in, out});
    const double std = std::sqrt(2.0 / in);  // He init for the relu trunk
    for (S& v : w.data) v = static_cast<S>(std * rng.normal());
    model.weights.push_back(std::move(w));
    model.biases.push_back(Tensor<S>::zeros({1, out}));
  }
  return model;
}

template <typename S>
std::vector<Tensor<S>*> VaeModel<S>::parameters() {
  std::vector<Tensor<S>*> out;
  for (size_t i = 0; i < weights.size(); ++i) {
    out.push_back(&weights[i]);
    out.push_back(&biases[i]);
  }
  return out;
}

template <typename S>
std::vector<const Tensor<S>*> VaeModel<S>::parameters() const {
  std::vector<const Tensor<S>*> out;
  for (size_t i = 0; i < weights.size(); ++i) {
    out.push_back(&weights[i]);
    out.push_back(&biases[i]);
  }
  return out;
}

template <typename S>
std::vector<std::string> VaeModel<S>::parameter_names() const {
  static const char* kNames[] = {"enc1", "enc2", "enc3", "enc4", "mu", "logvar",
                                 "dec1", "dec2", "dec3", "dec4", "out"};
  std::vector<std::string> out;
  for (size_t i = 0; i < weights.size(); ++i) {
    out.push_back(std::string(kNames[i]) + ".w");
    out.push_back(std::string(kNames[i]) + ".b");
  }
  return out;
}

template <typename S>
typename VaeModel<S>::TapeOut VaeModel<S>::forward(Tape<S>& tape,
                                                   typename Tape<S>::Id x,
                                                   typename Tape<S>::Id noise,
                                                   bool train) {
  using Id = typename Tape<S>::Id;
  const Tensor<S>& xv = tape.val(x);
  if (xv.dims.size() != 2 || xv.dims[1] != cfg.input_dim)
    throw ShapeError("vae: input " + xv.shape() + " does not match input_dim " +
                     std::to_string(cfg.input_dim));
  const int batch = xv.dims[0];
  const Tensor<S>& nv = tape.val(noise);
  if (nv.dims.size() != 2 || nv.dims[0] != batch || nv.dims[1] != cfg.latent_dim)
    throw ShapeError("vae: noise " + nv.shape() + " must be (batch, latent_dim)");

  TapeOut out;
  auto reg = [&](Tensor<S>& p) -> Id {
    p.requires_grad = train;
    Id id = tape.input(p);
    out.param_ids.push_back(id);
    return id;
  };
  // Bias add without broadcasting: ones(B,1) @ b(1,K) has the right shape.
  Id ones = tape.constant(Tensor<S>::full({batch, 1}, S(1)));
  auto linear = [&](Id input, size_t layer) -> Id {
    Id w = reg(weights[layer]);
    Id b = reg(biases[layer]);
    return tape.add(tape.matmul(input, w), tape.matmul(ones, b));
  };

  Id h = x;
  for (size_t l = 0; l < 4; ++l) h = tape.relu(linear(h, l));
  out.mu = linear(h, 4);
  out.logvar = linear(h, 5);

  // z = mu + exp(logvar / 2) * noise
  Id z = tape.add(out.mu,
                  tape.mul(tape.exp(tape.scalar_mul(out.logvar, S(0.5))), noise));
  Id d = z;
  for (size_t l = 6; l < 10; ++l) d = tape.relu(linear(d, l));
  out.reconstruction = linear(d, 10);
  return out;
}

template <typename S>
typename VaeModel<S>::LossNodes VaeModel<S>::loss(
    Tape<S>& tape, typename Tape<S>::Id x, const TapeOut& out,
    const std::vector<double>& velocities) {
  using Id = typename Tape<S>::Id;
  const int batch = tape.val(x).dims[0];
  LossNodes nodes;

  Id diff = tape.sub(out.reconstruction, x);
  nodes.recon = tape.mean(tape.mul(diff, diff));

  // KL(N(mu, sigma^2) || N(0,1)) = 0.5 * sum(mu^2 + sigma^2 - logvar - 1),
  // averaged over the batch.
  Id sigma_sq = tape.exp(out.logvar);
  Id kld_terms = tape.add_scalar(
      tape.sub(tape.add(tape.mul(out.mu, out.mu), sigma_sq), out.logvar), S(-1));
  nodes.kld = tape.scalar_mul(tape.sum(kld_terms), S(0.5) / static_cast<S>(batch));

  nodes.total = tape.add(nodes.recon, tape.scalar_mul(nodes.kld,
                                                      static_cast<S>(cfg.beta)));
  if (cfg.gamma > 0.0) {
    if (static_cast<int>(velocities.size()) != batch)
      throw ContractError("vae loss: gamma > 0 requires one velocity per sample");
    // mu[:, 0] via a selector column, compared to k_vae * v.
    Tensor<S> selector({cfg.latent_dim, 1});
    selector.data[0] = S(1);
    Id mu0 = tape.matmul(out.mu, tape.constant(std::move(selector)));
    Tensor<S> target({batch, 1});
    for (int i = 0; i < batch; ++i)
      target.data[static_cast<size_t>(i)] =
          static_cast<S>(cfg.k_vae * velocities[static_cast<size_t>(i)]);
    Id err = tape.sub(mu0, tape.constant(std::move(target)));
    nodes.sup = tape.mean(tape.mul(err, err));
    nodes.total =
        tape.add(nodes.total, tape.scalar_mul(nodes.sup, static_cast<S>(cfg.gamma)));
  }
  return nodes;
}

template <typename S>
typename VaeModel<S>::Scores VaeModel<S>::score(const Tensor<S>& x_batch) {
  if (x_batch.dims.size() != 2 || x_batch.dims[1] != cfg.input_dim)
    throw ShapeError("vae score: input " + x_batch.shape() +
                     " does not match input_dim");
  const int batch = x_batch.dims[0];
  Tape<S> tape;
  auto x = tape.constant(x_batch);
  auto noise = tape.constant(Tensor<S>::zeros({batch, cfg.latent_dim}));
  TapeOut out = forward(tape, x, noise, /*train=*/false);

  const Tensor<S>& rec = tape.val(out.reconstruction);
  const Tensor<S>& mu = tape.val(out.mu);
  const Tensor<S>& logvar = tape.val(out.logvar);
  Scores s;
  s.recon.resize(static_cast<size_t>(batch));
  s.kld.resize(static_cast<size_t>(batch));
  s.mu0.resize(static_cast<size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    double mse = 0.0;
    for (int j = 0; j < cfg.input_dim; ++j) {
      double d = static_cast<double>(
                     rec.data[static_cast<size_t>(i) * cfg.input_dim + j]) -
                 x_batch.data[static_cast<size_t>(i) * cfg.input_dim + j];
      mse += d * d;
    }
    s.recon[static_cast<size_t>(i)] = mse / cfg.input_dim;
    double kld = 0.0;
    for (int j = 0; j < cfg.latent_dim; ++j) {
      double m = mu.data[static_cast<size_t>(i) * cfg.latent_dim + j];
      double lv = logvar.data[static_cast<size_t>(i) * cfg.latent_dim + j];
      kld += 0.5 * (m * m + std::exp(lv) - lv - 1.0);
    }
    s.kld[static_cast<size_t>(i)] = kld;
    s.mu0[static_cast<size_t>(i)] = mu.data[static_cast<size_t>(i) * cfg.latent_dim];
  }
  return s;
}

template class VaeModel<float>;
template class VaeModel<double>;

}  // namespace nfad
