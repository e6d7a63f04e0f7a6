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

#ifndef NFAD_MODEL_VAE_HPP
#define NFAD_MODEL_VAE_HPP

#include <string>
#include <vector>

#include "ad/tape.hpp"

namespace nfad {

struct VaeConfig {
  int input_dim = 128 * 64;
  int hidden_dim = 128;
  int latent_dim = 8;
  double beta = 1.0;
  double gamma = 0.01;   // 0 disables the supervised term
  double k_vae = 0.01;   // velocity scaling for the supervised target

  void validate() const {
    if (input_dim < 1 || hidden_dim < 1 || latent_dim < 1)
      throw ConfigError("vae: dimensions must be positive");
    if (beta < 0.0 || gamma < 0.0)
      throw ConfigError("vae: beta and gamma must be nonnegative");
  }
};

// Encoder: 4 relu layers of hidden_dim, then mean / log-variance heads of
// latent_dim. Decoder: 4 relu layers of hidden_dim, then a linear layer back
// to input_dim. Ten linear layers in total.
template <typename S>
class VaeModel {
 public:
  struct TapeOut {
    typename Tape<S>::Id reconstruction = -1;  // (B, input_dim)
    typename Tape<S>::Id mu = -1;              // (B, latent_dim)
    typename Tape<S>::Id logvar = -1;          // (B, latent_dim)
    std::vector<typename Tape<S>::Id> param_ids;
  };

  struct LossNodes {
    typename Tape<S>::Id recon = -1;  // mean squared error
    typename Tape<S>::Id kld = -1;    // mean closed-form KL divergence
    typename Tape<S>::Id sup = -1;    // mean squared supervision error (-1 if off)
    typename Tape<S>::Id total = -1;  // recon + beta*kld + gamma*sup
  };

  VaeConfig cfg;
  std::vector<Tensor<S>> weights;  // ordered; see parameter_names()
  std::vector<Tensor<S>> biases;

  static VaeModel init(const VaeConfig& cfg, uint64_t seed);

  // x: (B, input_dim); noise: (B, latent_dim), supplied by the caller so the
  // reparameterization z = mu + exp(logvar/2) * noise is deterministic.
  TapeOut forward(Tape<S>& tape, typename Tape<S>::Id x, typename Tape<S>::Id noise,
                  bool train);

  // velocities required when gamma > 0; the supervised term regresses
  // mu[:, 0] onto k_vae * v (posterior mean, not the sampled z).
  LossNodes loss(Tape<S>& tape, typename Tape<S>::Id x, const TapeOut& out,
                 const std::vector<double>& velocities);

  // Scoring with noise = 0: per-sample reconstruction MSE and KLD.
  struct Scores {
    std::vector<double> recon;
    std::vector<double> kld;
    std::vector<double> mu0;  // first latent, velocity readout
  };
  Scores score(const Tensor<S>& x_batch);

  std::vector<Tensor<S>*> parameters();
  std::vector<const Tensor<S>*> parameters() const;
  std::vector<std::string> parameter_names() const;
};

extern template class VaeModel<float>;
extern template class VaeModel<double>;

}  // namespace nfad

#endif  // NFAD_MODEL_VAE_HPP
