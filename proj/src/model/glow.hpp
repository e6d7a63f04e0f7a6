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

#ifndef NFAD_MODEL_GLOW_HPP
#define NFAD_MODEL_GLOW_HPP

#include <string>
#include <vector>

#include "ad/tape.hpp"

namespace nfad {

struct GlowConfig {
  int n_blocks = 3;  // 1 = single-scale, 3 = paper multi-scale
  int k_steps = 5;
  int in_channels = 1;
  int in_height = 128;
  int in_width = 64;
  int hidden_channels = 32;

  void validate() const;
  // Channel count inside block b (0-based), after that block's squeeze.
  int block_channels(int b) const;
  // Channels of z_d: half of the last block (the trailing half of its split).
  int zd_channels() const;
  int64_t input_numel() const {
    return static_cast<int64_t>(in_channels) * in_height * in_width;
  }
};

// Latent outputs as plain values, one sample per call (batch of 1) on the
// scoring path; model_inverse also accepts batched tensors.
template <typename S>
struct LatentBundle {
  std::vector<Tensor<S>> zc_parts;  // z_1c .. z_Nc, factored out per block
  Tensor<S> zd;                     // last-block domain latent
  double log_det = 0.0;             // accumulated over all steps, per sample
  int64_t zc_numel() const {
    int64_t n = 0;
    for (const Tensor<S>& t : zc_parts) n += t.numel();
    return n;
  }
};

// Glow: per block, squeeze -> K x (actnorm, invertible 1x1 conv, affine
// coupling) -> channel split. Blocks before the last pass the second half
// of the channels on; the last block splits into (z_Nc, z_d).
template <typename S>
class GlowModel {
 public:
  struct TapeOut {
    std::vector<typename Tape<S>::Id> zc;  // z_1c .. z_Nc
    typename Tape<S>::Id zd = -1;
    typename Tape<S>::Id log_det = -1;  // scalar node, summed over the batch
    std::vector<typename Tape<S>::Id> param_ids;  // parallel to parameters()
  };

  struct StepParams {
    Tensor<S> actnorm_logs, actnorm_bias;
    Tensor<S> invconv_w;
    Tensor<S> conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b;
    bool actnorm_initialized = false;
  };

  GlowConfig cfg;
  std::vector<std::vector<StepParams>> blocks;

  static GlowModel init(const GlowConfig& cfg, uint64_t seed);

  // Registers parameters on the tape (trainable when train=true) and builds
  // the forward graph. When init_actnorm is set, uninitialized actnorm
  // layers take their data-dependent initialization from this batch.
  TapeOut forward(Tape<S>& tape, typename Tape<S>::Id x, bool train,
                  bool init_actnorm = false);

  // Values-only forward for one sample; per-sample log_det.
  LatentBundle<S> forward_values(const Tensor<S>& x);

  // Exact inverse of the forward map (values only; batched bundles allowed).
  Tensor<S> inverse(const LatentBundle<S>& bundle) const;

  std::vector<Tensor<S>*> parameters();
  std::vector<const Tensor<S>*> parameters() const;
  std::vector<std::string> parameter_names() const;

  bool actnorm_ready() const;
  void mark_actnorm_initialized();

 private:
  typename Tape<S>::Id step_forward(Tape<S>& tape, typename Tape<S>::Id x,
                                    StepParams& step, bool train, bool init_actnorm,
                                    std::vector<typename Tape<S>::Id>& param_ids,
                                    typename Tape<S>::Id& log_det);
  Tensor<S> step_inverse(const Tensor<S>& y, const StepParams& step) const;
};

// sigmoid(x) composed from tanh: 0.5 + 0.5 * tanh(x / 2).
template <typename S>
typename Tape<S>::Id sigmoid_node(Tape<S>& tape, typename Tape<S>::Id x) {
  return tape.add_scalar(
      tape.scalar_mul(tape.tanh(tape.scalar_mul(x, S(0.5))), S(0.5)), S(0.5));
}

extern template class GlowModel<float>;
extern template class GlowModel<double>;

}  // namespace nfad

#endif  // NFAD_MODEL_GLOW_HPP
