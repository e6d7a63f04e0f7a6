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

#ifndef NFAD_MODEL_PRIOR_HPP
#define NFAD_MODEL_PRIOR_HPP

#include <vector>

#include "model/glow.hpp"

namespace nfad {

struct PriorConfig {
  bool constrained = true;  // z_d ~ N(k*v, 1); false trains everything at N(0,1)
  double k = 0.01;          // latent mean per mm/s

  void validate() const {
    if (constrained && k <= 0.0)
      throw ConfigError("prior: k must be positive when constrained");
  }
};

// Per-patch likelihood pieces, in nats. log_p_x = log_p_zc + log_p_zd +
// log_det always holds exactly; the invariant anomaly score is -log_p_zc.
struct ScoreBreakdown {
  double log_p_zc = 0.0;
  double log_p_zd = 0.0;
  double log_det = 0.0;
  double log_p_x = 0.0;
  double anomaly_score = 0.0;
};

// Sum over all entries of log N(z_i | mean, 1).
template <typename S>
double gaussian_logpdf(const Tensor<S>& z, double mean);

// Scores one sample's latents. zd_mean is the prior mean used for the
// z_d term (0 unconstrained, k*v or a plug-in estimate otherwise).
template <typename S>
ScoreBreakdown score_bundle(const LatentBundle<S>& bundle, double zd_mean);

// Per-patch velocity estimate mean(z_d)/k; clip estimate is the mean of
// per-patch estimates.
template <typename S>
double estimate_velocity_patch(const LatentBundle<S>& bundle, const PriorConfig& cfg);
double estimate_velocity_clip(const std::vector<double>& patch_estimates);

enum class ClipAggregate { kMean, kMax };
double clip_anomaly_score(const std::vector<double>& patch_scores,
                          ClipAggregate mode = ClipAggregate::kMean);

// Builds the scalar training loss node: mean per-sample negative
// log-likelihood -[log p(z_c) + log p(z_d | k v) + log_det] over the batch.
// `velocities` must have one entry per sample when constrained.
template <typename S>
typename Tape<S>::Id nll_loss(Tape<S>& tape, const typename GlowModel<S>::TapeOut& out,
                              const std::vector<double>& velocities,
                              const PriorConfig& cfg, int batch);

extern template double gaussian_logpdf<float>(const Tensor<float>&, double);
extern template double gaussian_logpdf<double>(const Tensor<double>&, double);
extern template ScoreBreakdown score_bundle<float>(const LatentBundle<float>&, double);
extern template ScoreBreakdown score_bundle<double>(const LatentBundle<double>&, double);
extern template double estimate_velocity_patch<float>(const LatentBundle<float>&,
                                                      const PriorConfig&);
extern template double estimate_velocity_patch<double>(const LatentBundle<double>&,
                                                       const PriorConfig&);
extern template Tape<float>::Id nll_loss<float>(Tape<float>&,
                                                const GlowModel<float>::TapeOut&,
                                                const std::vector<double>&,
                                                const PriorConfig&, int);
extern template Tape<double>::Id nll_loss<double>(Tape<double>&,
                                                  const GlowModel<double>::TapeOut&,
                                                  const std::vector<double>&,
                                                  const PriorConfig&, int);

}  // namespace nfad

#endif  // NFAD_MODEL_PRIOR_HPP
