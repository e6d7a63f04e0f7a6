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

#include "model/prior.hpp"

#include <algorithm>
#include <cmath>

namespace nfad {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2*pi)
}

template <typename S>
double gaussian_logpdf(const Tensor<S>& z, double mean) {
  double acc = 0.0;
  for (S v : z.data) {
    double d = static_cast<double>(v) - mean;
    acc += -0.5 * d * d;
  }
  return acc - 0.5 * kLog2Pi * static_cast<double>(z.numel());
}

template <typename S>
ScoreBreakdown score_bundle(const LatentBundle<S>& bundle, double zd_mean) {
  ScoreBreakdown s;
  for (const Tensor<S>& zc : bundle.zc_parts) s.log_p_zc += gaussian_logpdf(zc, 0.0);
  s.log_p_zd = gaussian_logpdf(bundle.zd, zd_mean);
  s.log_det = bundle.log_det;
  s.log_p_x = s.log_p_zc + s.log_p_zd + s.log_det;
  s.anomaly_score = -s.log_p_zc;
  return s;
}

template <typename S>
double estimate_velocity_patch(const LatentBundle<S>& bundle, const PriorConfig& cfg) {
  if (!cfg.constrained || cfg.k == 0.0)
    throw ContractError("estimate_velocity: requires a constrained prior with k > 0");
  double acc = 0.0;
  for (S v : bundle.zd.data) acc += static_cast<double>(v);
  return acc / (static_cast<double>(bundle.zd.numel()) * cfg.k);
}

double estimate_velocity_clip(const std::vector<double>& patch_estimates) {
  if (patch_estimates.empty())
    throw ContractError("estimate_velocity: no patch estimates");
  double acc = 0.0;
  for (double v : patch_estimates) acc += v;
  return acc / static_cast<double>(patch_estimates.size());
}

double clip_anomaly_score(const std::vector<double>& patch_scores,
                          ClipAggregate mode) {
  if (patch_scores.empty())
    throw ContractError("clip_anomaly_score: no patch scores");
  if (mode == ClipAggregate::kMax)
    return *std::max_element(patch_scores.begin(), patch_scores.end());
  double acc = 0.0;
  for (double v : patch_scores) acc += v;
  return acc / static_cast<double>(patch_scores.size());
}

template <typename S>
typename Tape<S>::Id nll_loss(Tape<S>& tape, const typename GlowModel<S>::TapeOut& out,
                              const std::vector<double>& velocities,
                              const PriorConfig& cfg, int batch) {
  using Id = typename Tape<S>::Id;
  cfg.validate();
  if (cfg.constrained && static_cast<int>(velocities.size()) != batch)
    throw ContractError("nll_loss: constrained prior needs one velocity per sample");

  int64_t total_dims = 0;
  Id quad = -1;  // sum of 0.5*(z - mu)^2 over all latents and samples
  auto add_term = [&](Id term) { quad = quad < 0 ? term : tape.add(quad, term); };

  for (Id zc : out.zc) {
    add_term(tape.scalar_mul(tape.sum(tape.mul(zc, zc)), S(0.5)));
    total_dims += tape.val(zc).numel();
  }

  Id zd = out.zd;
  total_dims += tape.val(zd).numel();
  if (cfg.constrained) {
    // Per-sample means k*v broadcast over the z_d dims of that sample.
    const Tensor<S>& zd_val = tape.val(zd);
    Tensor<S> means(zd_val.dims);
    const size_t per = zd_val.data.size() / static_cast<size_t>(batch);
    for (int nb = 0; nb < batch; ++nb) {
      const S mu = static_cast<S>(cfg.k * velocities[static_cast<size_t>(nb)]);
      std::fill(means.data.begin() + static_cast<size_t>(nb) * per,
                means.data.begin() + static_cast<size_t>(nb + 1) * per, mu);
    }
    Id centered = tape.sub(zd, tape.constant(std::move(means)));
    add_term(tape.scalar_mul(tape.sum(tape.mul(centered, centered)), S(0.5)));
  } else {
    add_term(tape.scalar_mul(tape.sum(tape.mul(zd, zd)), S(0.5)));
  }

  // NLL = quad + D/2 ln(2pi) - log_det, averaged over the batch.
  Id nll = tape.sub(quad, out.log_det);
  nll = tape.add_scalar(
      nll, static_cast<S>(0.5 * kLog2Pi * static_cast<double>(total_dims)));
  return tape.scalar_mul(nll, S(1) / static_cast<S>(batch));
}

template double gaussian_logpdf<float>(const Tensor<float>&, double);
template double gaussian_logpdf<double>(const Tensor<double>&, double);
template ScoreBreakdown score_bundle<float>(const LatentBundle<float>&, double);
template ScoreBreakdown score_bundle<double>(const LatentBundle<double>&, double);
template double estimate_velocity_patch<float>(const LatentBundle<float>&,
                                               const PriorConfig&);
template double estimate_velocity_patch<double>(const LatentBundle<double>&,
                                                const PriorConfig&);
template Tape<float>::Id nll_loss<float>(Tape<float>&, const GlowModel<float>::TapeOut&,
                                         const std::vector<double>&, const PriorConfig&,
                                         int);
template Tape<double>::Id nll_loss<double>(Tape<double>&,
                                           const GlowModel<double>::TapeOut&,
                                           const std::vector<double>&,
                                           const PriorConfig&, int);

}  // namespace nfad
