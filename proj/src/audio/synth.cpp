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

#include "audio/synth.hpp"

#include <cmath>
#include <string>

#include "common.hpp"

namespace nfad {

namespace {

constexpr int kSampleRate = 16000;
constexpr double kDuration = 10.0;
constexpr double kPi = 3.14159265358979323846;

// Amplitudes are fixed so the summed clip peaks below 0.9 before
// quantization; clipping would break determinism of band statistics.
constexpr double kPinkLevel = 0.004;      // background RMS
constexpr double kSlideLevel = 0.020;     // sliding band RMS at v = 750
constexpr double kTransientLevel = 0.05;  // carriage-pass burst peak
constexpr double kRattleLevel = 0.014;    // rattle ring peak
constexpr double kSlideQ = 10.0;
constexpr double kRattleRateHz = 16.0;
constexpr double kRattleToneHz = 7700.0;

// Paul Kellet's three-pole pink noise approximation.
void add_pink_noise(std::vector<double>& x, Rng& rng, double level) {
  std::vector<double> p(x.size());
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  double sumsq = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double w = rng.normal();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    p[i] = b0 + b1 + b2 + w * 0.1848;
    sumsq += p[i] * p[i];
  }
  double rms = std::sqrt(sumsq / static_cast<double>(x.size()));
  double g = level / rms;
  for (size_t i = 0; i < x.size(); ++i) x[i] += g * p[i];
}

// RBJ constant-peak-gain bandpass applied to white noise, normalized to the
// requested RMS after filtering.
void add_noise_band(std::vector<double>& x, Rng& rng, double fc, double q,
                    double level) {
  double w0 = 2.0 * kPi * fc / kSampleRate;
  double alpha = std::sin(w0) / (2.0 * q);
  double a0 = 1.0 + alpha;
  double b0 = alpha / a0, b2 = -alpha / a0;
  double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
  std::vector<double> band(x.size());
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0, sumsq = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double xi = rng.normal();
    double yi = b0 * xi + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = xi;
    y2 = y1;
    y1 = yi;
    band[i] = yi;
    sumsq += yi * yi;
  }
  double rms = std::sqrt(sumsq / static_cast<double>(x.size()));
  double g = level / rms;
  for (size_t i = 0; i < x.size(); ++i) x[i] += g * band[i];
}

// Exponentially damped sinusoid starting at time t0.
void add_burst(std::vector<double>& x, double t0, double dur, double tau,
               double freq, double amp) {
  size_t i0 = static_cast<size_t>(t0 * kSampleRate);
  size_t len = static_cast<size_t>(dur * kSampleRate);
  for (size_t j = 0; j < len && i0 + j < x.size(); ++j) {
    double t = static_cast<double>(j) / kSampleRate;
    x[i0 + j] += amp * std::exp(-t / tau) * std::sin(2.0 * kPi * freq * t);
  }
}

}  // namespace

double sliding_band_center_hz(double velocity) { return 500.0 + 8.0 * velocity; }

WaveformClip synth_clip(const SlideRailParams& params) {
  bool velocity_ok =
      params.velocity == 0.0 || (params.velocity >= 50.0 && params.velocity <= 750.0);
  if (!velocity_ok)
    throw ConfigError("synth_clip: velocity " + std::to_string(params.velocity) +
                      " mm/s outside [50, 750]");
  if (params.distance < 100.0 || params.distance > 500.0)
    throw ConfigError("synth_clip: distance " + std::to_string(params.distance) +
                      " mm outside [100, 500]");

  WaveformClip clip;
  clip.sample_rate = kSampleRate;
  clip.duration = kDuration;
  clip.params = params;
  clip.samples.assign(static_cast<size_t>(kSampleRate * kDuration), 0.0);

  Rng rng(params.seed);
  add_pink_noise(clip.samples, rng, kPinkLevel);

  const double v = params.velocity;
  if (v > 0.0) {
    double slide_gain = kSlideLevel * std::sqrt(v / 750.0);
    add_noise_band(clip.samples, rng, sliding_band_center_hz(v), kSlideQ, slide_gain);

    // Carriage passes: one out-and-back traversal per 2*distance/velocity
    // seconds, each a short low-frequency thunk.
    double period = 2.0 * params.distance / v;
    double amp = kTransientLevel * (0.4 + 0.6 * v / 750.0);
    double t = rng.uniform(0.0, period);
    while (t < kDuration) {
      add_burst(clip.samples, t, 0.050, 0.012, 180.0, amp);
      t += period;
    }
  }

  if (params.anomalous) {
    // Loose-part rattle: fixed-rate impulse train with a high-frequency
    // resonance, independent of velocity.
    double period = 1.0 / kRattleRateHz;
    double t = rng.uniform(0.0, period);
    while (t < kDuration) {
      add_burst(clip.samples, t, 0.012, 0.0025, kRattleToneHz, kRattleLevel);
      t += period;
    }
  }

  for (double& s : clip.samples) s = std::fmin(0.9, std::fmax(-0.9, s));
  return clip;
}

}  // namespace nfad
