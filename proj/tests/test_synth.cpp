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

#include <doctest.h>

#include <algorithm>

#include "audio/synth.hpp"
#include "common.hpp"
#include "testutil.hpp"

using namespace nfad;

namespace {

SlideRailParams params(double v, double d, bool anom, uint64_t seed) {
  SlideRailParams p;
  p.velocity = v;
  p.distance = d;
  p.anomalous = anom;
  p.seed = seed;
  return p;
}

// Averaged naive-DFT power spectrum over non-overlapping 1024 frames,
// independent of the library FFT.
std::vector<double> avg_power(const WaveformClip& clip, int frames = 40) {
  std::vector<double> acc(513, 0.0);
  for (int t = 0; t < frames; ++t) {
    std::vector<double> frame(clip.samples.begin() + t * 1024,
                              clip.samples.begin() + (t + 1) * 1024);
    auto p = testutil::naive_power_spectrum(frame);
    for (size_t k = 0; k < acc.size(); ++k) acc[k] += p[k];
  }
  for (double& v : acc) v /= frames;
  return acc;
}

double band_rms(const std::vector<double>& power, double lo_hz, double hi_hz) {
  double acc = 0.0;
  int count = 0;
  for (size_t k = 0; k < power.size(); ++k) {
    double f = static_cast<double>(k) * 16000.0 / 1024.0;
    if (f >= lo_hz && f <= hi_hz) {
      acc += power[k];
      ++count;
    }
  }
  return std::sqrt(acc / count);
}

}  // namespace

TEST_CASE("synth: zero velocity leaves background noise only") {
  WaveformClip with_v0 = synth_clip(params(0.0, 500, false, 42));
  // Regenerate just the background with the same seed: a clip whose
  // velocity-scaled parts all vanish must equal the background draw.
  WaveformClip again = synth_clip(params(0.0, 500, false, 42));
  CHECK(with_v0.samples == again.samples);
  // Background only: no sliding band energy above the pink floor.
  auto power = avg_power(with_v0);
  double mid = band_rms(power, 2000, 4000);
  double low = band_rms(power, 100, 400);
  CHECK(mid < low);  // pink noise falls with frequency; no band sticks out
}

TEST_CASE("synth: identical params and seed give bit-identical clips") {
  auto p = params(300, 250, true, 123456789ULL);
  WaveformClip a = synth_clip(p);
  WaveformClip b = synth_clip(p);
  CHECK(a.samples == b.samples);
  // different seed differs
  p.seed = 987;
  WaveformClip c = synth_clip(p);
  CHECK(a.samples != c.samples);
}

TEST_CASE("synth: clip length and amplitude bounds") {
  WaveformClip clip = synth_clip(params(750, 500, true, 5));
  CHECK(clip.samples.size() == 160000);
  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::fabs(s));
  CHECK(peak <= 0.9);
}

TEST_CASE("synth: sliding band RMS strictly increases with velocity") {
  double prev = -1.0;
  for (int v = 100; v <= 700; v += 100) {
    WaveformClip clip = synth_clip(params(v, 500, false, 1000 + v));
    double fc = sliding_band_center_hz(v);
    auto power = avg_power(clip);
    double rms = band_rms(power, fc / 1.3, fc * 1.3);
    CHECK(rms > prev);
    prev = rms;
  }
}

TEST_CASE("synth: spectral peak location strictly increases with velocity") {
  double prev = 0.0;
  for (int v = 100; v <= 700; v += 100) {
    WaveformClip clip = synth_clip(params(v, 500, false, 2000 + v));
    auto power = avg_power(clip);
    double best_f = 0.0, best = -1.0;
    for (size_t k = 0; k < power.size(); ++k) {
      double f = static_cast<double>(k) * 16000.0 / 1024.0;
      if (f < 700.0 || f > 7000.0) continue;
      if (power[k] > best) {
        best = power[k];
        best_f = f;
      }
    }
    CHECK(best_f > prev);
    prev = best_f;
  }
}

TEST_CASE("synth: rattle band energy separates anomalous from normal") {
  for (double v : {50.0, 300.0, 750.0}) {
    WaveformClip normal = synth_clip(params(v, 500, false, 31));
    WaveformClip anom = synth_clip(params(v, 500, true, 77));
    double rn = band_rms(avg_power(normal), 7200, 8000);
    double ra = band_rms(avg_power(anom), 7200, 8000);
    CHECK(ra > rn);
  }
}

TEST_CASE("synth: out-of-range parameters rejected") {
  CHECK_THROWS_AS(synth_clip(params(20, 500, false, 1)), ConfigError);
  CHECK_THROWS_AS(synth_clip(params(800, 500, false, 1)), ConfigError);
  CHECK_THROWS_AS(synth_clip(params(300, 50, false, 1)), ConfigError);
  CHECK_THROWS_AS(synth_clip(params(300, 600, false, 1)), ConfigError);
}
