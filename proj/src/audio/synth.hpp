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

#ifndef NFAD_AUDIO_SYNTH_HPP
#define NFAD_AUDIO_SYNTH_HPP

#include <cstdint>
#include <vector>

namespace nfad {

// Generation parameters for one slide-rail-like clip.
struct SlideRailParams {
  double velocity = 0.0;  // mm/s, in [50, 750] (0 allowed as degenerate)
  double distance = 0.0;  // mm, in [100, 500]
  bool anomalous = false;
  uint64_t seed = 0;
};

struct WaveformClip {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 16000;
  double duration = 10.0;  // seconds
  SlideRailParams params;
};

// Deterministic synthetic slide-rail sound:
//   (a) fixed-level pink background noise,
//   (b) a narrow "sliding" noise band centered at 500 + 8*velocity Hz whose
//       energy grows with velocity,
//   (c) carriage-pass transients repeating every 2*distance/velocity seconds,
//   (d) when anomalous, a velocity-independent 16 Hz rattle ringing at 7.7 kHz.
// Identical (params, seed) pairs produce bit-identical clips.
WaveformClip synth_clip(const SlideRailParams& params);

// Center frequency of the sliding band, Hz. Linear in velocity so a latent
// mean that shifts linearly with velocity is learnable.
double sliding_band_center_hz(double velocity);

}  // namespace nfad

#endif  // NFAD_AUDIO_SYNTH_HPP
