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

#ifndef NFAD_FEAT_FEATURES_HPP
#define NFAD_FEAT_FEATURES_HPP

#include <string>
#include <vector>

#include "audio/synth.hpp"

namespace nfad {

struct FeatureConfig {
  int fft_length = 1024;
  int hop = 512;
  int n_mels = 128;
  int patch_frames = 64;
  int patch_hop = 16;  // patch_frames - overlap
  int sample_rate = 16000;
  double floor = 1e-10;
  bool center_pad = true;  // reflect padding, one frame per hop

  void validate() const;
};

// Log-domain mel spectrogram of one clip, n_mels x n_frames, row-major.
struct MelSpectrogram {
  int n_mels = 0;
  int n_frames = 0;
  std::vector<float> values;  // [mel * n_frames + frame]
  std::string clip_id;
  SlideRailParams params;

  float at(int mel, int frame) const { return values[static_cast<size_t>(mel) * n_frames + frame]; }
};

// One model input tile, n_mels x patch_frames.
struct FeaturePatch {
  int n_mels = 0;
  int n_frames = 0;
  std::vector<float> values;  // row-major [mel][frame]
  std::string clip_id;
  int patch_index = 0;
  double velocity = 0.0;
};

// HTK-scale triangular mel filterbank, n_mels x (fft_length/2 + 1).
// mel(f) = 2595 * log10(1 + f/700), filters span 0 Hz .. sample_rate/2.
std::vector<std::vector<double>> mel_filterbank(int n_mels, int fft_length,
                                                int sample_rate);

// Hann-windowed power STFT with centered reflect padding, mel projection,
// natural log with floor. Frame count = 1 + floor(len / hop).
MelSpectrogram stft_logmel(const WaveformClip& clip, const FeatureConfig& cfg);

// Patches start at frames 0, patch_hop, 2*patch_hop, ...; remainder dropped.
std::vector<FeaturePatch> extract_patches(const MelSpectrogram& spec,
                                          const FeatureConfig& cfg);

// Global scalar standardization fitted on the training split.
struct NormalizerStats {
  double mean = 0.0;
  double stddev = 1.0;  // clamped >= 1e-6
};

NormalizerStats fit_normalizer(const std::vector<FeaturePatch>& train_patches);
void normalize_patches(std::vector<FeaturePatch>& patches,
                       const NormalizerStats& stats);

// In-place complex radix-2 FFT (interleaved re/im), length a power of two.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

}  // namespace nfad

#endif  // NFAD_FEAT_FEATURES_HPP
