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

#include "feat/features.hpp"

#include <cmath>

#include "common.hpp"

namespace nfad {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

void FeatureConfig::validate() const {
  if (!is_pow2(fft_length)) throw ConfigError("features: fft_length must be a power of two");
  if (hop <= 0 || fft_length < hop) throw ConfigError("features: need fft_length >= hop > 0");
  if (n_mels < 1) throw ConfigError("features: n_mels must be >= 1");
  if (patch_frames < 1 || patch_hop < 1)
    throw ConfigError("features: patch_frames and patch_hop must be >= 1");
  if (floor <= 0.0) throw ConfigError("features: floor must be positive");
}

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
  const size_t n = re.size();
  if (!is_pow2(static_cast<int>(n)) || im.size() != n)
    throw ShapeError("fft_radix2: length must be a power of two");
  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / static_cast<double>(len);
    double wr = std::cos(ang), wi = std::sin(ang);
    for (size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (size_t k = 0; k < len / 2; ++k) {
        size_t a = i + k, b = i + k + len / 2;
        double tr = re[b] * cr - im[b] * ci;
        double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

std::vector<std::vector<double>> mel_filterbank(int n_mels, int fft_length,
                                                int sample_rate) {
  if (n_mels < 1) throw ConfigError("mel_filterbank: n_mels must be >= 1");
  const int n_bins = fft_length / 2 + 1;
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[i] = mel_to_hz(mel_max * i / (n_mels + 1));

  std::vector<std::vector<double>> fb(n_mels, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < n_mels; ++m) {
    double f0 = edges[m], f1 = edges[m + 1], f2 = edges[m + 2];
    bool any = false;
    for (int k = 0; k < n_bins; ++k) {
      double fk = static_cast<double>(k) * sample_rate / fft_length;
      double up = (fk - f0) / (f1 - f0);
      double dn = (f2 - fk) / (f2 - f1);
      double w = std::max(0.0, std::min(up, dn));
      fb[m][k] = w;
      any = any || w > 0.0;
    }
    if (!any)
      throw ConfigError("mel_filterbank: filter " + std::to_string(m) +
                        " has no nonzero FFT bin; n_mels too large for fft_length");
  }
  return fb;
}

MelSpectrogram stft_logmel(const WaveformClip& clip, const FeatureConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(clip.samples.size());
  const int nfft = cfg.fft_length;
  if (n < nfft) throw DataError("stft_logmel: clip shorter than one FFT frame");

  const int pad = cfg.center_pad ? nfft / 2 : 0;
  const int n_frames = cfg.center_pad ? 1 + n / cfg.hop : 1 + (n - nfft) / cfg.hop;

  // reflect padding (mirror without repeating the edge sample)
  auto sample_at = [&](int i) -> double {
    i -= pad;
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return clip.samples[static_cast<size_t>(i)];
  };

  std::vector<double> window(static_cast<size_t>(nfft));
  for (int i = 0; i < nfft; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / nfft);

  auto fb = mel_filterbank(cfg.n_mels, nfft, cfg.sample_rate);
  const int n_bins = nfft / 2 + 1;

  MelSpectrogram spec;
  spec.n_mels = cfg.n_mels;
  spec.n_frames = n_frames;
  spec.values.assign(static_cast<size_t>(cfg.n_mels) * n_frames, 0.0f);
  spec.params = clip.params;  // clip_id assigned by the caller

  std::vector<double> re(static_cast<size_t>(nfft)), im(static_cast<size_t>(nfft));
  std::vector<double> power(static_cast<size_t>(n_bins));
  for (int t = 0; t < n_frames; ++t) {
    const int start = t * cfg.hop;
    for (int i = 0; i < nfft; ++i) {
      re[i] = sample_at(start + i) * window[i];
      im[i] = 0.0;
    }
    fft_radix2(re, im);
    for (int k = 0; k < n_bins; ++k) power[k] = re[k] * re[k] + im[k] * im[k];
    for (int m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      const std::vector<double>& row = fb[m];
      for (int k = 0; k < n_bins; ++k) acc += row[k] * power[k];
      spec.values[static_cast<size_t>(m) * n_frames + t] =
          static_cast<float>(std::log(std::max(acc, cfg.floor)));
    }
  }
  return spec;
}

std::vector<FeaturePatch> extract_patches(const MelSpectrogram& spec,
                                          const FeatureConfig& cfg) {
  if (spec.n_frames < cfg.patch_frames)
    throw DataError("extract_patches: " + std::to_string(spec.n_frames) +
                    " frames < patch_frames " + std::to_string(cfg.patch_frames));
  const int count = (spec.n_frames - cfg.patch_frames) / cfg.patch_hop + 1;
  std::vector<FeaturePatch> out;
  out.reserve(static_cast<size_t>(count));
  for (int p = 0; p < count; ++p) {
    FeaturePatch patch;
    patch.n_mels = spec.n_mels;
    patch.n_frames = cfg.patch_frames;
    patch.clip_id = spec.clip_id;
    patch.patch_index = p;
    patch.velocity = spec.params.velocity;
    patch.values.resize(static_cast<size_t>(spec.n_mels) * cfg.patch_frames);
    const int f0 = p * cfg.patch_hop;
    for (int m = 0; m < spec.n_mels; ++m)
      for (int f = 0; f < cfg.patch_frames; ++f)
        patch.values[static_cast<size_t>(m) * cfg.patch_frames + f] =
            spec.at(m, f0 + f);
    out.push_back(std::move(patch));
  }
  return out;
}

NormalizerStats fit_normalizer(const std::vector<FeaturePatch>& train_patches) {
  double sum = 0.0, sumsq = 0.0;
  size_t count = 0;
  for (const FeaturePatch& p : train_patches) {
    for (float v : p.values) {
      sum += v;
      sumsq += static_cast<double>(v) * v;
      ++count;
    }
  }
  if (count == 0) throw DataError("fit_normalizer: no training patches");
  NormalizerStats stats;
  stats.mean = sum / static_cast<double>(count);
  double var = sumsq / static_cast<double>(count) - stats.mean * stats.mean;
  stats.stddev = std::max(std::sqrt(std::max(var, 0.0)), 1e-6);
  return stats;
}

void normalize_patches(std::vector<FeaturePatch>& patches,
                       const NormalizerStats& stats) {
  const float mu = static_cast<float>(stats.mean);
  const float inv = static_cast<float>(1.0 / stats.stddev);
  for (FeaturePatch& p : patches)
    for (float& v : p.values) v = (v - mu) * inv;
}

}  // namespace nfad
