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

#ifndef NFAD_AUDIO_WAV_HPP
#define NFAD_AUDIO_WAV_HPP

#include <string>
#include <vector>

namespace nfad {

struct WavData {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 16000;
};

// PCM 16-bit little-endian mono RIFF/WAVE only.
void write_wav(const WavData& wav, const std::string& path);
WavData read_wav(const std::string& path);

}  // namespace nfad

#endif  // NFAD_AUDIO_WAV_HPP
