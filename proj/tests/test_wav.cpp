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

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "audio/wav.hpp"
#include "common.hpp"

using namespace nfad;
namespace fs = std::filesystem;

namespace {
std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("wav roundtrip stays within 16-bit quantization") {
  WavData wav;
  wav.sample_rate = 16000;
  Rng rng(7);
  wav.samples.resize(16000);
  for (double& s : wav.samples) s = 0.9 * (2.0 * rng.uniform() - 1.0);
  std::string path = temp_path("nfad_test_rt.wav");
  write_wav(wav, path);
  WavData back = read_wav(path);
  REQUIRE(back.samples.size() == wav.samples.size());
  CHECK(back.sample_rate == 16000);
  double max_err = 0.0;
  for (size_t i = 0; i < wav.samples.size(); ++i)
    max_err = std::max(max_err, std::fabs(back.samples[i] - wav.samples[i]));
  CHECK(max_err <= std::pow(2.0, -15.0));
}

TEST_CASE("wav header: 10 s clip gives a 320000-byte data chunk") {
  WavData wav;
  wav.samples.assign(160000, 0.0);
  std::string path = temp_path("nfad_test_hdr.wav");
  write_wav(wav, path);
  std::ifstream f(path, std::ios::binary);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  REQUIRE(buf.size() == 44 + 320000);
  // data chunk size at offset 40
  uint32_t data_size = 0;
  std::memcpy(&data_size, buf.data() + 40, 4);
  CHECK(data_size == 320000);
  // declared format: 16000 Hz, 1 channel, 16 bits
  uint32_t rate = 0;
  std::memcpy(&rate, buf.data() + 24, 4);
  uint16_t channels = 0, bits = 0;
  std::memcpy(&channels, buf.data() + 22, 2);
  std::memcpy(&bits, buf.data() + 34, 2);
  CHECK(rate == 16000);
  CHECK(channels == 1);
  CHECK(bits == 16);
}

TEST_CASE("wav zero clip reads back as zeros") {
  WavData wav;
  wav.samples.assign(1000, 0.0);
  std::string path = temp_path("nfad_test_zero.wav");
  write_wav(wav, path);
  WavData back = read_wav(path);
  for (double s : back.samples) CHECK(s == 0.0);
}

TEST_CASE("wav rejects unsupported encodings with the offset") {
  // Build a header declaring 8-bit PCM.
  WavData wav;
  wav.samples.assign(100, 0.0);
  std::string path = temp_path("nfad_test_8bit.wav");
  write_wav(wav, path);
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    uint16_t bits = 8;
    f.seekp(34);
    f.write(reinterpret_cast<const char*>(&bits), 2);
  }
  CHECK_THROWS_WITH_AS(read_wav(path),
                       doctest::Contains("unsupported bit depth"), DataError);
}

TEST_CASE("wav rejects truncated data with the offset") {
  WavData wav;
  wav.samples.assign(100, 0.25);
  std::string path = temp_path("nfad_test_trunc.wav");
  write_wav(wav, path);
  fs::resize_file(path, 44 + 50);  // half the declared payload
  CHECK_THROWS_AS(read_wav(path), DataError);
}

TEST_CASE("wav rejects a non-RIFF file") {
  std::string path = temp_path("nfad_test_norif.wav");
  std::ofstream(path) << "definitely not audio";
  CHECK_THROWS_WITH_AS(read_wav(path), doctest::Contains("RIFF"), DataError);
}
