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

#include "audio/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "common.hpp"

namespace nfad {

namespace {

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

[[noreturn]] void format_error(const std::string& what, size_t offset) {
  throw DataError("wav: " + what + " at byte offset " + std::to_string(offset));
}

uint32_t get_u32(const std::string& buf, size_t off) {
  if (off + 4 > buf.size()) format_error("truncated field", off);
  uint32_t v = 0;
  std::memcpy(&v, buf.data() + off, 4);
  return v;  // little-endian host assumed
}

uint16_t get_u16(const std::string& buf, size_t off) {
  if (off + 2 > buf.size()) format_error("truncated field", off);
  uint16_t v = 0;
  std::memcpy(&v, buf.data() + off, 2);
  return v;
}

}  // namespace

void write_wav(const WavData& wav, const std::string& path) {
  const uint32_t n = static_cast<uint32_t>(wav.samples.size());
  const uint32_t data_bytes = n * 2;
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(wav.sample_rate));
  put_u32(out, static_cast<uint32_t>(wav.sample_rate) * 2);
  put_u16(out, 2);   // block align
  put_u16(out, 16);  // bits per sample
  out += "data";
  put_u32(out, data_bytes);
  // Scale by 32768 with clamping keeps the quantization error within
  // 2^-15 everywhere, including at +1.0 full scale.
  for (double s : wav.samples) {
    double clamped = std::fmin(1.0, std::fmax(-1.0, s));
    int32_t q = static_cast<int32_t>(std::lrint(clamped * 32768.0));
    if (q > 32767) q = 32767;
    if (q < -32768) q = -32768;
    put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("wav: cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("wav: short write: " + path);
}

WavData read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("wav: cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (buf.size() < 12) format_error("file shorter than RIFF header", buf.size());
  if (buf.compare(0, 4, "RIFF") != 0) format_error("missing RIFF tag", 0);
  if (buf.compare(8, 4, "WAVE") != 0) format_error("missing WAVE tag", 8);

  WavData wav;
  bool have_fmt = false;
  size_t off = 12;
  while (off + 8 <= buf.size()) {
    std::string id = buf.substr(off, 4);
    uint32_t chunk_size = get_u32(buf, off + 4);
    size_t body = off + 8;
    if (id == "fmt ") {
      if (chunk_size < 16) format_error("fmt chunk too small", off + 4);
      uint16_t audio_format = get_u16(buf, body);
      uint16_t channels = get_u16(buf, body + 2);
      uint32_t rate = get_u32(buf, body + 4);
      uint16_t bits = get_u16(buf, body + 14);
      if (audio_format != 1)
        format_error("unsupported encoding (want PCM=1, got " +
                         std::to_string(audio_format) + ")",
                     body);
      if (channels != 1)
        format_error("unsupported channel count " + std::to_string(channels), body + 2);
      if (bits != 16)
        format_error("unsupported bit depth " + std::to_string(bits), body + 14);
      wav.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) format_error("data chunk before fmt chunk", off);
      if (body + chunk_size > buf.size()) format_error("truncated data chunk", body);
      size_t n = chunk_size / 2;
      wav.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        int16_t q;
        std::memcpy(&q, buf.data() + body + 2 * i, 2);
        wav.samples[i] = static_cast<double>(q) / 32768.0;
      }
      return wav;
    }
    off = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  format_error("no data chunk found", off);
}

}  // namespace nfad
