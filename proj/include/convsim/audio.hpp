// convsim/audio.hpp

// Copyright 2026  The convsim authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Mono WAV reading/writing and sample-buffer helpers. Accepted input formats:
// 16-bit PCM and 32-bit IEEE float, single channel. Output is written as
// 32-bit float so rendered mixtures round-trip without quantization.

#ifndef CONVSIM_AUDIO_HPP_
#define CONVSIM_AUDIO_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "convsim/error.hpp"

namespace convsim {

using SampleBuffer = std::vector<double>;

struct WavData {
  SampleBuffer samples;
  int sample_rate_hz = 0;
};

namespace wav_detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace wav_detail

inline WavData read_wav(const std::string& path) {
  using namespace wav_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open audio file " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw InputError(path + ": not a RIFF/WAVE file");
  }

  int format_tag = 0, channels = 0, bits = 0, rate = 0;
  bool have_fmt = false;
  WavData out;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(&bytes[pos]);
    const std::uint32_t chunk_size = read_u32(&bytes[pos + 4]);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size())
      throw InputError(path + ": truncated chunk '" + std::string(id, 4) + "'");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw InputError(path + ": short fmt chunk");
      format_tag = read_u16(&bytes[body]);
      channels = read_u16(&bytes[body + 2]);
      rate = static_cast<int>(read_u32(&bytes[body + 4]));
      bits = read_u16(&bytes[body + 14]);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw InputError(path + ": data chunk before fmt chunk");
      if (channels != 1)
        throw InputError(path + ": expected mono audio, got " +
                         std::to_string(channels) + " channels");
      const unsigned char* d = &bytes[body];
      if (format_tag == 1 && bits == 16) {
        const std::size_t n = chunk_size / 2;
        out.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          const std::int16_t v =
              static_cast<std::int16_t>(d[2 * i] | (d[2 * i + 1] << 8));
          out.samples[i] = static_cast<double>(v) / 32768.0;
        }
      } else if (format_tag == 3 && bits == 32) {
        const std::size_t n = chunk_size / 4;
        out.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          std::uint32_t u = read_u32(&d[4 * i]);
          float f;
          std::memcpy(&f, &u, 4);
          out.samples[i] = static_cast<double>(f);
        }
      } else {
        throw InputError(path + ": unsupported WAV encoding (need 16-bit PCM or 32-bit float)");
      }
      out.sample_rate_hz = rate;
      return out;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  throw InputError(path + ": no data chunk found");
}

/// 32-bit float, mono. The byte stream is a pure function of (samples, rate).
inline void write_wav_f32(const std::string& path, const SampleBuffer& samples,
                          int sample_rate_hz) {
  using namespace wav_detail;
  const std::uint32_t n = static_cast<std::uint32_t>(samples.size());
  const std::uint32_t data_bytes = n * 4;
  std::string s;
  s.reserve(58 + data_bytes);
  s.append("RIFF");
  put_u32(s, 50 + data_bytes);  // fmt(16+8) + fact(4+8) + data header(8) + data
  s.append("WAVE");
  s.append("fmt ");
  put_u32(s, 16);
  put_u16(s, 3);  // IEEE float
  put_u16(s, 1);  // mono
  put_u32(s, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(s, static_cast<std::uint32_t>(sample_rate_hz) * 4);
  put_u16(s, 4);
  put_u16(s, 32);
  s.append("fact");
  put_u32(s, 4);
  put_u32(s, n);
  s.append("data");
  put_u32(s, data_bytes);
  for (std::uint32_t i = 0; i < n; ++i) {
    const float f = static_cast<float>(samples[i]);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(s, u);
  }
  namespace fs = std::filesystem;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!out) throw Error("short write to " + tmp);
  }
  fs::rename(tmp, path);
}

inline void write_wav_pcm16(const std::string& path, const SampleBuffer& samples,
                            int sample_rate_hz) {
  using namespace wav_detail;
  const std::uint32_t n = static_cast<std::uint32_t>(samples.size());
  const std::uint32_t data_bytes = n * 2;
  std::string s;
  s.reserve(44 + data_bytes);
  s.append("RIFF");
  put_u32(s, 36 + data_bytes);
  s.append("WAVE");
  s.append("fmt ");
  put_u32(s, 16);
  put_u16(s, 1);  // PCM
  put_u16(s, 1);  // mono
  put_u32(s, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(s, static_cast<std::uint32_t>(sample_rate_hz) * 2);
  put_u16(s, 2);
  put_u16(s, 16);
  s.append("data");
  put_u32(s, data_bytes);
  for (std::uint32_t i = 0; i < n; ++i) {
    double v = samples[i] * 32768.0;
    if (v > 32767.0) v = 32767.0;
    if (v < -32768.0) v = -32768.0;
    put_u16(s, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lrint(v))));
  }
  namespace fs = std::filesystem;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!out) throw Error("short write to " + tmp);
  }
  fs::rename(tmp, path);
}

inline double rms(const SampleBuffer& x, std::size_t count = SIZE_MAX) {
  const std::size_t n = std::min(count, x.size());
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(n));
}

inline double peak_abs(const SampleBuffer& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace convsim

#endif  // CONVSIM_AUDIO_HPP_
