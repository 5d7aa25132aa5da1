/* Copyright 2026 The mpscd Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpscd/ingest.hpp"

namespace mpscd {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
}

struct WavFormat {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

}  // namespace

AudioClip load_audio(const std::filesystem::path& path, int channel) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open audio file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string where = " (" + path.string() + ")";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file" + where);
  }

  WavFormat fmt;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) throw std::runtime_error("truncated fmt chunk" + where);
      fmt.tag = read_u16(chunk + 8);
      fmt.channels = read_u16(chunk + 10);
      fmt.sample_rate = read_u32(chunk + 12);
      fmt.bits = read_u16(chunk + 22);
      if (fmt.tag == kFormatExtensible) {
        if (size < 40 || avail < 40) throw std::runtime_error("truncated extensible fmt" + where);
        // The sub-format GUID begins with the plain format tag.
        fmt.tag = read_u16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      // Streams written without a final size report 0 or 0xFFFFFFFF.
      data_size = (size == 0 || size > avail) ? avail : size;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw std::runtime_error("missing fmt chunk" + where);
  if (data == nullptr) throw std::runtime_error("missing data chunk" + where);
  if (fmt.channels == 0) throw std::runtime_error("zero channels" + where);
  if (fmt.sample_rate == 0) throw std::runtime_error("zero sample rate" + where);

  const bool is_pcm = fmt.tag == kFormatPcm && (fmt.bits == 16 || fmt.bits == 24);
  const bool is_float = fmt.tag == kFormatFloat && fmt.bits == 32;
  if (!is_pcm && !is_float) {
    throw std::runtime_error("unsupported encoding (format " + std::to_string(fmt.tag) + ", " +
                             std::to_string(fmt.bits) + " bits)" + where);
  }
  if (channel < 0 || channel >= fmt.channels) {
    throw std::runtime_error("channel " + std::to_string(channel) + " not present" + where);
  }

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame = bytes_per_sample * fmt.channels;
  const std::size_t frames = data_size / frame;
  if (frames == 0) throw std::runtime_error("empty audio stream" + where);
  if (fmt.sample_rate < 48000) {
    std::clog << "warning: " << path.string() << " sampled at " << fmt.sample_rate
              << " Hz; the 2-24 kHz analysis band needs at least 48 kHz\n";
  }

  AudioClip clip;
  clip.sample_rate = static_cast<double>(fmt.sample_rate);
  clip.samples.resize(static_cast<Eigen::Index>(frames));
  bool clamped = false;
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* p = data + i * frame + static_cast<std::size_t>(channel) * bytes_per_sample;
    double v = 0.0;
    if (is_float) {
      float f;
      std::uint32_t raw = read_u32(p);
      std::memcpy(&f, &raw, sizeof f);
      v = f;
      if (!std::isfinite(v)) throw std::runtime_error("non-finite sample" + where);
      if (std::abs(v) > 1.0) {
        v = std::clamp(v, -1.0, 1.0);
        clamped = true;
      }
    } else if (fmt.bits == 16) {
      v = static_cast<std::int16_t>(read_u16(p)) / 32768.0;
    } else {
      std::int32_t s = static_cast<std::int32_t>(p[0]) | (static_cast<std::int32_t>(p[1]) << 8) |
                       (static_cast<std::int32_t>(p[2]) << 16);
      if (s & 0x800000) s -= 0x1000000;
      v = s / 8388608.0;
    }
    clip.samples[static_cast<Eigen::Index>(i)] = v;
  }
  if (clamped) std::clog << "warning: float samples beyond full scale clamped in " << path.string() << '\n';
  return clip;
}

void write_wav24(const AudioClip& clip, const std::filesystem::path& path) {
  if (clip.sample_rate <= 0.0) throw std::invalid_argument("write_wav24: sample_rate must be > 0");
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(clip.sample_rate));
  const std::uint32_t data_bytes = n * 3;

  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes + 1);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes + (data_bytes & 1u));
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * 3);
  put_u16(out, 3);
  put_u16(out, 24);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (Eigen::Index i = 0; i < clip.samples.size(); ++i) {
    const double x = clip.samples[i];
    if (!std::isfinite(x)) throw std::invalid_argument("write_wav24: non-finite sample");
    const auto q = static_cast<std::int32_t>(
        std::clamp(std::llround(x * 8388608.0), -8388608LL, 8388607LL));
    const auto u = static_cast<std::uint32_t>(q);
    out.push_back(static_cast<unsigned char>(u & 0xFF));
    out.push_back(static_cast<unsigned char>((u >> 8) & 0xFF));
    out.push_back(static_cast<unsigned char>((u >> 16) & 0xFF));
  }
  if (data_bytes & 1u) out.push_back(0);

  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write audio file: " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace mpscd
