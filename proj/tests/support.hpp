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

// Shared fixtures for the test binaries.

#ifndef MPSCD_TESTS_SUPPORT_HPP_
#define MPSCD_TESTS_SUPPORT_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Core>

#include "mpscd/dsp.hpp"
#include "mpscd/eval.hpp"
#include "mpscd/ingest.hpp"
#include "mpscd/mps.hpp"
#include "mpscd/roi.hpp"

namespace mpscd::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mpscd_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Little-endian RIFF/WAVE bytes assembled field by field.
struct WavBytes {
  std::vector<unsigned char> bytes;

  void u16(std::uint16_t v) {
    bytes.push_back(static_cast<unsigned char>(v & 0xFF));
    bytes.push_back(static_cast<unsigned char>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  }
  void tag(const char* t) { bytes.insert(bytes.end(), t, t + 4); }

  // Header for `data_bytes` of interleaved sample data; extensible adds the
  // 40-byte fmt form with the subformat GUID prefix.
  static WavBytes header(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                         std::uint16_t bits, std::uint32_t data_bytes, bool extensible = false) {
    WavBytes w;
    const std::uint32_t fmt_size = extensible ? 40 : 16;
    w.tag("RIFF");
    w.u32(4 + 8 + fmt_size + 8 + data_bytes);
    w.tag("WAVE");
    w.tag("fmt ");
    w.u32(fmt_size);
    w.u16(extensible ? 0xFFFE : format);
    w.u16(channels);
    w.u32(rate);
    w.u32(rate * channels * bits / 8);
    w.u16(static_cast<std::uint16_t>(channels * bits / 8));
    w.u16(bits);
    if (extensible) {
      w.u16(22);
      w.u16(bits);
      w.u32(0);
      w.u16(format);
      const unsigned char guid_tail[14] = {0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80,
                                           0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};
      w.bytes.insert(w.bytes.end(), guid_tail, guid_tail + 14);
    }
    w.tag("data");
    w.u32(data_bytes);
    return w;
  }

  void save(const std::filesystem::path& p) const {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
};

inline AudioClip make_clip(const Signal& x, double fs, double origin = 0.0) { return AudioClip{x, fs, origin}; }

inline Signal tone(double f, double fs, Eigen::Index n, double amp = 1.0, double phase = 0.0) {
  Signal x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  return x;
}

// Gaussian-windowed carrier with half-power envelope width `width` centred at tc.
inline void add_pulse(Signal& x, double fs, double tc, double f, double width, double amp = 1.0) {
  const double s = width / (2.0 * std::sqrt(std::numbers::ln2));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / fs - tc;
    if (std::abs(t) > 8.0 * s) continue;
    x[i] += amp * std::exp(-0.5 * t * t / (s * s)) * std::cos(2.0 * std::numbers::pi * f * t);
  }
}

// Enhanced-signal style bump: positive Gaussian of peak `height` at sample i0.
inline void add_bump(Signal& s, Eigen::Index i0, double height, double width_samples) {
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double d = static_cast<double>(i - i0) / width_samples;
    s[i] += height * std::exp(-0.5 * d * d);
  }
}

// Front-end MPS of each annotated event that has a detected transient within
// `tolerance` of it; entries line up with `indices` into the annotations.
struct MeasuredMps {
  std::vector<std::size_t> indices;
  std::vector<double> mps;
};

inline MeasuredMps measure_annotated(const SynthClip& synth, double tolerance = 1e-3) {
  const AudioClip filtered = bandpass(synth.clip, 2000.0, 24000.0);
  const EnhancedSignal enh = tkeo(filtered);
  RoiParams params;
  params.max_count = 1000;
  const auto events = detect_transients(enh, params);
  MeasuredMps out;
  std::size_t e = 0;
  for (std::size_t a = 0; a < synth.annotations.size(); ++a) {
    const double t = synth.annotations[a].time_s;
    while (e < events.size() && events[e].peak_time < t - tolerance) ++e;
    if (e == events.size() || events[e].peak_time > t + tolerance) continue;
    if (const auto m = measure_mps(extract_roi(filtered, enh, events[e]))) {
      out.indices.push_back(a);
      out.mps.push_back(m->rho_mps);
    }
  }
  return out;
}

}  // namespace mpscd::testing

#endif  // MPSCD_TESTS_SUPPORT_HPP_
