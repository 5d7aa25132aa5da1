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

// Full detector configuration. The text form is one `section.key = value`
// per line; `#` starts a comment; every key is optional and unknown keys
// are rejected.

#ifndef MPSCD_CONFIG_HPP_
#define MPSCD_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "mpscd/cluster.hpp"
#include "mpscd/dsp.hpp"
#include "mpscd/roi.hpp"
#include "mpscd/verify.hpp"

namespace mpscd {

struct BandConfig {
  double f_lo = 2000.0;
  double f_hi = 24000.0;
  int order = 4;
};

struct BufferConfig {
  double length = 10.0;
  double hop = 10.0;
};

struct SuperletConfig {
  double f_min = 1000.0;
  double f_max = 30000.0;
  double f_step = 250.0;
  int base_cycles = 3;
  int order_min = 1;
  int order_max = 16;
  double time_step = 25e-6;

  /// Grid restricted to frequencies below the Nyquist limit of sample_rate.
  SuperletParams params(double sample_rate) const;
};

struct Config {
  BandConfig band;
  BufferConfig buffer;
  RoiParams roi;
  double intra_min_sep = 0.5e-3;
  ClusteringConfig clustering;
  VerificationThresholds verification;
  double pulse_half_width = 3e-3;
  SuperletConfig superlet;
  double u_t = 1.5;

  void validate() const;

  /// Canonical `key = value` text listing every key in a fixed order.
  std::string serialize() const;
  /// 64-bit FNV-1a of serialize(), as 16 hex digits.
  std::string hash() const;

  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);
  static std::vector<std::string> keys();
};

}  // namespace mpscd

#endif  // MPSCD_CONFIG_HPP_
