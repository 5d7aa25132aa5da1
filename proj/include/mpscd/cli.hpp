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

// Command implementations behind the `mpscd` tool. Each returns the process
// exit status; diagnostics go to `err`, machine output to files or `out`.

#ifndef MPSCD_CLI_HPP_
#define MPSCD_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mpscd/config.hpp"

namespace mpscd {

namespace fs = std::filesystem;

/// Defaults when `path` is empty.
Config load_config(const std::optional<fs::path>& path);

struct DetectOptions {
  std::vector<fs::path> inputs;
  std::optional<fs::path> config;
  std::string out = "-";  // "-" is standard output
  int jobs = 1;
};

struct EvalOptions {
  fs::path reports;
  std::optional<fs::path> labels;       // buffer label CSV
  std::optional<fs::path> annotations;  // or labels derived from annotations
  std::optional<fs::path> config;
  std::optional<double> u_t;            // false-alarm operating point
  double grid_lo = 0.0;
  double grid_hi = 3.0;
  double grid_step = 0.01;
  std::string out = "-";
};

struct CalibrateOptions {
  fs::path audio;
  fs::path annotations;
  double target_p = 0.05;
  std::optional<fs::path> config;
  std::string out = "-";
};

struct SynthOptions {
  std::optional<fs::path> spec;
  std::optional<fs::path> config;  // buffer layout for labels.csv
  std::optional<std::uint64_t> seed;
  fs::path out_dir = ".";
};

int cmd_detect(const DetectOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CalibrateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err);

/// `buffer_index,label` or `source,buffer_index,label` rows; label is one of
/// positive, negative, 1, 0.
struct BufferLabel {
  std::string source;
  std::size_t buffer_index = 0;
  bool positive = false;
};
std::vector<BufferLabel> parse_buffer_labels(const std::string& text);

}  // namespace mpscd

#endif  // MPSCD_CLI_HPP_
