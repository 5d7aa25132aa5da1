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

// Synthetic ground truth and evaluation metrics.

#ifndef MPSCD_EVAL_HPP_
#define MPSCD_EVAL_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mpscd/decide.hpp"
#include "mpscd/ingest.hpp"

namespace mpscd {

/// Portable draws on top of mt19937_64; the standard distributions are not
/// reproducible across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range&) const = default;
};

enum class NoiseKind { kWhiteBand, kImpulsive };

struct SynthSpec {
  double sample_rate = 96000.0;
  double duration_s = 10.0;

  int n_trains = 1;
  Range ici_s{0.5, 1.5};        // per-train ICI drawn uniformly
  double ici_jitter = 0.01;     // relative sigma of each interval
  Range mps_s{2e-3, 8e-3};      // per-train base MPS drawn uniformly
  double mps_jitter_s = 0.0;    // sigma of per-click MPS jitter
  Range click_snr_db{30.0, 40.0};
  Range carrier_hz{4000.0, 16000.0};   // drawn per click
  Range pulse_width_s{200e-6, 500e-6};  // per pulse, half-power width of the envelope
  Range second_pulse_gain{0.6, 0.9};
  double third_pulse_prob = 0.5;

  int n_noise_transients = 0;
  double noise_double_prob = 0.5;
  Range noise_snr_db{24.0, 45.0};
  Range noise_mps_s{1e-3, 45e-3};
  Range noise_carrier_hz{2000.0, 30000.0};
  Range noise_width_s{100e-6, 3e-3};

  NoiseKind noise_kind = NoiseKind::kWhiteBand;
  double noise_rms = 1e-3;
  double impulse_rate_hz = 20.0;  // impulsive kind only
  double min_spacing_s = 0.1;     // between any two placed events
  double edge_margin_s = 0.06;
  std::uint64_t seed = 0;

  void validate() const;
  /// `key = value` lines; ranges are written `lo, hi`.
  static SynthSpec parse(const std::string& text);
  static SynthSpec load(const std::filesystem::path& path);
};

struct SynthClip {
  AudioClip clip;
  std::vector<Annotation> annotations;  // clicks as "train<k>", noise as "noise"
  std::vector<double> true_mps;  // aligned with annotations; 0 for single-pulse noise
};

/// Renders the spec. Trains are placed first; a train click that would land
/// within min_spacing_s of an already placed click is dropped. Noise
/// transients are then placed at random times; when one cannot be placed
/// after repeated tries the request is overcrowded and std::runtime_error is
/// thrown. The same spec always yields the same samples.
SynthClip synth_click_train(const SynthSpec& spec);

/// Population standard deviation of each sliding group of `group`
/// consecutive values. Throws when fewer than `group` values are given.
std::vector<double> sliding_group_sigma(std::span<const double> values, std::size_t group = 5);

struct Histogram {
  Eigen::VectorXd edges;  // bins + 1 edges
  Eigen::VectorXi counts;
};

Histogram make_histogram(std::span<const double> values, double lo, double hi, int bins);

/// Group-of-5 MPS sigma histogram over [0, hi).
Histogram mps_stability_histogram(std::span<const double> mps, double hi = 0.02, int bins = 40);

/// At least three annotated clicks sharing a source id inside [t_start, t_end).
bool buffer_is_positive(std::span<const Annotation> annotations, double t_start, double t_end);

struct LabeledUtility {
  std::optional<double> utility;
  std::optional<bool> positive;  // none = unlabeled
};

struct PRPoint {
  double u_t = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 1.0;
  double recall = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;
  /// `u_t,tp,fp,fn,precision,recall` with a header row.
  std::string to_csv() const;
};

/// Recomputes H0/H1 from the stored utilities for every threshold in the
/// grid. Precision is 1 when nothing is detected; recall is 0 when there
/// are no positives. Throws std::invalid_argument on an unlabeled buffer.
PRCurve pr_sweep(std::span<const LabeledUtility> buffers, std::span<const double> u_t_grid);

/// Count of H1 decisions divided by total_hours.
double false_alarms_per_hour(std::span<const DetectionReport> reports, double total_hours);
double false_alarms_per_hour(std::size_t detections, double total_hours);

/// 24-bit PCM RIFF/WAVE.
void write_audio(const AudioClip& clip, const std::filesystem::path& path);

}  // namespace mpscd

#endif  // MPSCD_EVAL_HPP_
