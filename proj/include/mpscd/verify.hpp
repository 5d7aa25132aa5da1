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

// Per-click verification of clustered MPS measurements: MPS ceiling, pulse
// duration and dominant frequency.

#ifndef MPSCD_VERIFY_HPP_
#define MPSCD_VERIFY_HPP_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mpscd/cluster.hpp"
#include "mpscd/dsp.hpp"
#include "mpscd/mps.hpp"
#include "mpscd/roi.hpp"

namespace mpscd {

struct PulseFeatures {
  double rho_d = 0.0;  // s, half-power duration at the dominant frequency
  double rho_f = 0.0;  // Hz, dominant frequency
};

struct VerificationThresholds {
  double rho_mps_max = 0.040;
  // Placeholders until calibrate_thresholds has been run on labelled data.
  double d_max = 1.0e-3;
  double f_max = 20.0e3;
  double target_p = 0.05;
  bool calibrated = false;
};

/// Raised when a pulse slice has no usable time-frequency peak.
class UnusablePulse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Superlet features of the pulse at pulse_time. The spectrogram covers
/// pulse_time +- half_width; samples missing from the ROI are taken as zero.
PulseFeatures extract_pulse_features(const RoiSegment& roi, double pulse_time,
                                     const SuperletParams& params, double half_width = 3e-3);

bool verify_click(const MpsMeasurement& m, const PulseFeatures& f1, const PulseFeatures& f2,
                  const VerificationThresholds& th);

struct CalibrationResult {
  double d_max = 0.0;
  double f_max = 0.0;
  double target_p = 0.0;
  double quantile = 0.0;    // common quantile level q
  double achieved_p = 0.0;  // empirical joint tail at (d_max, f_max)
  std::size_t sample_count = 0;
};

/// Linear-interpolation (type 7) quantile of unsorted data.
double empirical_quantile(std::vector<double> values, double q);

/// Fraction of samples with rho_d > d_max and rho_f > f_max.
double joint_tail(std::span<const PulseFeatures> features, double d_max, double f_max);

/// Sets d_max and f_max to the q-quantiles of duration and frequency, with
/// q in [0.5, 1) solved by bisection so the empirical joint tail matches
/// target_p. Throws std::invalid_argument when target_p is unattainable.
CalibrationResult calibrate_thresholds(std::span<const PulseFeatures> features, double target_p);

/// Drops members whose verdict is false. Clusters that fall below the
/// minimum size or violate the ICI constraints afterwards are dissolved and
/// the utility is recomputed over the survivors.
ClusterSolution prune_clusters(const ClusterSolution& sol, const std::vector<bool>& verdicts,
                               const ClusterInput& input, const ClusteringConfig& cfg);

}  // namespace mpscd

#endif  // MPSCD_VERIFY_HPP_
