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

// Multi-pulse structure: the delay between the two most intense pulses of a
// region of interest.

#ifndef MPSCD_MPS_HPP_
#define MPSCD_MPS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mpscd/roi.hpp"

namespace mpscd {

struct MpsMeasurement {
  double rho_mps = 0.0;  // |t_p1 - t_p2|, seconds
  double t_p1 = 0.0;     // highest enhanced-signal peak
  double t_p2 = 0.0;     // second highest
  TransientEvent event;
  std::size_t roi_index = 0;  // position of the source ROI in the caller's list
};

struct MpsSeries {
  std::vector<MpsMeasurement> measurements;

  std::size_t size() const { return measurements.size(); }
  bool empty() const { return measurements.empty(); }
  /// Click arrival times (event peaks).
  Eigen::VectorXd times() const;
  Eigen::VectorXd mps_values() const;
  Eigen::VectorXd intensities() const;
};

constexpr double kDefaultIntraMinSeparation = 0.5e-3;

/// Returns none when the ROI holds fewer than two local maxima that are at
/// least intra_min_sep apart.
std::optional<MpsMeasurement> measure_mps(const RoiSegment& roi,
                                          double intra_min_sep = kDefaultIntraMinSeparation);

MpsSeries build_series(std::span<const RoiSegment> rois,
                       double intra_min_sep = kDefaultIntraMinSeparation);

}  // namespace mpscd

#endif  // MPSCD_MPS_HPP_
