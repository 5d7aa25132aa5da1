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

#include "mpscd/mps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpscd {

Eigen::VectorXd MpsSeries::times() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(measurements.size()));
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = measurements[i].event.peak_time;
  }
  return v;
}

Eigen::VectorXd MpsSeries::mps_values() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(measurements.size()));
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = measurements[i].rho_mps;
  }
  return v;
}

Eigen::VectorXd MpsSeries::intensities() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(measurements.size()));
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = measurements[i].event.peak_intensity;
  }
  return v;
}

std::optional<MpsMeasurement> measure_mps(const RoiSegment& roi, double intra_min_sep) {
  const auto& s = roi.enhanced.values;
  const Eigen::Index n = s.size();
  if (n == 0) throw std::invalid_argument("measure_mps: empty ROI");

  std::vector<Eigen::Index> peaks;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (s[i] > s[i - 1] && s[i] >= s[i + 1]) peaks.push_back(i);
  }
  if (peaks.size() < 2) return std::nullopt;
  // Ties resolve toward the earlier peak.
  std::stable_sort(peaks.begin(), peaks.end(), [&](Eigen::Index a, Eigen::Index b) { return s[a] > s[b]; });

  const auto min_sep = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(intra_min_sep * roi.enhanced.sample_rate)));
  const Eigen::Index p1 = peaks.front();
  const auto p2 = std::find_if(peaks.begin() + 1, peaks.end(),
                               [&](Eigen::Index p) { return std::abs(p - p1) >= min_sep; });
  if (p2 == peaks.end()) return std::nullopt;

  MpsMeasurement m;
  m.t_p1 = roi.enhanced.time_at(p1);
  m.t_p2 = roi.enhanced.time_at(*p2);
  m.rho_mps = static_cast<double>(std::abs(*p2 - p1)) / roi.enhanced.sample_rate;
  m.event = roi.event;
  return m;
}

MpsSeries build_series(std::span<const RoiSegment> rois, double intra_min_sep) {
  MpsSeries series;
  for (std::size_t i = 0; i < rois.size(); ++i) {
    if (i > 0 && !(rois[i].event.peak_time > rois[i - 1].event.peak_time)) {
      throw std::invalid_argument("build_series: ROIs must be strictly time-ordered");
    }
    if (auto m = measure_mps(rois[i], intra_min_sep)) {
      m->roi_index = i;
      series.measurements.push_back(*m);
    }
  }
  return series;
}

}  // namespace mpscd
