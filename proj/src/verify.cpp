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

#include "mpscd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace mpscd {
namespace {

// Time of the half-power crossing between two rows, by linear interpolation.
double crossing(double t_below, double p_below, double t_above, double p_above, double level) {
  if (p_above == p_below) return t_above;
  return t_below + (level - p_below) / (p_above - p_below) * (t_above - t_below);
}

}  // namespace

PulseFeatures extract_pulse_features(const RoiSegment& roi, double pulse_time,
                                     const SuperletParams& params, double half_width) {
  const AudioClip& raw = roi.raw;
  if (raw.size() == 0) throw std::invalid_argument("extract_pulse_features: empty ROI");
  if (pulse_time < raw.origin_time - 1e-12 || pulse_time > raw.time_at(raw.size() - 1) + 1e-12) {
    throw std::invalid_argument("extract_pulse_features: pulse time outside the ROI");
  }
  const double fs = raw.sample_rate;
  const std::vector<int> orders = superlet_orders(params);
  double widest = 0.0;
  for (std::size_t j = 0; j < params.freqs.size(); ++j) {
    widest = std::max(widest, morlet_sigma_t(orders[j] * params.base_cycles, params.freqs[j]));
  }
  const double reach = half_width + 4.0 * widest;

  const auto center = static_cast<Eigen::Index>(std::llround((pulse_time - raw.origin_time) * fs));
  const auto side = static_cast<Eigen::Index>(std::ceil(reach * fs));
  const Eigen::Index first = center - side;
  AudioClip window;
  window.sample_rate = fs;
  window.origin_time = raw.time_at(first);
  window.samples = Signal::Zero(2 * side + 1);
  for (Eigen::Index i = 0; i < window.size(); ++i) {
    const Eigen::Index src = first + i;
    if (src >= 0 && src < raw.size()) window.samples[i] = raw.samples[src];
  }

  const Spectrogram spec = superlet_spectrogram(window, params);
  Eigen::Index r0 = -1;
  Eigen::Index r1 = -1;
  for (Eigen::Index r = 0; r < spec.time_axis.size(); ++r) {
    if (std::abs(spec.time_axis[r] - pulse_time) <= half_width + 1e-12) {
      if (r0 < 0) r0 = r;
      r1 = r;
    }
  }
  if (r0 < 0) throw UnusablePulse("extract_pulse_features: empty analysis slice");
  const auto block = spec.power.middleRows(r0, r1 - r0 + 1);

  Eigen::Index row = 0;
  Eigen::Index col = 0;
  const double peak = block.maxCoeff(&row, &col);
  const double low = block.minCoeff();
  if (!(peak > 1e-30) || peak - low <= 1e-9 * peak) {
    throw UnusablePulse("extract_pulse_features: flat spectrogram around pulse");
  }

  const auto line = block.col(col);
  const auto times = spec.time_axis.segment(r0, r1 - r0 + 1);
  const double level = 0.5 * peak;
  double t_left = times[0];
  for (Eigen::Index r = row; r > 0; --r) {
    if (line[r - 1] < level) {
      t_left = crossing(times[r - 1], line[r - 1], times[r], line[r], level);
      break;
    }
  }
  double t_right = times[times.size() - 1];
  for (Eigen::Index r = row; r + 1 < line.size(); ++r) {
    if (line[r + 1] < level) {
      t_right = crossing(times[r + 1], line[r + 1], times[r], line[r], level);
      break;
    }
  }
  return {t_right - t_left, spec.freq_axis[col]};
}

bool verify_click(const MpsMeasurement& m, const PulseFeatures& f1, const PulseFeatures& f2,
                  const VerificationThresholds& th) {
  return m.rho_mps <= th.rho_mps_max && std::max(f1.rho_d, f2.rho_d) <= th.d_max &&
         std::max(f1.rho_f, f2.rho_f) <= th.f_max;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: no data");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double joint_tail(std::span<const PulseFeatures> features, double d_max, double f_max) {
  if (features.empty()) return 0.0;
  std::size_t count = 0;
  for (const auto& f : features) {
    if (f.rho_d > d_max && f.rho_f > f_max) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(features.size());
}

CalibrationResult calibrate_thresholds(std::span<const PulseFeatures> features, double target_p) {
  if (!(target_p > 0.0) || !(target_p < 1.0)) throw std::invalid_argument("calibrate_thresholds: target_p must lie in (0, 1)");
  if (features.empty()) throw std::invalid_argument("calibrate_thresholds: no features");
  if (features.size() < 100) {
    std::clog << "warning: calibrating from only " << features.size() << " clicks (100 or more recommended)\n";
  }
  std::vector<double> durations;
  std::vector<double> freqs;
  for (const auto& f : features) {
    durations.push_back(f.rho_d);
    freqs.push_back(f.rho_f);
  }
  std::sort(durations.begin(), durations.end());
  std::sort(freqs.begin(), freqs.end());
  auto tail_at = [&](double q) {
    return joint_tail(features, empirical_quantile(durations, q), empirical_quantile(freqs, q));
  };

  double lo = 0.5;
  double hi = 1.0;
  const double max_tail = tail_at(lo);
  if (max_tail < target_p) {
    std::ostringstream msg;
    msg << "calibrate_thresholds: target_p " << target_p << " unattainable; achievable joint tail is (0, "
        << max_tail << "]";
    throw std::invalid_argument(msg.str());
  }
  // Invariant: tail(lo) >= target_p > tail(hi).
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (tail_at(mid) >= target_p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double q = std::abs(tail_at(lo) - target_p) <= std::abs(tail_at(hi) - target_p) ? lo : hi;

  CalibrationResult r;
  r.quantile = q;
  r.d_max = empirical_quantile(durations, q);
  r.f_max = empirical_quantile(freqs, q);
  r.target_p = target_p;
  r.achieved_p = joint_tail(features, r.d_max, r.f_max);
  r.sample_count = features.size();
  return r;
}

ClusterSolution prune_clusters(const ClusterSolution& sol, const std::vector<bool>& verdicts,
                               const ClusterInput& input, const ClusteringConfig& cfg) {
  ClusterSolution out;
  out.exact = sol.exact;
  out.feasible_count = sol.feasible_count;
  std::vector<bool> assigned(input.size(), false);
  for (const auto& c : sol.clusters) {
    std::vector<std::size_t> kept;
    for (const std::size_t i : c.members) {
      if (i >= verdicts.size()) throw std::invalid_argument("prune_clusters: verdicts do not cover every member");
      if (verdicts[i]) kept.push_back(i);
    }
    if (!is_feasible(kept, input.times, cfg)) continue;
    for (const std::size_t i : kept) assigned[i] = true;
    out.clusters.push_back(make_assignment(std::move(kept), input.times));
  }
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (!assigned[i]) out.unassigned.push_back(i);
  }
  if (!out.clusters.empty()) out.utility = cluster_utility(out.clusters, input, cfg);
  return out;
}

}  // namespace mpscd
