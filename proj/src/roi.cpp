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

#include "mpscd/roi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace mpscd {

double estimate_noise_floor(const EnhancedSignal& enh) {
  const Eigen::Index n = enh.size();
  if (n == 0) throw std::invalid_argument("estimate_noise_floor: empty signal");
  std::vector<double> v(enh.values.data(), enh.values.data() + n);
  const auto mid = v.begin() + n / 2;
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

std::vector<TransientEvent> detect_transients(const EnhancedSignal& enh, const RoiParams& params) {
  const Eigen::Index n = enh.size();
  if (n == 0) throw std::invalid_argument("detect_transients: empty signal");
  std::vector<TransientEvent> events;
  if (n < 3 || params.max_count == 0) return events;

  // A non-positive median (silence) would make every ratio undefined.
  const double floor =
      std::max(estimate_noise_floor(enh), std::numeric_limits<double>::min());
  const double ratio_min = std::pow(10.0, params.snr_threshold_db / 10.0);
  const auto guard = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(params.edge_guard * enh.sample_rate)));
  const auto min_sep = static_cast<Eigen::Index>(std::llround(params.min_separation * enh.sample_rate));

  const auto& s = enh.values;
  std::vector<Eigen::Index> candidates;
  for (Eigen::Index i = guard; i < n - guard; ++i) {
    if (s[i] > s[i - 1] && s[i] >= s[i + 1] && s[i] > 0.0 && s[i] / floor >= ratio_min) {
      candidates.push_back(i);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return s[a] > s[b]; });

  std::set<Eigen::Index> accepted;
  for (const Eigen::Index i : candidates) {
    if (accepted.size() >= params.max_count) break;
    const auto next = accepted.lower_bound(i);
    if (next != accepted.end() && *next - i < min_sep) continue;
    if (next != accepted.begin() && i - *std::prev(next) < min_sep) continue;
    accepted.insert(i);
  }

  for (const Eigen::Index i : accepted) {
    TransientEvent e;
    e.peak_time = enh.time_at(i);
    e.peak_intensity = s[i];
    e.snr_db = 10.0 * std::log10(s[i] / floor);
    e.t_start = e.peak_time - params.roi_pre;
    e.t_end = e.peak_time + params.roi_post;
    events.push_back(e);
  }
  return events;
}

RoiSegment extract_roi(const AudioClip& waveform, const EnhancedSignal& enh,
                       const TransientEvent& event) {
  if (waveform.size() != enh.size()) {
    throw std::invalid_argument("extract_roi: waveform and enhanced signal differ in length");
  }
  const double fs = enh.sample_rate;
  const Eigen::Index n = enh.size();
  const auto first = static_cast<Eigen::Index>(std::ceil((event.t_start - enh.origin_time) * fs - 1e-9));
  const auto last = static_cast<Eigen::Index>(std::floor((event.t_end - enh.origin_time) * fs + 1e-9));
  const Eigen::Index lo = std::max<Eigen::Index>(0, first);
  const Eigen::Index hi = std::min<Eigen::Index>(n - 1, last);
  if (n == 0 || lo > hi) throw std::out_of_range("extract_roi: event window lies outside the buffer");

  RoiSegment roi;
  roi.enhanced = enh.slice(lo, hi - lo + 1);
  roi.raw = waveform.slice(lo, hi - lo + 1);
  roi.event = event;
  roi.event.t_start = enh.time_at(lo);
  roi.event.t_end = enh.time_at(hi);
  return roi;
}

}  // namespace mpscd
