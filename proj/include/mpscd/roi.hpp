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

// Dominant-transient detection on the enhanced signal and region-of-interest
// extraction around each transient.

#ifndef MPSCD_ROI_HPP_
#define MPSCD_ROI_HPP_

#include <cstddef>
#include <vector>

#include "mpscd/dsp.hpp"
#include "mpscd/ingest.hpp"

namespace mpscd {

struct TransientEvent {
  double peak_time = 0.0;       // s, absolute
  double peak_intensity = 0.0;  // enhanced-signal value at the peak
  double snr_db = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
};

struct RoiSegment {
  EnhancedSignal enhanced;
  AudioClip raw;  // band-passed waveform over the same window
  TransientEvent event;
};

struct RoiParams {
  double snr_threshold_db = 23.0;
  std::size_t max_count = 45;
  double min_separation = 0.050;
  double roi_pre = 0.005;
  double roi_post = 0.045;
  // Peaks closer than this to either end of the buffer are ignored.
  double edge_guard = 0.001;
};

/// Median of the enhanced signal over the buffer.
double estimate_noise_floor(const EnhancedSignal& enh);

/// Local maxima at least snr_threshold_db above the noise floor, accepted
/// greedily by descending intensity (earlier peak first on ties) subject to
/// the mutual separation, capped at max_count and returned in time order.
std::vector<TransientEvent> detect_transients(const EnhancedSignal& enh, const RoiParams& params);

/// Slices of the waveform and enhanced signal over the event window, clamped
/// to the buffer. Throws std::out_of_range when the window misses the buffer.
RoiSegment extract_roi(const AudioClip& waveform, const EnhancedSignal& enh,
                       const TransientEvent& event);

}  // namespace mpscd

#endif  // MPSCD_ROI_HPP_
