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

#include "mpscd/decide.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "mpscd/dsp.hpp"
#include "mpscd/verify.hpp"

namespace mpscd {

const char* to_string(Decision d) { return d == Decision::kSignal ? "H1_signal" : "H0_noise"; }

Decision threshold_decision(std::optional<double> utility, double u_t) {
  return utility && *utility < u_t ? Decision::kSignal : Decision::kNoise;
}

DetectionReport detect_buffer(const TimeBuffer& buffer, const Config& cfg) {
  DetectionReport report;
  report.buffer_index = buffer.index;
  report.t_start_s = buffer.t_start();
  report.t_end_s = buffer.t_end();
  report.config_hash = cfg.hash();
  if (buffer.clip.size() < 3) return report;

  const AudioClip filtered = bandpass(buffer.clip, cfg.band.f_lo, cfg.band.f_hi, cfg.band.order);
  const EnhancedSignal enh = tkeo(filtered);

  report.events = detect_transients(enh, cfg.roi);
  report.counts.transients = report.events.size();
  std::vector<RoiSegment> rois;
  rois.reserve(report.events.size());
  for (const auto& e : report.events) rois.push_back(extract_roi(filtered, enh, e));

  report.series = build_series(rois, cfg.intra_min_sep);
  report.counts.mps = report.series.size();

  const ClusterInput input = ClusterInput::from_series(report.series);
  const ClusterSolution raw = solve_clustering(input, cfg.clustering);
  report.exact_solver = raw.exact;
  report.counts.feasible_subsets = raw.feasible_count;
  report.counts.clusters_before_verification = raw.k();

  std::vector<bool> verdicts(report.series.size(), false);
  const SuperletParams superlet = cfg.superlet.params(buffer.clip.sample_rate);
  for (const auto& cluster : raw.clusters) {
    for (const std::size_t i : cluster.members) {
      const MpsMeasurement& m = report.series.measurements[i];
      const RoiSegment& roi = rois[m.roi_index];
      ++report.counts.members_checked;
      try {
        const PulseFeatures f1 = extract_pulse_features(roi, m.t_p1, superlet, cfg.pulse_half_width);
        const PulseFeatures f2 = extract_pulse_features(roi, m.t_p2, superlet, cfg.pulse_half_width);
        verdicts[i] = verify_click(m, f1, f2, cfg.verification);
      } catch (const UnusablePulse&) {
        verdicts[i] = false;
      }
      if (verdicts[i]) ++report.counts.members_verified;
    }
  }

  report.clusters = prune_clusters(raw, verdicts, input, cfg.clustering);
  report.counts.clusters = report.clusters.k();
  report.utility = report.clusters.utility;
  report.decision = threshold_decision(report.utility, cfg.u_t);
  return report;
}

std::vector<DetectionReport> detect_buffers(std::span<const TimeBuffer> buffers, const Config& cfg,
                                            int jobs) {
  std::vector<DetectionReport> reports(buffers.size());
  std::vector<std::exception_ptr> errors(buffers.size());
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < buffers.size(); i = next++) {
      try {
        reports[i] = detect_buffer(buffers[i], cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1 || buffers.size() < 2) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, buffers.size()); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reports;
}

nlohmann::json report_to_json(const DetectionReport& report) {
  using nlohmann::json;
  json clusters = json::array();
  for (const auto& c : report.clusters.clusters) {
    json times = json::array();
    json mps = json::array();
    for (const std::size_t i : c.members) {
      times.push_back(report.series.measurements[i].event.peak_time);
      mps.push_back(report.series.measurements[i].rho_mps);
    }
    clusters.push_back({{"members_t_s", times}, {"mps_s", mps}, {"size", c.size()}});
  }
  json j;
  j["buffer_index"] = report.buffer_index;
  j["t_start_s"] = report.t_start_s;
  j["decision"] = to_string(report.decision);
  j["utility"] = report.utility ? json(*report.utility) : json(nullptr);
  j["n_transients"] = report.counts.transients;
  j["n_mps"] = report.counts.mps;
  j["clusters"] = std::move(clusters);
  j["config_hash"] = report.config_hash;
  j["t_end_s"] = report.t_end_s;
  if (!report.source.empty()) j["source"] = report.source;
  j["n_feasible_subsets"] = report.counts.feasible_subsets;
  j["n_clusters_before_verification"] = report.counts.clusters_before_verification;
  j["n_members_checked"] = report.counts.members_checked;
  j["n_members_verified"] = report.counts.members_verified;
  j["solver"] = report.exact_solver ? "exact" : "greedy";
  return j;
}

}  // namespace mpscd
