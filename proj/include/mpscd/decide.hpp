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

// Per-buffer detection pipeline and the final noise/signal decision.

#ifndef MPSCD_DECIDE_HPP_
#define MPSCD_DECIDE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpscd/cluster.hpp"
#include "mpscd/config.hpp"
#include "mpscd/ingest.hpp"
#include "mpscd/mps.hpp"
#include "mpscd/roi.hpp"

namespace mpscd {

enum class Decision { kNoise, kSignal };  // H0, H1

const char* to_string(Decision d);

struct StageCounts {
  std::size_t transients = 0;
  std::size_t mps = 0;
  std::size_t feasible_subsets = 0;
  std::size_t clusters_before_verification = 0;
  std::size_t members_checked = 0;
  std::size_t members_verified = 0;
  std::size_t clusters = 0;
};

struct DetectionReport {
  std::size_t buffer_index = 0;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::string source;
  Decision decision = Decision::kNoise;
  std::optional<double> utility;
  ClusterSolution clusters;  // after verification and pruning
  std::vector<TransientEvent> events;
  MpsSeries series;
  StageCounts counts;
  bool exact_solver = false;
  std::string config_hash;
};

/// H1 iff a utility exists and lies strictly below u_t.
Decision threshold_decision(std::optional<double> utility, double u_t);

/// bandpass -> TKEO -> transients -> ROIs -> MPS -> clustering ->
/// verification -> pruning -> threshold. Empty intermediate stages give H0.
DetectionReport detect_buffer(const TimeBuffer& buffer, const Config& cfg);

/// Runs detect_buffer over every buffer on `jobs` worker threads. Reports are
/// returned in buffer order whatever the completion order.
std::vector<DetectionReport> detect_buffers(std::span<const TimeBuffer> buffers, const Config& cfg,
                                            int jobs = 1);

/// One JSON-lines record: buffer_index, t_start_s, decision, utility,
/// n_transients, n_mps, clusters, config_hash, plus audit fields.
nlohmann::json report_to_json(const DetectionReport& report);

}  // namespace mpscd

#endif  // MPSCD_DECIDE_HPP_
