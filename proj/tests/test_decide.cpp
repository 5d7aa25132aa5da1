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

#include <cmath>
#include <functional>

#include <doctest.h>

#include "mpscd/decide.hpp"
#include "mpscd/eval.hpp"
#include "support.hpp"

using namespace mpscd;
using mpscd::testing::add_pulse;

namespace {

constexpr double kFs = 96000.0;

TimeBuffer buffer_of(AudioClip clip, std::size_t index = 0) {
  TimeBuffer b;
  b.index = index;
  b.duration = clip.duration();
  b.clip = std::move(clip);
  return b;
}

AudioClip background(std::uint64_t seed) {
  SynthSpec spec;
  spec.n_trains = 0;
  spec.seed = seed;
  return synth_click_train(spec).clip;
}

// Eight clicks at ICI 1.1 s with 8 kHz, 300 us pulses; mps_of(k) sets the
// inter-pulse delay of click k.
AudioClip eight_clicks(std::uint64_t seed, const std::function<double(int)>& mps_of) {
  AudioClip clip = background(seed);
  for (int k = 0; k < 8; ++k) {
    const double t = 0.9 + 1.1 * k;
    add_pulse(clip.samples, kFs, t, 8000.0, 300e-6, 0.05);
    add_pulse(clip.samples, kFs, t + mps_of(k), 8000.0, 300e-6, 0.035);
  }
  return clip;
}

// Two disjoint four-click runs, stable MPS, equal intensities: the exact
// optimum for eight evenly spaced clicks.
const double kFragmentedOptimum = 0.5 + 2.0 * std::exp(-4.0);

}  // namespace

TEST_CASE("threshold_decision") {
  CHECK(threshold_decision(std::nullopt, 1.5) == Decision::kNoise);
  CHECK(threshold_decision(1.5, 1.5) == Decision::kNoise);
  CHECK(threshold_decision(std::nextafter(1.5, 0.0), 1.5) == Decision::kSignal);
  CHECK(std::string(to_string(Decision::kNoise)) == "H0_noise");
  CHECK(std::string(to_string(Decision::kSignal)) == "H1_signal");
}

TEST_CASE("threshold_decision is monotone in u_t") {
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const std::optional<double> u = rng.uniform() < 0.2 ? std::nullopt : std::optional<double>(rng.uniform(0.0, 3.0));
    bool seen_signal = false;
    for (double u_t = 0.01; u_t < 3.5; u_t += 0.01) {
      const bool s = threshold_decision(u, u_t) == Decision::kSignal;
      CHECK(!(seen_signal && !s));
      seen_signal = seen_signal || s;
    }
  }
}

TEST_CASE("noise-only buffer gives H0 without a utility") {
  const Config cfg;
  const DetectionReport r = detect_buffer(buffer_of(background(1)), cfg);
  CHECK(r.decision == Decision::kNoise);
  CHECK_FALSE(r.utility);
  CHECK(r.clusters.k() == 0);
  CHECK(r.config_hash == cfg.hash());
}

TEST_CASE("buffers too short for the filter give H0") {
  const DetectionReport r = detect_buffer(buffer_of(AudioClip{Signal::Zero(2), kFs, 0.0}), Config{});
  CHECK(r.decision == Decision::kNoise);
  CHECK(r.counts.transients == 0);
}

TEST_CASE("eight-click train with fixed MPS is detected") {
  Config cfg;
  cfg.u_t = 1.0 + cfg.clustering.alpha1 * std::exp(-8.0) + 1e-9;
  const DetectionReport r = detect_buffer(buffer_of(eight_clicks(2, [](int) { return 4e-3; })), cfg);
  CHECK(r.counts.transients == 8);
  CHECK(r.counts.mps == 8);
  REQUIRE(r.utility);
  CHECK(r.decision == Decision::kSignal);
  // Background noise moves each peak by a few samples on the flat TKEO top.
  for (const auto& m : r.series.measurements) CHECK(std::abs(m.rho_mps - 4e-3) <= 0.15e-3);
  // Splitting the train into two runs beats keeping it whole.
  CHECK(*r.utility == doctest::Approx(kFragmentedOptimum).epsilon(0.01));
  CHECK(r.counts.members_verified == r.counts.members_checked);
}

TEST_CASE("eight clicks with random MPS are rejected at a tight threshold") {
  Config cfg;
  cfg.u_t = kFragmentedOptimum + 0.004;
  const DetectionReport fixed = detect_buffer(buffer_of(eight_clicks(3, [](int) { return 4e-3; })), cfg);
  CHECK(fixed.decision == Decision::kSignal);

  int rejected = 0;
  const int seeds = 200;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(1000 + seed);
    std::vector<double> mps(8);
    for (auto& v : mps) v = rng.uniform(0.0, 0.040);
    const AudioClip clip = eight_clicks(seed, [&](int k) { return mps[k]; });
    if (detect_buffer(buffer_of(clip), cfg).decision == Decision::kNoise) ++rejected;
  }
  CHECK(rejected >= 0.95 * seeds);
}

TEST_CASE("detect_buffer is deterministic and its counts are consistent") {
  SynthSpec spec;
  spec.n_trains = 2;
  spec.n_noise_transients = 10;
  spec.seed = 12;
  const SynthClip synth = synth_click_train(spec);
  const Config cfg;
  const DetectionReport a = detect_buffer(buffer_of(synth.clip, 3), cfg);
  const DetectionReport b = detect_buffer(buffer_of(synth.clip, 3), cfg);
  CHECK(report_to_json(a).dump() == report_to_json(b).dump());
  CHECK(a.buffer_index == 3);
  CHECK(a.counts.mps <= a.counts.transients);
  CHECK(a.counts.transients <= cfg.roi.max_count);
  CHECK(a.counts.members_verified <= a.counts.members_checked);
  CHECK(a.counts.clusters <= a.counts.clusters_before_verification);
  if (a.decision == Decision::kSignal) {
    REQUIRE(a.utility);
    CHECK(*a.utility < cfg.u_t);
    CHECK(a.clusters.k() >= 1);
  }

  // Raising the threshold never turns a detection into a rejection.
  Config high = cfg;
  high.u_t = 2.0 * cfg.u_t;
  if (a.decision == Decision::kSignal) CHECK(detect_buffer(buffer_of(synth.clip, 3), high).decision == Decision::kSignal);
}

TEST_CASE("report JSON carries the documented fields") {
  const Config cfg;
  const DetectionReport r = detect_buffer(buffer_of(eight_clicks(5, [](int) { return 5e-3; }), 7), cfg);
  const nlohmann::json j = report_to_json(r);
  for (const char* key : {"buffer_index", "t_start_s", "decision", "utility", "n_transients", "n_mps", "clusters",
                          "config_hash"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["buffer_index"] == 7);
  CHECK(j["decision"] == "H1_signal");
  REQUIRE(j["clusters"].is_array());
  REQUIRE(!j["clusters"].empty());
  const auto& c = j["clusters"][0];
  CHECK(c["size"] == c["members_t_s"].size());
  CHECK(c["mps_s"].size() == c["members_t_s"].size());
  CHECK(j["config_hash"] == cfg.hash());

  const nlohmann::json h0 = report_to_json(detect_buffer(buffer_of(background(6)), cfg));
  CHECK(h0["utility"].is_null());
  CHECK(h0["decision"] == "H0_noise");
}

TEST_CASE("detect_buffers returns reports in buffer order for any job count") {
  SynthSpec spec;
  spec.duration_s = 30.0;
  spec.n_trains = 1;
  spec.n_noise_transients = 6;
  spec.seed = 41;
  const auto buffers = segment_buffers(synth_click_train(spec).clip, 10.0, 10.0);
  REQUIRE(buffers.size() == 3);
  const Config cfg;
  const auto one = detect_buffers(buffers, cfg, 1);
  const auto three = detect_buffers(buffers, cfg, 3);
  REQUIRE(one.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(one[i].buffer_index == i);
    CHECK(report_to_json(one[i]).dump() == report_to_json(three[i]).dump());
  }
}
