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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include <doctest.h>

#include "mpscd/eval.hpp"
#include "support.hpp"

using namespace mpscd;
using mpscd::testing::TempDir;

namespace {

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("synthesis is deterministic per seed") {
  TempDir dir("det");
  SynthSpec spec;
  spec.n_trains = 2;
  spec.n_noise_transients = 8;
  spec.seed = 77;
  write_audio(synth_click_train(spec).clip, dir / "a.wav");
  write_audio(synth_click_train(spec).clip, dir / "b.wav");
  CHECK(file_bytes(dir / "a.wav") == file_bytes(dir / "b.wav"));
  spec.seed = 78;
  write_audio(synth_click_train(spec).clip, dir / "c.wav");
  CHECK(file_bytes(dir / "a.wav") != file_bytes(dir / "c.wav"));
}

TEST_CASE("synthesis layout") {
  SUBCASE("noise only") {
    SynthSpec spec;
    spec.n_trains = 0;
    const SynthClip s = synth_click_train(spec);
    CHECK(s.annotations.empty());
    CHECK(s.clip.size() == 960000);
    double sq = s.clip.samples.squaredNorm() / static_cast<double>(s.clip.size());
    CHECK(std::sqrt(sq) == doctest::Approx(spec.noise_rms).epsilon(1e-9));
  }
  SUBCASE("one train without jitter has identical delays") {
    SynthSpec spec;
    spec.seed = 9;
    const SynthClip s = synth_click_train(spec);
    REQUIRE(s.annotations.size() >= 5);
    for (const double m : s.true_mps) CHECK(m == s.true_mps.front());
    for (std::size_t i = 1; i < s.annotations.size(); ++i) {
      const double gap = s.annotations[i].time_s - s.annotations[i - 1].time_s;
      CHECK(gap >= spec.ici_s.lo * 0.9);
      CHECK(gap <= spec.ici_s.hi * 1.1);
    }
  }
  SUBCASE("annotations are sorted and labelled by source") {
    SynthSpec spec;
    spec.n_trains = 2;
    spec.n_noise_transients = 10;
    spec.seed = 10;
    const SynthClip s = synth_click_train(spec);
    CHECK(std::is_sorted(s.annotations.begin(), s.annotations.end(),
                         [](const Annotation& a, const Annotation& b) { return a.time_s < b.time_s; }));
    CHECK(std::count_if(s.annotations.begin(), s.annotations.end(),
                        [](const Annotation& a) { return a.label == AnnotationLabel::kNoise; }) == 10);
    for (std::size_t i = 1; i < s.annotations.size(); ++i) {
      CHECK(s.annotations[i].time_s - s.annotations[i - 1].time_s >= spec.min_spacing_s);
    }
    for (const auto& a : s.annotations) {
      if (a.label == AnnotationLabel::kNoise) CHECK(a.source_id == "noise");
      else CHECK(a.source_id.starts_with("train"));
    }
  }
  SUBCASE("overcrowding is an error") {
    SynthSpec spec;
    spec.n_noise_transients = 200;
    CHECK_THROWS_WITH_AS(synth_click_train(spec), doctest::Contains("overcrowded"), std::runtime_error);
  }
  SUBCASE("impulsive background adds spikes") {
    SynthSpec spec;
    spec.n_trains = 0;
    spec.noise_kind = NoiseKind::kImpulsive;
    const SynthClip s = synth_click_train(spec);
    CHECK(s.clip.samples.cwiseAbs().maxCoeff() > 5.0 * spec.noise_rms);
  }
}

TEST_CASE("measured MPS tracks the generator within two samples at high SNR") {
  SynthSpec spec;
  spec.n_trains = 2;
  spec.mps_jitter_s = 0.5e-3;
  spec.click_snr_db = {60.0, 60.0};
  spec.noise_rms = 1e-4;
  spec.duration_s = 60.0;
  spec.seed = 15;
  const SynthClip s = synth_click_train(spec);
  const auto measured = mpscd::testing::measure_annotated(s);
  std::size_t clicks = 0;
  for (const auto& a : s.annotations) clicks += a.label == AnnotationLabel::kClick;
  std::size_t close = 0;
  for (std::size_t i = 0; i < measured.indices.size(); ++i) {
    close += std::abs(measured.mps[i] - s.true_mps[measured.indices[i]]) <= 2.0 / spec.sample_rate;
  }
  REQUIRE(clicks >= 100);
  CHECK(static_cast<double>(close) >= 0.95 * static_cast<double>(clicks));
}

TEST_CASE("synth spec text form") {
  const SynthSpec s = SynthSpec::parse(
      "# corpus\nn_trains = 2\nici_s = 0.8, 1.2\nmps_s = 3e-3\nnoise_kind = impulsive\nseed = 12\n");
  CHECK(s.n_trains == 2);
  CHECK(s.ici_s == Range{0.8, 1.2});
  CHECK(s.mps_s == Range{3e-3, 3e-3});
  CHECK(s.noise_kind == NoiseKind::kImpulsive);
  CHECK(s.seed == 12);
  CHECK_THROWS_WITH(SynthSpec::parse("n_trains = 1\nbogus = 3\n"), doctest::Contains("line 2"));
  CHECK_THROWS_WITH(SynthSpec::parse("ici_s = 2, 1\n"), doctest::Contains("ici_s"));
  CHECK_THROWS(SynthSpec::parse("n_trains = 1.5\n"));
  CHECK_THROWS(SynthSpec::parse("carrier_hz = 1000, 60000\n"));
}

TEST_CASE("group-of-five MPS sigma") {
  const std::vector<double> ramp = {1e-3, 2e-3, 3e-3, 4e-3, 5e-3};
  const auto s = sliding_group_sigma(ramp);
  REQUIRE(s.size() == 1);
  CHECK(s[0] == doctest::Approx(std::sqrt(2.0) * 1e-3));

  const std::vector<double> flat(12, 4e-3);
  const Histogram h = mps_stability_histogram(flat);
  CHECK(h.counts.sum() == 8);
  CHECK(h.counts[0] == 8);
  CHECK(h.edges.size() == 41);
  CHECK_THROWS(sliding_group_sigma(std::vector<double>(4, 1.0)));
}

TEST_CASE("histogram clamps out-of-range values to the end bins") {
  const std::vector<double> v = {-1.0, 0.05, 0.15, 0.95, 7.0};
  const Histogram h = make_histogram(v, 0.0, 1.0, 10);
  CHECK(h.counts[0] == 2);
  CHECK(h.counts[1] == 1);
  CHECK(h.counts[9] == 2);
  CHECK_THROWS(make_histogram(v, 1.0, 1.0, 10));
}

TEST_CASE("click groups have far smaller MPS sigma than noise groups") {
  SynthSpec clicks;
  clicks.duration_s = 60.0;
  clicks.n_trains = 1;
  clicks.ici_s = {0.6, 0.9};
  clicks.mps_jitter_s = 0.5e-3;
  clicks.seed = 5;
  SynthSpec noise;
  noise.duration_s = 60.0;
  noise.n_trains = 0;
  noise.n_noise_transients = 60;
  noise.noise_double_prob = 1.0;
  noise.noise_mps_s = {1e-3, 40e-3};
  noise.noise_snr_db = {30.0, 40.0};
  noise.min_spacing_s = 0.2;
  noise.seed = 6;
  const auto c = mpscd::testing::measure_annotated(synth_click_train(clicks));
  const auto n = mpscd::testing::measure_annotated(synth_click_train(noise), 0.05);
  REQUIRE(c.mps.size() >= 40);
  REQUIRE(n.mps.size() >= 40);
  CHECK(median(sliding_group_sigma(c.mps)) < 0.2 * median(sliding_group_sigma(n.mps)));
}

TEST_CASE("buffer positivity needs three clicks of one source") {
  const std::vector<Annotation> a = {{1.0, AnnotationLabel::kClick, "w1"},  {2.0, AnnotationLabel::kClick, "w2"},
                                     {3.0, AnnotationLabel::kClick, "w1"},  {4.0, AnnotationLabel::kNoise, "w1"},
                                     {5.0, AnnotationLabel::kClick, "w2"},  {6.0, AnnotationLabel::kClick, "w1"},
                                     {12.0, AnnotationLabel::kClick, "w2"}};
  CHECK(buffer_is_positive(a, 0.0, 10.0));
  CHECK_FALSE(buffer_is_positive(a, 0.0, 6.0));
  CHECK(buffer_is_positive(a, 2.0, 13.0));
  CHECK_FALSE(buffer_is_positive(a, 6.0, 20.0));
}

TEST_CASE("pr_sweep examples") {
  const std::vector<LabeledUtility> b = {{0.5, true}, {2.0, false}};
  const std::vector<double> grid = {0.0, 1.0};
  const PRCurve c = pr_sweep(b, grid);
  REQUIRE(c.points.size() == 2);
  CHECK(c.points[0].tp == 0);
  CHECK(c.points[0].precision == 1.0);
  CHECK(c.points[0].recall == 0.0);
  CHECK(c.points[1].tp == 1);
  CHECK(c.points[1].fp == 0);
  CHECK(c.points[1].fn == 0);
  CHECK(c.points[1].precision == 1.0);
  CHECK(c.points[1].recall == 1.0);
  CHECK(c.to_csv() == "u_t,tp,fp,fn,precision,recall\n0,0,0,1,1,0\n1,1,0,0,1,1\n");

  const std::vector<LabeledUtility> unlabeled = {{0.5, true}, {0.7, std::nullopt}};
  CHECK_THROWS_AS(pr_sweep(unlabeled, grid), std::invalid_argument);
}

TEST_CASE("pr_sweep matches an independent tally") {
  Rng rng(200);
  std::vector<LabeledUtility> b;
  for (int i = 0; i < 200; ++i) {
    const bool pos = i % 2 == 0;
    std::optional<double> u;
    if (rng.uniform() < 0.8) u = pos ? rng.uniform(0.2, 1.4) : rng.uniform(0.9, 3.0);
    b.push_back({u, pos});
  }
  std::vector<double> grid;
  for (int i = 0; i <= 300; ++i) grid.push_back(0.01 * i);
  const PRCurve c = pr_sweep(b, grid);
  long prev_tp = -1;
  double prev_recall = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    long tp = 0, fp = 0, fn = 0;
    for (const auto& x : b) {
      const bool hit = x.utility.has_value() && x.utility.value() < grid[g];
      tp += hit && *x.positive;
      fp += hit && !*x.positive;
      fn += !hit && *x.positive;
    }
    const PRPoint& p = c.points[g];
    CHECK(p.tp == tp);
    CHECK(p.fp == fp);
    CHECK(p.fn == fn);
    if (tp + fp > 0) CHECK(p.precision * static_cast<double>(tp + fp) == doctest::Approx(static_cast<double>(tp)));
    CHECK(p.precision >= 0.0);
    CHECK(p.precision <= 1.0);
    CHECK(p.recall >= prev_recall);
    CHECK(p.tp + p.fp >= prev_tp);
    prev_recall = p.recall;
    prev_tp = p.tp + p.fp;
  }
}

TEST_CASE("false alarms per hour") {
  CHECK(false_alarms_per_hour(std::size_t{0}, 7.0) == 0.0);
  CHECK(false_alarms_per_hour(std::size_t{3}, 12.0) == 0.25);
  CHECK_THROWS_AS(false_alarms_per_hour(std::size_t{1}, 0.0), std::invalid_argument);
  std::vector<DetectionReport> r(4);
  r[1].decision = Decision::kSignal;
  r[3].decision = Decision::kSignal;
  CHECK(false_alarms_per_hour(r, 0.5) == 4.0);
}
