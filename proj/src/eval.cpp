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

#include "mpscd/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "mpscd/dsp.hpp"

namespace mpscd {
namespace {

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void check_range(const Range& r, const char* name, bool positive = false) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi || (positive && !(r.lo > 0.0))) {
    throw std::invalid_argument(std::string("synth spec: invalid range ") + name);
  }
}

struct Pulse {
  double center = 0.0;
  double amplitude = 0.0;
  double carrier = 0.0;
  double width = 0.0;  // half-power width of the envelope
  double phase = 0.0;
};

void render(const Pulse& p, Signal& x, double fs) {
  const double s = p.width / (2.0 * std::sqrt(std::numbers::ln2));
  const double w = 2.0 * std::numbers::pi * p.carrier;
  const auto first = static_cast<Eigen::Index>(std::floor((p.center - 5.0 * s) * fs));
  const auto last = static_cast<Eigen::Index>(std::ceil((p.center + 5.0 * s) * fs));
  for (Eigen::Index i = std::max<Eigen::Index>(first, 0); i <= std::min<Eigen::Index>(last, x.size() - 1); ++i) {
    const double t = static_cast<double>(i) / fs - p.center;
    x[i] += p.amplitude * std::exp(-0.5 * t * t / (s * s)) * std::sin(w * t + p.phase);
  }
}

// Tone amplitude whose enhanced-signal peak sits snr_db above the floor.
double amplitude_for(double snr_db, double floor, double carrier, double fs) {
  const double sw = std::sin(2.0 * std::numbers::pi * carrier / fs);
  return std::sqrt(std::pow(10.0, snr_db / 10.0) * floor / (sw * sw));
}

bool too_close(const std::vector<double>& placed, double t, double spacing) {
  return std::any_of(placed.begin(), placed.end(), [&](double u) { return std::abs(u - t) < spacing; });
}

Range parse_range(std::string_view v, const std::string& key) {
  auto number = [&](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw std::invalid_argument("synth spec: " + key + " expects a number or 'lo, hi'");
    }
    return out;
  };
  const auto comma = v.find(',');
  if (comma == std::string_view::npos) {
    const double x = number(v);
    return {x, x};
  }
  return {number(v.substr(0, comma)), number(v.substr(comma + 1))};
}

}  // namespace

double Rng::normal() {
  // Box-Muller; one draw per call keeps the stream position simple.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SynthSpec::validate() const {
  if (!(sample_rate > 0.0) || !(duration_s > 0.0)) throw std::invalid_argument("synth spec: sample_rate and duration_s must be > 0");
  if (n_trains < 0 || n_noise_transients < 0) throw std::invalid_argument("synth spec: counts must be >= 0");
  check_range(ici_s, "ici_s", true);
  check_range(mps_s, "mps_s", true);
  check_range(click_snr_db, "click_snr_db");
  check_range(carrier_hz, "carrier_hz", true);
  check_range(pulse_width_s, "pulse_width_s", true);
  check_range(second_pulse_gain, "second_pulse_gain", true);
  check_range(noise_snr_db, "noise_snr_db");
  check_range(noise_mps_s, "noise_mps_s", true);
  check_range(noise_carrier_hz, "noise_carrier_hz", true);
  check_range(noise_width_s, "noise_width_s", true);
  if (std::max(carrier_hz.hi, noise_carrier_hz.hi) >= 0.5 * sample_rate) {
    throw std::invalid_argument("synth spec: carriers must lie below the Nyquist frequency");
  }
  if (!(ici_jitter >= 0.0) || !(mps_jitter_s >= 0.0) || !(noise_rms > 0.0) || !(impulse_rate_hz >= 0.0)) {
    throw std::invalid_argument("synth spec: jitters and rates must be >= 0, noise_rms > 0");
  }
  for (const double p : {third_pulse_prob, noise_double_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("synth spec: probabilities must lie in [0, 1]");
  }
  if (!(min_spacing_s >= 0.0) || !(edge_margin_s >= 0.0) || 2.0 * edge_margin_s >= duration_s) {
    throw std::invalid_argument("synth spec: invalid spacing or edge margin");
  }
}

SynthSpec SynthSpec::parse(const std::string& text) {
  SynthSpec s;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) line.remove_suffix(1);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "synth spec line " + std::to_string(line_no);
    if (eq == std::string_view::npos) throw std::invalid_argument(where + ": expected key = value");
    std::string key(line.substr(0, eq));
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string_view value = line.substr(eq + 1);
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    try {
      auto scalar = [&] {
        const Range r = parse_range(value, key);
        if (r.lo != r.hi) throw std::invalid_argument("synth spec: " + key + " expects a single number");
        return r.lo;
      };
      auto count = [&] {
        const double v = scalar();
        if (v != std::floor(v) || v < 0 || v > 1e9) throw std::invalid_argument("synth spec: " + key + " expects a count");
        return static_cast<int>(v);
      };
      if (key == "sample_rate") s.sample_rate = scalar();
      else if (key == "duration_s") s.duration_s = scalar();
      else if (key == "n_trains") s.n_trains = count();
      else if (key == "ici_s") s.ici_s = parse_range(value, key);
      else if (key == "ici_jitter") s.ici_jitter = scalar();
      else if (key == "mps_s") s.mps_s = parse_range(value, key);
      else if (key == "mps_jitter_s") s.mps_jitter_s = scalar();
      else if (key == "click_snr_db") s.click_snr_db = parse_range(value, key);
      else if (key == "carrier_hz") s.carrier_hz = parse_range(value, key);
      else if (key == "pulse_width_s") s.pulse_width_s = parse_range(value, key);
      else if (key == "second_pulse_gain") s.second_pulse_gain = parse_range(value, key);
      else if (key == "third_pulse_prob") s.third_pulse_prob = scalar();
      else if (key == "n_noise_transients") s.n_noise_transients = count();
      else if (key == "noise_double_prob") s.noise_double_prob = scalar();
      else if (key == "noise_snr_db") s.noise_snr_db = parse_range(value, key);
      else if (key == "noise_mps_s") s.noise_mps_s = parse_range(value, key);
      else if (key == "noise_carrier_hz") s.noise_carrier_hz = parse_range(value, key);
      else if (key == "noise_width_s") s.noise_width_s = parse_range(value, key);
      else if (key == "noise_rms") s.noise_rms = scalar();
      else if (key == "impulse_rate_hz") s.impulse_rate_hz = scalar();
      else if (key == "min_spacing_s") s.min_spacing_s = scalar();
      else if (key == "edge_margin_s") s.edge_margin_s = scalar();
      else if (key == "seed") s.seed = static_cast<std::uint64_t>(count());
      else if (key == "noise_kind") {
        if (value == "white-band") s.noise_kind = NoiseKind::kWhiteBand;
        else if (value == "impulsive") s.noise_kind = NoiseKind::kImpulsive;
        else throw std::invalid_argument("synth spec: noise_kind must be white-band or impulsive");
      } else {
        throw std::invalid_argument("synth spec: unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
  }
  s.validate();
  return s;
}

SynthSpec SynthSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open synth spec: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

SynthClip synth_click_train(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const double fs = spec.sample_rate;
  const auto n = static_cast<Eigen::Index>(std::llround(spec.duration_s * fs));

  // Band-limited Gaussian background.
  Signal noise(n);
  for (Eigen::Index i = 0; i < n; ++i) noise[i] = rng.normal();
  SosCascade<double> shaping = butterworth_highpass(4, 1000.0, fs);
  const SosCascade<double> lp = butterworth_lowpass(4, std::min(40000.0, 0.45 * fs), fs);
  shaping.insert(shaping.end(), lp.begin(), lp.end());
  noise = sos_filtfilt(shaping, noise);
  const double rms = std::sqrt(noise.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(n, 1)));
  if (rms > 0.0) noise *= spec.noise_rms / rms;

  // Enhanced-signal floor the detector will see with its default band.
  AudioClip background{noise, fs, 0.0};
  double floor = 0.0;
  if (n >= 3) {
    const EnhancedSignal ref = tkeo(bandpass(background, 2000.0, std::min(24000.0, 0.45 * fs)));
    std::vector<double> v(ref.values.data(), ref.values.data() + ref.size());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    floor = std::max(v[v.size() / 2], 1e-300);
  }

  SynthClip out;
  out.clip = AudioClip{noise, fs, 0.0};
  Signal& x = out.clip.samples;
  struct Placed {
    Annotation annotation;
    double mps;
  };
  std::vector<Placed> events;
  std::vector<double> placed_times;
  const double t_lo = spec.edge_margin_s;
  const double t_hi = spec.duration_s - spec.edge_margin_s - 0.05;

  for (int k = 0; k < spec.n_trains; ++k) {
    const double ici = rng.uniform(spec.ici_s.lo, spec.ici_s.hi);
    const double base_mps = rng.uniform(spec.mps_s.lo, spec.mps_s.hi);
    const double snr_base = rng.uniform(spec.click_snr_db.lo, spec.click_snr_db.hi);
    const double gain2 = rng.uniform(spec.second_pulse_gain.lo, spec.second_pulse_gain.hi);
    const bool third = rng.uniform() < spec.third_pulse_prob;
    const std::string source = "train" + std::to_string(k);
    std::vector<double> train_times;
    for (double t = t_lo + rng.uniform(0.0, ici); t <= t_hi;
         t += ici * std::max(0.5, 1.0 + spec.ici_jitter * rng.normal())) {
      const double mps = std::max(1e-3, base_mps + spec.mps_jitter_s * rng.normal());
      const double snr = std::clamp(snr_base + 0.5 * (2.0 * rng.uniform() - 1.0), spec.click_snr_db.lo,
                                    spec.click_snr_db.hi);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double carrier = rng.uniform(spec.carrier_hz.lo, spec.carrier_hz.hi);
      double width[3];
      for (double& w : width) w = rng.uniform(spec.pulse_width_s.lo, spec.pulse_width_s.hi);
      if (too_close(placed_times, t, spec.min_spacing_s)) continue;
      const double a = amplitude_for(snr, floor, carrier, fs);
      render({t, a, carrier, width[0], phase}, x, fs);
      render({t + mps, a * gain2, carrier, width[1], phase}, x, fs);
      if (third) render({t + 2.0 * mps, 0.3 * a, carrier, width[2], phase}, x, fs);
      train_times.push_back(t);
      events.push_back({{t, AnnotationLabel::kClick, source}, mps});
    }
    placed_times.insert(placed_times.end(), train_times.begin(), train_times.end());
  }

  for (int j = 0; j < spec.n_noise_transients; ++j) {
    double t = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      t = rng.uniform(t_lo, t_hi);
      ok = !too_close(placed_times, t, spec.min_spacing_s);
    }
    if (!ok) {
      throw std::runtime_error("synth: overcrowded, cannot place noise transient " + std::to_string(j + 1) + " of " +
                               std::to_string(spec.n_noise_transients) + " with " +
                               shortest(spec.min_spacing_s) + " s spacing");
    }
    placed_times.push_back(t);
    const double carrier = rng.uniform(spec.noise_carrier_hz.lo, spec.noise_carrier_hz.hi);
    const double width = rng.uniform(spec.noise_width_s.lo, spec.noise_width_s.hi);
    const double snr = rng.uniform(spec.noise_snr_db.lo, spec.noise_snr_db.hi);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double a = amplitude_for(snr, floor, carrier, fs);
    render({t, a, carrier, width, phase}, x, fs);
    double mps = 0.0;
    if (rng.uniform() < spec.noise_double_prob) {
      mps = rng.uniform(spec.noise_mps_s.lo, spec.noise_mps_s.hi);
      render({t + mps, a * rng.uniform(0.5, 1.0), carrier, width, phase}, x, fs);
    }
    events.push_back({{t, AnnotationLabel::kNoise, "noise"}, mps});
  }

  if (spec.noise_kind == NoiseKind::kImpulsive && n > 0) {
    const auto spikes = static_cast<long>(std::llround(spec.impulse_rate_hz * spec.duration_s));
    for (long i = 0; i < spikes; ++i) {
      const auto at = std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n)));
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      x[at] += sign * spec.noise_rms * rng.uniform(5.0, 20.0);
    }
  }

  if (n > 0 && x.cwiseAbs().maxCoeff() > 1.0) {
    throw std::runtime_error("synth: rendered signal exceeds full scale; lower noise_rms or the SNR ranges");
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Placed& a, const Placed& b) { return a.annotation.time_s < b.annotation.time_s; });
  for (auto& e : events) {
    out.annotations.push_back(std::move(e.annotation));
    out.true_mps.push_back(e.mps);
  }
  return out;
}

std::vector<double> sliding_group_sigma(std::span<const double> values, std::size_t group) {
  if (group == 0 || values.size() < group) {
    throw std::invalid_argument("sliding_group_sigma: need at least " + std::to_string(group) + " values");
  }
  std::vector<double> out;
  out.reserve(values.size() - group + 1);
  for (std::size_t i = 0; i + group <= values.size(); ++i) {
    const Eigen::Map<const Eigen::VectorXd> g(values.data() + i, static_cast<Eigen::Index>(group));
    out.push_back(std::sqrt((g.array() - g.mean()).square().mean()));
  }
  return out;
}

Histogram make_histogram(std::span<const double> values, double lo, double hi, int bins) {
  if (bins < 1 || !(hi > lo)) throw std::invalid_argument("make_histogram: need bins >= 1 and hi > lo");
  Histogram h;
  h.edges = Eigen::VectorXd::LinSpaced(bins + 1, lo, hi);
  h.counts = Eigen::VectorXi::Zero(bins);
  for (const double v : values) {
    // Out-of-range values land in the nearest end bin.
    const auto b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    ++h.counts[std::clamp(b, 0, bins - 1)];
  }
  return h;
}

Histogram mps_stability_histogram(std::span<const double> mps, double hi, int bins) {
  const std::vector<double> sigmas = sliding_group_sigma(mps, 5);
  return make_histogram(sigmas, 0.0, hi, bins);
}

bool buffer_is_positive(std::span<const Annotation> annotations, double t_start, double t_end) {
  std::map<std::string, int> per_source;
  for (const auto& a : annotations) {
    if (a.label == AnnotationLabel::kClick && a.time_s >= t_start && a.time_s < t_end) {
      if (++per_source[a.source_id] >= 3) return true;
    }
  }
  return false;
}

std::string PRCurve::to_csv() const {
  std::string out = "u_t,tp,fp,fn,precision,recall\n";
  for (const auto& p : points) {
    out += shortest(p.u_t) + "," + std::to_string(p.tp) + "," + std::to_string(p.fp) + "," +
           std::to_string(p.fn) + "," + shortest(p.precision) + "," + shortest(p.recall) + "\n";
  }
  return out;
}

PRCurve pr_sweep(std::span<const LabeledUtility> buffers, std::span<const double> u_t_grid) {
  for (std::size_t i = 0; i < buffers.size(); ++i) {
    if (!buffers[i].positive) throw std::invalid_argument("pr_sweep: buffer " + std::to_string(i) + " is unlabeled");
  }
  PRCurve curve;
  for (const double u_t : u_t_grid) {
    PRPoint p;
    p.u_t = u_t;
    for (const auto& b : buffers) {
      const bool detected = threshold_decision(b.utility, u_t) == Decision::kSignal;
      if (detected && *b.positive) ++p.tp;
      else if (detected) ++p.fp;
      else if (*b.positive) ++p.fn;
    }
    p.precision = p.tp + p.fp == 0 ? 1.0 : static_cast<double>(p.tp) / static_cast<double>(p.tp + p.fp);
    p.recall = p.tp + p.fn == 0 ? 0.0 : static_cast<double>(p.tp) / static_cast<double>(p.tp + p.fn);
    curve.points.push_back(p);
  }
  return curve;
}

double false_alarms_per_hour(std::size_t detections, double total_hours) {
  if (!(total_hours > 0.0)) throw std::invalid_argument("false_alarms_per_hour: total_hours must be > 0");
  return static_cast<double>(detections) / total_hours;
}

double false_alarms_per_hour(std::span<const DetectionReport> reports, double total_hours) {
  const auto h1 = std::count_if(reports.begin(), reports.end(),
                                [](const DetectionReport& r) { return r.decision == Decision::kSignal; });
  return false_alarms_per_hour(static_cast<std::size_t>(h1), total_hours);
}

void write_audio(const AudioClip& clip, const std::filesystem::path& path) { write_wav24(clip, path); }

}  // namespace mpscd
