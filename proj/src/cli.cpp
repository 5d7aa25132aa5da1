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

#include "mpscd/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mpscd/decide.hpp"
#include "mpscd/dsp.hpp"
#include "mpscd/eval.hpp"
#include "mpscd/mps.hpp"
#include "mpscd/roi.hpp"
#include "mpscd/verify.hpp"

namespace mpscd {
namespace {

using nlohmann::json;

// Runs `body` against standard output or a freshly truncated file.
void emit(const std::string& target, std::ostream& out, const std::function<void(std::ostream&)>& body) {
  if (target.empty() || target == "-") {
    body(out);
    out.flush();
    return;
  }
  std::ofstream file(target, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write " + target);
  body(file);
  if (!file) throw std::runtime_error("error writing " + target);
}

std::string read_text(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(std::string("cannot open ") + what + ": " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int guarded(std::ostream& err, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

struct StoredReport {
  std::string source;
  std::size_t buffer_index = 0;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::optional<double> utility;
};

std::vector<StoredReport> read_reports(const fs::path& path, double default_length) {
  std::istringstream in(read_text(path, "reports"));
  std::vector<StoredReport> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      StoredReport r;
      r.source = j.value("source", std::string());
      r.buffer_index = j.at("buffer_index").get<std::size_t>();
      r.t_start_s = j.at("t_start_s").get<double>();
      r.t_end_s = j.contains("t_end_s") ? j.at("t_end_s").get<double>() : r.t_start_s + default_length;
      if (!j.at("utility").is_null()) r.utility = j.at("utility").get<double>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw std::runtime_error(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

Config load_config(const std::optional<fs::path>& path) {
  if (!path) return Config{};
  return Config::load(*path);
}

std::vector<BufferLabel> parse_buffer_labels(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<BufferLabel> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    if (cells.size() >= 2 && (cells[0] == "buffer_index" || cells[0] == "source")) continue;
    const std::string where = "labels line " + std::to_string(line_no);
    if (cells.size() < 2 || cells.size() > 3) throw std::runtime_error(where + ": expected 2 or 3 fields");
    BufferLabel label;
    if (cells.size() == 3) label.source = cells[0];
    const std::string& index = cells[cells.size() - 2];
    const std::string& value = cells.back();
    try {
      std::size_t used = 0;
      label.buffer_index = std::stoul(index, &used);
      if (used != index.size()) throw std::invalid_argument(index);
    } catch (const std::exception&) {
      throw std::runtime_error(where + ": bad buffer index '" + index + "'");
    }
    if (value == "positive" || value == "1" || value == "true") label.positive = true;
    else if (value == "negative" || value == "0" || value == "false") label.positive = false;
    else throw std::runtime_error(where + ": unknown label '" + value + "'");
    out.push_back(std::move(label));
  }
  return out;
}

int cmd_detect(const DetectOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.inputs.empty()) throw std::invalid_argument("detect: no input files");
    if (opts.jobs < 1) throw std::invalid_argument("detect: --jobs must be >= 1");
    const Config cfg = load_config(opts.config);
    cfg.validate();
    // Open every input up front so a missing file fails before any output.
    for (const auto& path : opts.inputs) {
      if (!fs::exists(path)) throw std::runtime_error("cannot open " + path.string() + ": no such file");
    }
    std::size_t buffers = 0;
    std::size_t detections = 0;
    const auto t0 = std::chrono::steady_clock::now();
    emit(opts.out, out, [&](std::ostream& stream) {
      for (const auto& path : opts.inputs) {
        const AudioClip clip = load_audio(path);
        const auto segments = segment_buffers(clip, cfg.buffer.length, cfg.buffer.hop);
        auto reports = detect_buffers(segments, cfg, opts.jobs);
        for (auto& r : reports) {
          r.source = path.string();
          stream << report_to_json(r).dump() << "\n";
          detections += r.decision == Decision::kSignal ? 1 : 0;
        }
        buffers += reports.size();
      }
    });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    err << "detect: " << opts.inputs.size() << " file(s), " << buffers << " buffer(s), " << detections
        << " detection(s), " << (buffers ? 1e3 * seconds / static_cast<double>(buffers) : 0.0)
        << " ms per buffer, config " << cfg.hash() << (cfg.verification.calibrated ? "" : " (uncalibrated)")
        << "\n";
  });
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config cfg = load_config(opts.config);
    if (!(opts.grid_step > 0.0) || opts.grid_hi < opts.grid_lo) throw std::invalid_argument("eval: invalid threshold grid");
    if (opts.labels.has_value() == opts.annotations.has_value()) {
      throw std::invalid_argument("eval: give exactly one of --labels or --annotations");
    }
    const std::vector<StoredReport> reports = read_reports(opts.reports, cfg.buffer.length);

    std::vector<LabeledUtility> labeled(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i) labeled[i].utility = reports[i].utility;
    if (opts.annotations) {
      const std::vector<Annotation> ann = load_annotations(*opts.annotations);
      for (std::size_t i = 0; i < reports.size(); ++i) {
        labeled[i].positive = buffer_is_positive(ann, reports[i].t_start_s, reports[i].t_end_s);
      }
    } else {
      std::set<std::string> sources;
      for (const auto& r : reports) sources.insert(r.source);
      std::map<std::pair<std::string, std::size_t>, bool> table;
      for (const auto& l : parse_buffer_labels(read_text(*opts.labels, "labels"))) {
        if (l.source.empty() && sources.size() > 1) {
          throw std::runtime_error("eval: labels have no source column but the reports span several files");
        }
        const std::string key = l.source.empty() && !sources.empty() ? *sources.begin() : l.source;
        table[{key, l.buffer_index}] = l.positive;
      }
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto it = table.find({reports[i].source, reports[i].buffer_index});
        if (it != table.end()) labeled[i].positive = it->second;
      }
    }

    std::vector<double> grid;
    const auto steps = static_cast<long>(std::floor((opts.grid_hi - opts.grid_lo) / opts.grid_step + 1e-9));
    for (long k = 0; k <= steps; ++k) grid.push_back(opts.grid_lo + static_cast<double>(k) * opts.grid_step);
    const PRCurve curve = pr_sweep(labeled, grid);
    emit(opts.out, out, [&](std::ostream& stream) { stream << curve.to_csv(); });

    const double u_t = opts.u_t.value_or(cfg.u_t);
    std::size_t negatives = 0;
    std::size_t false_alarms = 0;
    double noise_seconds = 0.0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (*labeled[i].positive) continue;
      ++negatives;
      noise_seconds += reports[i].t_end_s - reports[i].t_start_s;
      if (threshold_decision(reports[i].utility, u_t) == Decision::kSignal) ++false_alarms;
    }
    json summary;
    summary["buffers"] = reports.size();
    summary["negative_buffers"] = negatives;
    summary["u_t"] = u_t;
    summary["noise_hours"] = noise_seconds / 3600.0;
    summary["false_alarms"] = false_alarms;
    summary["false_alarms_per_hour"] =
        noise_seconds > 0.0 ? json(false_alarms_per_hour(false_alarms, noise_seconds / 3600.0)) : json(nullptr);
    // Stdout carries the curve when --out is "-"; the summary then goes to err.
    std::ostream& sink = (opts.out.empty() || opts.out == "-") ? err : out;
    sink << summary.dump() << "\n";
  });
}

int cmd_calibrate(const CalibrateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config cfg = load_config(opts.config);
    const AudioClip clip = load_audio(opts.audio);
    const std::vector<Annotation> annotations = load_annotations(opts.annotations);
    const AudioClip filtered = bandpass(clip, cfg.band.f_lo, cfg.band.f_hi, cfg.band.order);
    const EnhancedSignal enh = tkeo(filtered);
    const double floor = std::max(estimate_noise_floor(enh), 1e-300);
    const SuperletParams superlet = cfg.superlet.params(clip.sample_rate);
    const auto search = static_cast<Eigen::Index>(std::ceil(2e-3 * clip.sample_rate));

    std::vector<PulseFeatures> features;
    std::size_t skipped = 0;
    for (const auto& a : annotations) {
      if (a.label != AnnotationLabel::kClick) continue;
      const auto center = static_cast<Eigen::Index>(std::llround((a.time_s - clip.origin_time) * clip.sample_rate));
      const Eigen::Index lo = std::clamp<Eigen::Index>(center - search, 0, enh.size() - 1);
      const Eigen::Index hi = std::clamp<Eigen::Index>(center + search, 0, enh.size() - 1);
      Eigen::Index at = 0;
      const double peak = enh.values.segment(lo, hi - lo + 1).maxCoeff(&at);
      at += lo;
      TransientEvent event;
      event.peak_time = enh.time_at(at);
      event.peak_intensity = peak;
      event.snr_db = 10.0 * std::log10(std::max(peak, 1e-300) / floor);
      event.t_start = event.peak_time - cfg.roi.roi_pre;
      event.t_end = event.peak_time + cfg.roi.roi_post;
      try {
        const RoiSegment roi = extract_roi(filtered, enh, event);
        const auto m = measure_mps(roi, cfg.intra_min_sep);
        if (!m) {
          ++skipped;
          continue;
        }
        const PulseFeatures f1 = extract_pulse_features(roi, m->t_p1, superlet, cfg.pulse_half_width);
        const PulseFeatures f2 = extract_pulse_features(roi, m->t_p2, superlet, cfg.pulse_half_width);
        features.push_back({std::max(f1.rho_d, f2.rho_d), std::max(f1.rho_f, f2.rho_f)});
      } catch (const UnusablePulse&) {
        ++skipped;
      } catch (const std::out_of_range&) {
        ++skipped;
      }
    }
    if (skipped > 0) err << "calibrate: skipped " << skipped << " annotated click(s) without usable pulses\n";
    const CalibrationResult r = calibrate_thresholds(features, opts.target_p);
    json j;
    j["d_max_s"] = r.d_max;
    j["f_max_hz"] = r.f_max;
    j["target_p"] = r.target_p;
    j["sample_count"] = r.sample_count;
    j["quantile"] = r.quantile;
    j["achieved_p"] = r.achieved_p;
    emit(opts.out, out, [&](std::ostream& stream) { stream << j.dump(2) << "\n"; });
  });
}

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    SynthSpec spec = opts.spec ? SynthSpec::load(*opts.spec) : SynthSpec{};
    if (opts.seed) spec.seed = *opts.seed;
    const Config cfg = load_config(opts.config);
    const SynthClip synth = synth_click_train(spec);
    fs::create_directories(opts.out_dir);
    const fs::path wav = opts.out_dir / "synth.wav";
    write_audio(synth.clip, wav);
    write_annotations(synth.annotations, opts.out_dir / "annotations.csv");
    emit((opts.out_dir / "labels.csv").string(), out, [&](std::ostream& stream) {
      stream << "buffer_index,label\n";
      for (const auto& b : segment_buffers(synth.clip, cfg.buffer.length, cfg.buffer.hop)) {
        stream << b.index << "," << (buffer_is_positive(synth.annotations, b.t_start(), b.t_end()) ? "positive" : "negative")
               << "\n";
      }
    });
    out << wav.string() << "\n";
    err << "synth: " << synth.annotations.size() << " annotated event(s), seed " << spec.seed << "\n";
  });
}

}  // namespace mpscd
