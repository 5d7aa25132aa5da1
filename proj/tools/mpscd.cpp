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

// mpscd: offline sperm whale click detection.
//
//   mpscd detect a.wav b.wav --out reports.jsonl --jobs 4
//   mpscd eval reports.jsonl --labels labels.csv --out pr.csv
//   mpscd calibrate clip.wav annotations.csv --target-p 0.05
//   mpscd synth --spec spec.txt --out corpus/ --seed 7

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mpscd/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mpscd: multi-pulse structure click detector"};
  app.require_subcommand(1);

  std::string config;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "Detector configuration (key = value)")->check(CLI::ExistingFile);
  };

  mpscd::DetectOptions detect;
  std::vector<std::string> inputs;
  auto* det = app.add_subcommand("detect", "Run the detector and write one JSON line per buffer");
  det->add_option("inputs", inputs, "WAV files")->required();
  add_config(det);
  det->add_option("--out", detect.out, "Report file, - for standard output");
  det->add_option("--jobs", detect.jobs, "Worker threads")->check(CLI::PositiveNumber);

  mpscd::EvalOptions eval;
  std::string reports, labels, annotations;
  double u_t = -1.0;
  auto* ev = app.add_subcommand("eval", "Precision-recall sweep and false alarms per hour");
  ev->add_option("reports", reports, "JSON-lines reports from detect")->required();
  auto* lab = ev->add_option("--labels", labels, "Buffer labels CSV");
  ev->add_option("--annotations", annotations, "Annotation CSV to derive buffer labels")->excludes(lab);
  add_config(ev);
  ev->add_option("--u-t", u_t, "Threshold for the false-alarm rate (default: config)");
  ev->add_option("--grid-lo", eval.grid_lo, "Lowest swept threshold");
  ev->add_option("--grid-hi", eval.grid_hi, "Highest swept threshold");
  ev->add_option("--grid-step", eval.grid_step, "Threshold step");
  ev->add_option("--out", eval.out, "PR curve CSV, - for standard output");

  mpscd::CalibrateOptions cal;
  std::string cal_audio, cal_ann;
  auto* ca = app.add_subcommand("calibrate", "Fit duration and frequency thresholds from annotated clicks");
  ca->add_option("audio", cal_audio, "WAV file")->required();
  ca->add_option("annotations", cal_ann, "Annotation CSV")->required();
  ca->add_option("--target-p", cal.target_p, "Target joint tail probability")->check(CLI::Range(0.0, 1.0));
  add_config(ca);
  ca->add_option("--out", cal.out, "Thresholds JSON, - for standard output");

  mpscd::SynthOptions syn;
  std::string spec_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  auto* sy = app.add_subcommand("synth", "Render a synthetic clip with ground-truth annotations");
  sy->add_option("--spec", spec_path, "Synthesis spec (key = value)")->check(CLI::ExistingFile);
  add_config(sy);
  auto* seed_opt = sy->add_option("--seed", seed, "Override the spec seed");
  sy->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  auto maybe = [](const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<std::filesystem::path>(s);
  };
  if (det->parsed()) {
    detect.inputs.assign(inputs.begin(), inputs.end());
    detect.config = maybe(config);
    return mpscd::cmd_detect(detect, std::cout, std::cerr);
  }
  if (ev->parsed()) {
    eval.reports = reports;
    eval.labels = maybe(labels);
    eval.annotations = maybe(annotations);
    eval.config = maybe(config);
    if (u_t >= 0.0) eval.u_t = u_t;
    return mpscd::cmd_eval(eval, std::cout, std::cerr);
  }
  if (ca->parsed()) {
    cal.audio = cal_audio;
    cal.annotations = cal_ann;
    cal.config = maybe(config);
    return mpscd::cmd_calibrate(cal, std::cout, std::cerr);
  }
  syn.spec = maybe(spec_path);
  syn.config = maybe(config);
  if (*seed_opt) syn.seed = seed;
  syn.out_dir = out_dir;
  return mpscd::cmd_synth(syn, std::cout, std::cerr);
}
