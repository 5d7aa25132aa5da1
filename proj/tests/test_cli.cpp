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

#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "mpscd/cli.hpp"
#include "support.hpp"

using namespace mpscd;
using mpscd::testing::TempDir;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::vector<nlohmann::json> json_lines(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

}  // namespace

TEST_CASE("buffer label parsing") {
  const auto two = parse_buffer_labels("buffer_index,label\n0,positive\n1,negative\n2,1\n3,false\n");
  REQUIRE(two.size() == 4);
  CHECK(two[0].positive);
  CHECK_FALSE(two[1].positive);
  CHECK(two[2].positive);
  CHECK_FALSE(two[3].positive);
  CHECK(two[0].source.empty());

  const auto three = parse_buffer_labels("a.wav,4,positive\n");
  REQUIRE(three.size() == 1);
  CHECK(three[0].source == "a.wav");
  CHECK(three[0].buffer_index == 4);

  CHECK_THROWS(parse_buffer_labels("0,maybe\n"));
  CHECK_THROWS(parse_buffer_labels("x,positive\n"));
}

TEST_CASE("synth, detect and eval end to end") {
  TempDir dir("cli");
  write_file(dir / "spec.txt", "duration_s = 30\nn_trains = 1\nici_s = 0.8, 1.0\nn_noise_transients = 5\n");
  std::ostringstream out, err;
  SynthOptions so;
  so.spec = dir / "spec.txt";
  so.seed = 3;
  so.out_dir = dir.path() / "corpus";
  REQUIRE(cmd_synth(so, out, err) == 0);
  CHECK(fs::exists(dir.path() / "corpus" / "synth.wav"));
  CHECK(fs::exists(dir.path() / "corpus" / "annotations.csv"));
  const std::string labels = read_file(dir.path() / "corpus" / "labels.csv");
  CHECK(labels.starts_with("buffer_index,label\n"));
  CHECK(parse_buffer_labels(labels).size() == 3);

  DetectOptions d;
  d.inputs = {dir.path() / "corpus" / "synth.wav"};
  d.out = (dir / "reports.jsonl").string();
  std::ostringstream dout, derr;
  REQUIRE(cmd_detect(d, dout, derr) == 0);
  const auto reports = json_lines(read_file(dir / "reports.jsonl"));
  REQUIRE(reports.size() == 3);
  int h1 = 0;
  for (const auto& r : reports) h1 += r["decision"] == "H1_signal";
  CHECK(h1 >= 1);
  CHECK(derr.str().find("buffer") != std::string::npos);
  CHECK(dout.str().empty());

  EvalOptions e;
  e.reports = dir / "reports.jsonl";
  e.labels = dir.path() / "corpus" / "labels.csv";
  e.out = (dir / "pr.csv").string();
  e.grid_step = 0.5;
  std::ostringstream eout, eerr;
  REQUIRE(cmd_eval(e, eout, eerr) == 0);
  const std::string csv = read_file(dir / "pr.csv");
  CHECK(csv.starts_with("u_t,tp,fp,fn,precision,recall\n"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
  const auto summary = nlohmann::json::parse(eout.str());
  CHECK(summary["buffers"] == 3);
  CHECK(summary.contains("false_alarms_per_hour"));

  // Labels derived from annotations give the same curve.
  EvalOptions ea = e;
  ea.labels.reset();
  ea.annotations = dir.path() / "corpus" / "annotations.csv";
  ea.out = (dir / "pr2.csv").string();
  std::ostringstream aout, aerr;
  REQUIRE(cmd_eval(ea, aout, aerr) == 0);
  CHECK(read_file(dir / "pr2.csv") == csv);
}

TEST_CASE("detect reports to stdout and names missing inputs") {
  TempDir dir("cli_err");
  std::ostringstream out, err;
  DetectOptions d;
  d.inputs = {dir / "absent.wav"};
  CHECK(cmd_detect(d, out, err) != 0);
  CHECK(err.str().find("absent.wav") != std::string::npos);
  CHECK(out.str().empty());

  SynthOptions so;
  so.out_dir = dir.path();
  std::ostringstream sout, serr;
  REQUIRE(cmd_synth(so, sout, serr) == 0);
  d.inputs = {dir / "synth.wav"};
  std::ostringstream out2, err2;
  REQUIRE(cmd_detect(d, out2, err2) == 0);
  CHECK(json_lines(out2.str()).size() == 1);
}

TEST_CASE("bad config and eval options fail with a message") {
  TempDir dir("cli_cfg");
  write_file(dir / "bad.cfg", "decision.ut = 1\n");
  std::ostringstream out, err;
  SynthOptions so;
  so.config = dir / "bad.cfg";
  so.out_dir = dir.path();
  CHECK(cmd_synth(so, out, err) == 1);
  CHECK(err.str().find("error:") == 0);
  CHECK(err.str().find("decision.ut") != std::string::npos);

  EvalOptions e;
  e.reports = dir / "r.jsonl";
  std::ostringstream eout, eerr;
  CHECK(cmd_eval(e, eout, eerr) == 1);
}

TEST_CASE("calibrate writes the thresholds JSON") {
  TempDir dir("cli_cal");
  write_file(dir / "spec.txt",
             "duration_s = 120\nn_trains = 2\nici_s = 0.5, 0.7\nclick_snr_db = 35, 45\nseed = 2\n");
  SynthOptions so;
  so.spec = dir / "spec.txt";
  so.out_dir = dir.path();
  std::ostringstream sout, serr;
  REQUIRE(cmd_synth(so, sout, serr) == 0);

  CalibrateOptions c;
  c.audio = dir / "synth.wav";
  c.annotations = dir / "annotations.csv";
  c.target_p = 0.05;
  c.out = (dir / "th.json").string();
  std::ostringstream out, err;
  const int status = cmd_calibrate(c, out, err);
  INFO(err.str());
  REQUIRE(status == 0);
  const auto j = nlohmann::json::parse(read_file(dir / "th.json"));
  for (const char* k : {"d_max_s", "f_max_hz", "target_p", "sample_count"}) CHECK(j.contains(k));
  CHECK(j["sample_count"].get<int>() >= 100);
  CHECK(j["d_max_s"].get<double>() > 0.0);
  CHECK(j["f_max_hz"].get<double>() < 24000.0);
  CHECK(std::abs(j["achieved_p"].get<double>() - 0.05) <= 0.02);
}
