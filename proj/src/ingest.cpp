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

#include "mpscd/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace mpscd {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_row(std::size_t line, const std::string& what) {
  throw std::runtime_error("annotations line " + std::to_string(line) + ": " + what);
}

}  // namespace

const char* to_string(AnnotationLabel label) {
  return label == AnnotationLabel::kClick ? "click" : "noise";
}

AudioClip AudioClip::slice(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > samples.size()) {
    throw std::out_of_range("AudioClip::slice: range outside clip");
  }
  AudioClip out;
  out.samples = samples.segment(first, count);
  out.sample_rate = sample_rate;
  out.origin_time = time_at(first);
  return out;
}

std::vector<TimeBuffer> segment_buffers(const AudioClip& clip, double buffer_len, double hop) {
  if (!(buffer_len > 0.0) || !(hop > 0.0) || hop > buffer_len) {
    throw std::invalid_argument("segment_buffers: require 0 < hop <= buffer_len");
  }
  if (!(clip.sample_rate > 0.0)) throw std::invalid_argument("segment_buffers: sample_rate must be > 0");

  const Eigen::Index total = clip.size();
  const auto len = static_cast<Eigen::Index>(std::llround(buffer_len * clip.sample_rate));
  std::vector<TimeBuffer> buffers;
  if (len <= 0) return buffers;

  for (std::size_t i = 0;; ++i) {
    const auto start =
        static_cast<Eigen::Index>(std::llround(static_cast<double>(i) * hop * clip.sample_rate));
    if (start >= total) break;
    const Eigen::Index count = std::min(len, total - start);
    if (count < len && 2 * count < len) break;
    TimeBuffer b;
    b.clip = clip.slice(start, count);
    b.index = buffers.size();
    b.duration = static_cast<double>(count) / clip.sample_rate;
    buffers.push_back(std::move(b));
    if (start + count >= total) break;
  }
  return buffers;
}

std::vector<Annotation> parse_annotations(const std::string& text) {
  std::vector<Annotation> out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("time_s", 0) == 0) continue;
    }

    std::vector<std::string_view> fields;
    std::size_t begin = 0;
    for (;;) {
      const std::size_t comma = line.find(',', begin);
      fields.push_back(trim(line.substr(begin, comma == std::string_view::npos ? comma : comma - begin)));
      if (comma == std::string_view::npos) break;
      begin = comma + 1;
    }
    if (fields.size() < 2 || fields.size() > 3) bad_row(line_no, "expected 2 or 3 fields");

    Annotation a;
    const std::string_view t = fields[0];
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), a.time_s);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(a.time_s) || a.time_s < 0.0) {
      bad_row(line_no, "invalid time '" + std::string(t) + "'");
    }
    if (fields[1] == "click") {
      a.label = AnnotationLabel::kClick;
    } else if (fields[1] == "noise" || fields[1] == "noise-transient") {
      a.label = AnnotationLabel::kNoise;
    } else {
      bad_row(line_no, "unknown label '" + std::string(fields[1]) + "'");
    }
    if (fields.size() == 3) a.source_id = std::string(fields[2]);
    out.push_back(std::move(a));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Annotation& x, const Annotation& y) { return x.time_s < y.time_s; });
  return out;
}

std::vector<Annotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open annotations: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_annotations(ss.str());
}

void write_annotations(const std::vector<Annotation>& annotations,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write annotations: " + path.string());
  out << "time_s,label,source_id\n";
  char buf[64];
  for (const auto& a : annotations) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, a.time_s, std::chars_format::fixed, 6);
    out << std::string_view(buf, static_cast<std::size_t>(end - buf)) << ',' << to_string(a.label)
        << ',' << a.source_id << '\n';
  }
}

}  // namespace mpscd
