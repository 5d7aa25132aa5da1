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

// Audio and annotation loading, and cutting a clip into analysis buffers.

#ifndef MPSCD_INGEST_HPP_
#define MPSCD_INGEST_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mpscd {

using Signal = Eigen::VectorXd;

/// Normalized single-channel samples with their sample rate and the absolute
/// time (seconds since stream start) of the first sample.
struct AudioClip {
  Signal samples;
  double sample_rate = 0.0;
  double origin_time = 0.0;

  Eigen::Index size() const { return samples.size(); }
  double duration() const {
    return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
  double time_at(Eigen::Index i) const {
    return origin_time + static_cast<double>(i) / sample_rate;
  }
  // Copy of samples [first, first + count) with the origin shifted accordingly.
  AudioClip slice(Eigen::Index first, Eigen::Index count) const;
};

struct TimeBuffer {
  AudioClip clip;
  std::size_t index = 0;
  double duration = 0.0;

  double t_start() const { return clip.origin_time; }
  double t_end() const { return clip.origin_time + clip.duration(); }
};

enum class AnnotationLabel { kClick, kNoise };

/// One annotated event. Click trains are grouped by source_id.
struct Annotation {
  double time_s = 0.0;
  AnnotationLabel label = AnnotationLabel::kClick;
  std::string source_id;

  bool operator==(const Annotation&) const = default;
};

const char* to_string(AnnotationLabel label);

/// Reads a RIFF/WAVE file (PCM 16/24-bit or IEEE float 32-bit) and returns
/// the selected channel scaled to [-1, 1]. Throws std::runtime_error on an
/// unreadable file, an unsupported encoding, or an empty stream.
AudioClip load_audio(const std::filesystem::path& path, int channel = 0);

/// Writes a clip as mono 24-bit PCM RIFF/WAVE.
void write_wav24(const AudioClip& clip, const std::filesystem::path& path);

/// Tiles the clip with buffers starting at i * hop. Segmentation stops after
/// the first buffer that reaches the end of the clip; a trailing partial
/// buffer is kept only when it holds at least half of buffer_len.
std::vector<TimeBuffer> segment_buffers(const AudioClip& clip, double buffer_len,
                                        double hop);

/// Parses a `time_s,label,source_id` CSV. Output is sorted by time.
/// Malformed rows raise std::runtime_error naming the 1-based line number.
std::vector<Annotation> load_annotations(const std::filesystem::path& path);
std::vector<Annotation> parse_annotations(const std::string& text);

void write_annotations(const std::vector<Annotation>& annotations,
                       const std::filesystem::path& path);

}  // namespace mpscd

#endif  // MPSCD_INGEST_HPP_
