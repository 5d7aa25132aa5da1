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

#include "mpscd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace mpscd {
namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(std::string_view s, const std::string& key) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + std::string(s) + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(std::string_view s, const std::string& key) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config: " + key + " expects true or false, got '" + std::string(s) + "'");
}

struct Field {
  std::string key;
  std::function<void(Config&, std::string_view)> set;
  std::function<std::string(const Config&)> get;
};

template <typename Member>
Field real(std::string key, Member member) {
  return {key,
          [key, member](Config& c, std::string_view v) { member(c) = parse_double(v, key); },
          [member](const Config& c) { return format_double(member(c)); }};
}

template <typename Int, typename Member>
Field integer(std::string key, Member member) {
  return {key,
          [key, member](Config& c, std::string_view v) { member(c) = parse_int<Int>(v, key); },
          [member](const Config& c) { return std::to_string(member(c)); }};
}

template <typename Member>
Field boolean(std::string key, Member member) {
  return {key,
          [key, member](Config& c, std::string_view v) { member(c) = parse_bool(v, key); },
          [member](const Config& c) { return std::string(member(c) ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      real("band.f_lo_hz", [](auto& c) -> auto& { return c.band.f_lo; }),
      real("band.f_hi_hz", [](auto& c) -> auto& { return c.band.f_hi; }),
      integer<int>("band.order", [](auto& c) -> auto& { return c.band.order; }),
      real("buffer.length_s", [](auto& c) -> auto& { return c.buffer.length; }),
      real("buffer.hop_s", [](auto& c) -> auto& { return c.buffer.hop; }),
      real("roi.snr_threshold_db", [](auto& c) -> auto& { return c.roi.snr_threshold_db; }),
      integer<std::size_t>("roi.max_count", [](auto& c) -> auto& { return c.roi.max_count; }),
      real("roi.min_separation_s", [](auto& c) -> auto& { return c.roi.min_separation; }),
      real("roi.pre_s", [](auto& c) -> auto& { return c.roi.roi_pre; }),
      real("roi.post_s", [](auto& c) -> auto& { return c.roi.roi_post; }),
      real("roi.edge_guard_s", [](auto& c) -> auto& { return c.roi.edge_guard; }),
      real("mps.intra_min_sep_s", [](auto& c) -> auto& { return c.intra_min_sep; }),
      real("cluster.ici_min_s", [](auto& c) -> auto& { return c.clustering.ici_min; }),
      real("cluster.ici_max_s", [](auto& c) -> auto& { return c.clustering.ici_max; }),
      real("cluster.c_max", [](auto& c) -> auto& { return c.clustering.c_max; }),
      integer<int>("cluster.rho_click", [](auto& c) -> auto& { return c.clustering.rho_click; }),
      real("cluster.alpha1", [](auto& c) -> auto& { return c.clustering.alpha1; }),
      real("cluster.alpha2", [](auto& c) -> auto& { return c.clustering.alpha2; }),
      integer<int>("cluster.min_size", [](auto& c) -> auto& { return c.clustering.min_cluster_size; }),
      integer<int>("cluster.exact_limit", [](auto& c) -> auto& { return c.clustering.exact_limit; }),
      integer<int>("cluster.exact_max_rho_click", [](auto& c) -> auto& { return c.clustering.exact_max_rho_click; }),
      integer<std::uint64_t>("cluster.exact_node_budget",
                             [](auto& c) -> auto& { return c.clustering.exact_node_budget; }),
      integer<int>("cluster.local_search_iterations",
                   [](auto& c) -> auto& { return c.clustering.local_search_iterations; }),
      integer<std::size_t>("cluster.max_feasible_subsets",
                           [](auto& c) -> auto& { return c.clustering.max_feasible_subsets; }),
      real("verify.rho_mps_max_s", [](auto& c) -> auto& { return c.verification.rho_mps_max; }),
      real("verify.d_max_s", [](auto& c) -> auto& { return c.verification.d_max; }),
      real("verify.f_max_hz", [](auto& c) -> auto& { return c.verification.f_max; }),
      real("verify.target_p", [](auto& c) -> auto& { return c.verification.target_p; }),
      boolean("verify.calibrated", [](auto& c) -> auto& { return c.verification.calibrated; }),
      real("verify.pulse_half_width_s", [](auto& c) -> auto& { return c.pulse_half_width; }),
      real("superlet.f_min_hz", [](auto& c) -> auto& { return c.superlet.f_min; }),
      real("superlet.f_max_hz", [](auto& c) -> auto& { return c.superlet.f_max; }),
      real("superlet.f_step_hz", [](auto& c) -> auto& { return c.superlet.f_step; }),
      integer<int>("superlet.base_cycles", [](auto& c) -> auto& { return c.superlet.base_cycles; }),
      integer<int>("superlet.order_min", [](auto& c) -> auto& { return c.superlet.order_min; }),
      integer<int>("superlet.order_max", [](auto& c) -> auto& { return c.superlet.order_max; }),
      real("superlet.time_step_s", [](auto& c) -> auto& { return c.superlet.time_step; }),
      real("decision.u_t", [](auto& c) -> auto& { return c.u_t; }),
  };
  return table;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

SuperletParams SuperletConfig::params(double sample_rate) const {
  SuperletParams p;
  p.base_cycles = base_cycles;
  p.order_min = order_min;
  p.order_max = order_max;
  p.time_step = time_step;
  for (const double f : SuperletParams::frequency_grid(f_min, f_max, f_step)) {
    if (f < 0.5 * sample_rate) p.freqs.push_back(f);
  }
  return p;
}

void Config::validate() const {
  if (!(band.f_lo > 0.0) || !(band.f_lo < band.f_hi)) throw std::invalid_argument("config: require 0 < band.f_lo_hz < band.f_hi_hz");
  if (band.order <= 0 || band.order % 2 != 0) throw std::invalid_argument("config: band.order must be even and > 0");
  if (!(buffer.length > 0.0) || !(buffer.hop > 0.0) || buffer.hop > buffer.length) {
    throw std::invalid_argument("config: require 0 < buffer.hop_s <= buffer.length_s");
  }
  if (roi.max_count == 0 || roi.max_count > 64) throw std::invalid_argument("config: roi.max_count must lie in [1, 64]");
  if (!(roi.min_separation >= 0.0) || !(roi.roi_pre >= 0.0) || !(roi.roi_post > 0.0) || !(roi.edge_guard >= 0.0)) {
    throw std::invalid_argument("config: ROI timings must be non-negative (post > 0)");
  }
  if (!(intra_min_sep > 0.0)) throw std::invalid_argument("config: mps.intra_min_sep_s must be > 0");
  clustering.validate();
  const auto& v = verification;
  if (!(v.rho_mps_max > 0.0) || !(v.d_max > 0.0) || !(v.f_max > 0.0)) {
    throw std::invalid_argument("config: verification thresholds must be > 0");
  }
  if (!(v.target_p > 0.0) || !(v.target_p < 1.0)) throw std::invalid_argument("config: verify.target_p must lie in (0, 1)");
  if (!(pulse_half_width > 0.0)) throw std::invalid_argument("config: verify.pulse_half_width_s must be > 0");
  if (!(superlet.f_min > 0.0) || superlet.f_max < superlet.f_min || !(superlet.f_step > 0.0)) {
    throw std::invalid_argument("config: invalid superlet frequency grid");
  }
  if (superlet.base_cycles < 1 || superlet.order_min < 1 || superlet.order_max < superlet.order_min) {
    throw std::invalid_argument("config: invalid superlet cycles/orders");
  }
  if (!(superlet.time_step > 0.0)) throw std::invalid_argument("config: superlet.time_step_s must be > 0");
  if (!(u_t > 0.0)) throw std::invalid_argument("config: decision.u_t must be > 0");
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

std::string Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : serialize()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash_pos = line.find('#'); hash_pos != std::string_view::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    try {
      it->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::vector<std::string> Config::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

}  // namespace mpscd
