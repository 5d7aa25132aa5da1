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

#include "mpscd/cluster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>

namespace mpscd {
namespace {

using Mask = std::uint64_t;
constexpr std::size_t kMaxSeries = 64;

struct Candidate {
  Mask mask = 0;
  double term = 0.0;
  double sigma = 0.0;
  int size = 0;
  int first = 0;
};

std::vector<std::size_t> mask_members(Mask mask) {
  std::vector<std::size_t> out;
  while (mask != 0) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(mask)));
    mask &= mask - 1;
  }
  return out;
}

Mask members_mask(std::span<const std::size_t> members) {
  Mask m = 0;
  for (const std::size_t i : members) m |= Mask{1} << i;
  return m;
}

// Greedy ordering: smaller term, then larger cluster, smaller MPS spread,
// earlier first member, then lexicographic members.
bool greedy_before(const Candidate& a, const Candidate& b) {
  if (a.term != b.term) return a.term < b.term;
  if (a.size != b.size) return a.size > b.size;
  if (a.sigma != b.sigma) return a.sigma < b.sigma;
  if (a.first != b.first) return a.first < b.first;
  const Mask diff = a.mask ^ b.mask;
  return diff != 0 && (a.mask & (diff & -diff)) != 0;
}

class Enumerator {
 public:
  Enumerator(const ClusterInput& input, const ClusteringConfig& cfg)
      : input_(input), cfg_(cfg), log_c_max_(cfg.c_max) {}

  std::vector<Candidate> run() {
    const std::size_t m = input_.size();
    path_.clear();
    for (std::size_t i = 0; i < m && !truncated_; ++i) {
      path_.push_back(i);
      for (std::size_t j = i + 1; j < m && !truncated_; ++j) {
        const double gap = input_.times[static_cast<Eigen::Index>(j)] - input_.times[static_cast<Eigen::Index>(i)];
        if (!(gap > cfg_.ici_min)) continue;
        if (!(gap < cfg_.ici_max)) break;
        path_.push_back(j);
        if (path_.size() >= static_cast<std::size_t>(cfg_.min_cluster_size)) record();
        if (path_.size() < static_cast<std::size_t>(cfg_.rho_click)) extend(j, i);
        path_.pop_back();
      }
      path_.pop_back();
    }
    return std::move(out_);
  }

  bool truncated() const { return truncated_; }

 private:
  void extend(std::size_t last, std::size_t before) {
    const double t_last = input_.times[static_cast<Eigen::Index>(last)];
    const double t_before = input_.times[static_cast<Eigen::Index>(before)];
    for (std::size_t k = last + 1; k < input_.size() && !truncated_; ++k) {
      const double t_k = input_.times[static_cast<Eigen::Index>(k)];
      const double gap = t_k - t_last;
      if (!(gap > cfg_.ici_min)) continue;
      if (!(gap < cfg_.ici_max)) break;
      const double c = consistency(t_before, t_last, t_k);
      if (!(c < log_c_max_)) {
        // Later candidates only widen the gap.
        if (gap > t_last - t_before) break;
        continue;
      }
      path_.push_back(k);
      if (path_.size() >= static_cast<std::size_t>(cfg_.min_cluster_size)) record();
      if (path_.size() < static_cast<std::size_t>(cfg_.rho_click)) extend(k, last);
      path_.pop_back();
    }
  }

  void record() {
    if (out_.size() >= cfg_.max_feasible_subsets) {
      truncated_ = true;
      return;
    }
    Candidate c;
    c.mask = members_mask(path_);
    c.size = static_cast<int>(path_.size());
    c.first = static_cast<int>(path_.front());
    Eigen::VectorXd values(c.size);
    for (int i = 0; i < c.size; ++i) values[i] = input_.mps[static_cast<Eigen::Index>(path_[static_cast<std::size_t>(i)])];
    c.sigma = population_stddev(values);
    c.term = cluster_term(path_, input_, cfg_);
    out_.push_back(c);
  }

  const ClusterInput& input_;
  const ClusteringConfig& cfg_;
  double log_c_max_;
  std::vector<std::size_t> path_;
  std::vector<Candidate> out_;
  bool truncated_ = false;
};

double utility_of(std::span<const Candidate> chosen) {
  double sum = 0.0;
  for (const auto& c : chosen) sum += c.term;
  return 1.0 / static_cast<double>(chosen.size()) + sum;
}

// Repeatedly takes the disjoint candidate with the smallest term while the
// 1/K saving pays for it. Candidates larger than `cap` are ignored.
std::vector<Candidate> greedy(const std::vector<Candidate>& candidates, int cap) {
  std::vector<Candidate> chosen;
  Mask used = 0;
  for (;;) {
    const Candidate* best = nullptr;
    for (const auto& c : candidates) {
      if ((c.mask & used) != 0 || c.size > cap) continue;
      if (best == nullptr || greedy_before(c, *best)) best = &c;
    }
    if (best == nullptr) break;
    const auto k = static_cast<double>(chosen.size());
    if (!chosen.empty() && !(best->term < 1.0 / k - 1.0 / (k + 1.0))) break;
    chosen.push_back(*best);
    used |= best->mask;
  }
  return chosen;
}

class LocalSearch {
 public:
  LocalSearch(const ClusterInput& input, const ClusteringConfig& cfg) : input_(input), cfg_(cfg) {}

  void improve(std::vector<Candidate>& clusters) const {
    if (clusters.empty()) return;
    const std::size_t m = input_.size();
    for (int iter = 0; iter < cfg_.local_search_iterations; ++iter) {
      double current = utility_of(clusters);
      double best_u = current - 1e-12;
      std::vector<Candidate> best;
      Mask used = 0;
      for (const auto& c : clusters) used |= c.mask;

      auto consider = [&](std::vector<Candidate>&& trial) {
        const double u = utility_of(trial);
        if (u < best_u) {
          best_u = u;
          best = std::move(trial);
        }
      };

      for (std::size_t a = 0; a < clusters.size(); ++a) {
        for (const std::size_t e : mask_members(clusters[a].mask)) {
          const Mask bit = Mask{1} << e;
          auto shrunk = make(clusters[a].mask & ~bit);
          if (shrunk) {
            auto trial = clusters;
            trial[a] = *shrunk;
            consider(std::move(trial));
          }
          for (std::size_t b = 0; b < clusters.size(); ++b) {
            if (b == a || !shrunk) continue;
            if (auto grown = make(clusters[b].mask | bit)) {
              auto trial = clusters;
              trial[a] = *shrunk;
              trial[b] = *grown;
              consider(std::move(trial));
            }
          }
        }
      }
      for (std::size_t e = 0; e < m; ++e) {
        const Mask bit = Mask{1} << e;
        if ((used & bit) != 0) continue;
        for (std::size_t b = 0; b < clusters.size(); ++b) {
          if (auto grown = make(clusters[b].mask | bit)) {
            auto trial = clusters;
            trial[b] = *grown;
            consider(std::move(trial));
          }
        }
      }
      if (best.empty()) break;
      clusters = std::move(best);
    }
  }

 private:
  std::optional<Candidate> make(Mask mask) const {
    const auto members = mask_members(mask);
    if (!is_feasible(members, input_.times, cfg_)) return std::nullopt;
    Candidate c;
    c.mask = mask;
    c.size = static_cast<int>(members.size());
    c.first = static_cast<int>(members.front());
    c.term = cluster_term(members, input_, cfg_);
    return c;
  }

  const ClusterInput& input_;
  const ClusteringConfig& cfg_;
};

// Depth-first packing search. Each element, in index order, is either left
// unassigned or opens a cluster whose first member it is, so every disjoint
// collection is visited once.
class BranchAndBound {
 public:
  BranchAndBound(const std::vector<Candidate>& candidates, std::size_t m, const ClusteringConfig& cfg)
      : m_(m), cfg_(cfg), by_first_(m), suffix_min_(m + 1, std::numeric_limits<double>::infinity()) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      by_first_[static_cast<std::size_t>(candidates[i].first)].push_back(&candidates[i]);
    }
    for (auto& list : by_first_) {
      std::stable_sort(list.begin(), list.end(),
                       [](const Candidate* a, const Candidate* b) { return a->term < b->term; });
    }
    for (std::size_t e = m; e-- > 0;) {
      suffix_min_[e] = suffix_min_[e + 1];
      if (!by_first_[e].empty()) suffix_min_[e] = std::min(suffix_min_[e], by_first_[e].front()->term);
    }
  }

  // Returns false if the node budget ran out.
  bool run(std::vector<Candidate> incumbent) {
    best_ = std::move(incumbent);
    best_u_ = best_.empty() ? std::numeric_limits<double>::infinity() : utility_of(best_);
    stack_.clear();
    search(0, 0, 0.0);
    return !exhausted_;
  }

  const std::vector<Candidate>& best() const { return best_; }

 private:
  void search(std::size_t e, Mask used, double sum) {
    if (exhausted_) return;
    if (++nodes_ > cfg_.exact_node_budget) {
      exhausted_ = true;
      return;
    }
    while (e < m_ && (used & (Mask{1} << e)) != 0) ++e;
    const std::size_t k = stack_.size();
    if (e == m_) {
      if (k > 0) {
        const double u = 1.0 / static_cast<double>(k) + sum;
        if (u < best_u_) {
          best_u_ = u;
          best_ = stack_;
        }
      }
      return;
    }
    if (!bound_allows(e, used, k, sum)) return;

    for (const Candidate* c : by_first_[e]) {
      if ((c->mask & used) != 0) continue;
      stack_.push_back(*c);
      search(e + 1, used | c->mask, sum + c->term);
      stack_.pop_back();
      if (exhausted_) return;
    }
    search(e + 1, used, sum);
  }

  bool bound_allows(std::size_t e, Mask used, std::size_t k, double sum) const {
    const Mask free_mask = ~used & (m_ == 64 ? ~Mask{0} : ((Mask{1} << m_) - 1)) & ~((Mask{1} << e) - 1);
    const std::size_t free = static_cast<std::size_t>(std::popcount(free_mask));
    const std::size_t j_max = free / static_cast<std::size_t>(cfg_.min_cluster_size);
    const double g = suffix_min_[e];
    double lower = std::numeric_limits<double>::infinity();
    for (std::size_t j = (k == 0 ? 1 : 0); j <= j_max; ++j) {
      if (j > 0 && !std::isfinite(g)) break;
      lower = std::min(lower, 1.0 / static_cast<double>(k + j) + sum + static_cast<double>(j) * (j > 0 ? g : 0.0));
    }
    return lower < best_u_;
  }

  std::size_t m_;
  const ClusteringConfig& cfg_;
  std::vector<std::vector<const Candidate*>> by_first_;
  std::vector<double> suffix_min_;
  std::vector<Candidate> stack_;
  std::vector<Candidate> best_;
  double best_u_ = std::numeric_limits<double>::infinity();
  std::uint64_t nodes_ = 0;
  bool exhausted_ = false;
};

}  // namespace

void ClusteringConfig::validate() const {
  if (!(ici_min > 0.0) || !(ici_min < ici_max)) throw std::invalid_argument("clustering: require 0 < ici_min < ici_max");
  if (!(c_max > 0.0)) throw std::invalid_argument("clustering: c_max must be > 0");
  if (min_cluster_size < 3) throw std::invalid_argument("clustering: min_cluster_size must be >= 3");
  if (rho_click < min_cluster_size) throw std::invalid_argument("clustering: rho_click must be >= min_cluster_size");
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0)) throw std::invalid_argument("clustering: alpha weights must be >= 0");
  if (exact_limit < 0 || exact_limit > static_cast<int>(kMaxSeries)) {
    throw std::invalid_argument("clustering: exact_limit must lie in [0, 64]");
  }
  if (local_search_iterations < 0) throw std::invalid_argument("clustering: local_search_iterations must be >= 0");
  if (max_feasible_subsets == 0) throw std::invalid_argument("clustering: max_feasible_subsets must be > 0");
}

ClusterInput ClusterInput::from_series(const MpsSeries& series) {
  return {series.times(), series.mps_values(), series.intensities()};
}

double consistency(double t_i, double t_j, double t_k) {
  if (!(t_i < t_j) || !(t_j < t_k)) throw std::invalid_argument("consistency: require t_i < t_j < t_k");
  return std::abs(std::log((t_k - t_j) / (t_j - t_i)));
}

std::uint64_t k_max(int m) {
  if (m < 0) throw std::invalid_argument("k_max: m must be >= 0");
  if (m < 3) return 0;
  if (m > 63) throw std::overflow_error("k_max: result exceeds 64 bits");
  const auto mm = static_cast<std::uint64_t>(m);
  return (std::uint64_t{1} << mm) - 1 - mm - mm * (mm - 1) / 2;
}

double population_stddev(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() == 0) return 0.0;
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().mean());
}

double cluster_term(std::span<const std::size_t> members, const ClusterInput& input,
                    const ClusteringConfig& cfg) {
  if (members.empty()) throw std::invalid_argument("cluster_term: empty cluster");
  const auto l = static_cast<Eigen::Index>(members.size());
  Eigen::VectorXd mps(l);
  Eigen::VectorXd rho(l);
  for (Eigen::Index i = 0; i < l; ++i) {
    const auto idx = static_cast<Eigen::Index>(members[static_cast<std::size_t>(i)]);
    mps[i] = input.mps[idx];
    rho[i] = input.intensity[idx];
  }
  const double sum_sq = rho.squaredNorm();
  const double balance = sum_sq > 0.0 ? 1.0 - rho.sum() * rho.sum() / (static_cast<double>(l) * sum_sq) : 0.0;
  return population_stddev(mps) + cfg.alpha1 * std::exp(-static_cast<double>(l)) + cfg.alpha2 * balance;
}

double cluster_utility(std::span<const ClusterAssignment> clusters, const ClusterInput& input,
                       const ClusteringConfig& cfg) {
  if (clusters.empty()) throw std::invalid_argument("cluster_utility: undefined for K = 0");
  double sum = 0.0;
  for (const auto& c : clusters) sum += cluster_term(c.members, input, cfg);
  return 1.0 / static_cast<double>(clusters.size()) + sum;
}

bool is_feasible(std::span<const std::size_t> members, const Eigen::VectorXd& times,
                 const ClusteringConfig& cfg) {
  if (members.size() < static_cast<std::size_t>(cfg.min_cluster_size) ||
      members.size() > static_cast<std::size_t>(cfg.rho_click)) {
    return false;
  }
  for (std::size_t i = 0; i + 1 < members.size(); ++i) {
    const double gap = times[static_cast<Eigen::Index>(members[i + 1])] - times[static_cast<Eigen::Index>(members[i])];
    if (!(gap > cfg.ici_min) || !(gap < cfg.ici_max)) return false;
    if (i + 2 < members.size()) {
      const double c = consistency(times[static_cast<Eigen::Index>(members[i])],
                                   times[static_cast<Eigen::Index>(members[i + 1])],
                                   times[static_cast<Eigen::Index>(members[i + 2])]);
      if (!(c < cfg.c_max)) return false;
    }
  }
  return true;
}

ClusterAssignment make_assignment(std::vector<std::size_t> members, const Eigen::VectorXd& times) {
  std::sort(members.begin(), members.end());
  ClusterAssignment a;
  a.times.resize(static_cast<Eigen::Index>(members.size()));
  for (std::size_t i = 0; i < members.size(); ++i) {
    a.times[static_cast<Eigen::Index>(i)] = times[static_cast<Eigen::Index>(members[i])];
  }
  a.members = std::move(members);
  return a;
}

namespace {

void check_input(const ClusterInput& input) {
  const Eigen::Index m = input.times.size();
  if (input.mps.size() != m || input.intensity.size() != m) {
    throw std::invalid_argument("clustering: times, mps and intensity differ in length");
  }
  if (static_cast<std::size_t>(m) > kMaxSeries) throw std::invalid_argument("clustering: series longer than 64");
  for (Eigen::Index i = 1; i < m; ++i) {
    if (!(input.times[i] > input.times[i - 1])) throw std::invalid_argument("clustering: times must be strictly increasing");
  }
}

}  // namespace

std::vector<ClusterAssignment> feasible_subsets(const ClusterInput& input, const ClusteringConfig& cfg) {
  cfg.validate();
  check_input(input);
  Enumerator en(input, cfg);
  std::vector<ClusterAssignment> out;
  for (const auto& c : en.run()) out.push_back(make_assignment(mask_members(c.mask), input.times));
  return out;
}

ClusterSolution solve_clustering(const ClusterInput& input, const ClusteringConfig& cfg) {
  cfg.validate();
  check_input(input);
  const std::size_t m = input.size();

  ClusterSolution sol;
  std::vector<Candidate> chosen;
  if (m >= static_cast<std::size_t>(cfg.min_cluster_size)) {
    Enumerator en(input, cfg);
    const std::vector<Candidate> candidates = en.run();
    sol.feasible_count = candidates.size();
    if (en.truncated()) {
      std::clog << "warning: feasible subset enumeration truncated at " << cfg.max_feasible_subsets << '\n';
    }
    const int full = std::min(cfg.rho_click, static_cast<int>(m));
    chosen = greedy(candidates, full);

    const std::size_t eff_rho = std::min(static_cast<std::size_t>(cfg.rho_click), m);
    const bool exact_regime = m <= static_cast<std::size_t>(cfg.exact_limit) &&
                              eff_rho <= static_cast<std::size_t>(cfg.exact_max_rho_click) &&
                              !en.truncated();
    bool solved = false;
    if (exact_regime) {
      BranchAndBound bnb(candidates, m, cfg);
      solved = bnb.run(chosen);
      if (solved) {
        chosen = bnb.best();
      } else {
        std::clog << "warning: exact clustering exceeded its node budget; using local search\n";
      }
    }
    if (!solved) {
      // The plain greedy tends to lock a long train into one cluster, which
      // single-element moves cannot split. Size-capped restarts give the
      // local search a second, more fragmented starting point.
      std::vector<Candidate> alt;
      for (int cap = full - 1; cap >= cfg.min_cluster_size; --cap) {
        std::vector<Candidate> trial = greedy(candidates, cap);
        if (!trial.empty() && (alt.empty() || utility_of(trial) < utility_of(alt))) alt = std::move(trial);
      }
      const LocalSearch search(input, cfg);
      search.improve(chosen);
      if (!alt.empty()) {
        search.improve(alt);
        if (chosen.empty() || utility_of(alt) < utility_of(chosen)) chosen = std::move(alt);
      }
    }
    sol.exact = solved;
  } else {
    sol.exact = true;
  }

  std::sort(chosen.begin(), chosen.end(), [](const Candidate& a, const Candidate& b) { return a.first < b.first; });
  Mask used = 0;
  for (const auto& c : chosen) {
    sol.clusters.push_back(make_assignment(mask_members(c.mask), input.times));
    used |= c.mask;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if ((used & (Mask{1} << i)) == 0) sol.unassigned.push_back(i);
  }
  if (!sol.clusters.empty()) sol.utility = cluster_utility(sol.clusters, input, cfg);
  return sol;
}

}  // namespace mpscd
