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

// Constrained clustering of an MPS series into disjoint, ICI-consistent
// click trains with stable MPS.
//
// A cluster is an index subset of the series whose arrival times, taken in
// order, have every consecutive gap strictly inside (ici_min, ici_max) and
// every consecutive triple with ICI consistency strictly below c_max. The
// solver picks K pairwise-disjoint clusters minimizing
//
//   U = 1/K + sum_k [ sigma(mps_k) + alpha1 * exp(-L_k)
//                     + alpha2 * (1 - (sum rho_k)^2 / (L_k * sum rho_k^2)) ]
//
// with sigma the population standard deviation (seconds) and rho the
// per-click peak intensities.

#ifndef MPSCD_CLUSTER_HPP_
#define MPSCD_CLUSTER_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mpscd/mps.hpp"

namespace mpscd {

struct ClusteringConfig {
  double ici_min = 0.4;  // s
  double ici_max = 2.0;  // s
  double c_max = 0.15;
  int rho_click = 25;  // largest admissible cluster (10 s buffer)
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  int min_cluster_size = 3;
  // Exact branch-and-bound runs when M <= exact_limit and
  // min(rho_click, M) <= exact_max_rho_click; greedy otherwise.
  int exact_limit = 18;
  int exact_max_rho_click = 10;
  std::uint64_t exact_node_budget = 50'000'000;
  int local_search_iterations = 1000;
  std::size_t max_feasible_subsets = 1'000'000;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  /// rho_click = 25 for 10 s buffers.
  static ClusteringConfig ten_second_buffer() { return {}; }
  /// rho_click = 7, the setting used for the runtime figure.
  static ClusteringConfig complexity_example() {
    ClusteringConfig c;
    c.rho_click = 7;
    return c;
  }
};

/// Reference widths of the main-lobe and outlier components of the ICI
/// consistency distribution. They motivate c_max and enter no computation.
struct ConsistencyModel {
  static constexpr double kSigmaMain = 0.0526;
  static constexpr double kSigmaOutlier = 0.1534;
};

/// Column view of an MPS series used by the solver. Times must be strictly
/// increasing; the series holds at most 64 entries.
struct ClusterInput {
  Eigen::VectorXd times;
  Eigen::VectorXd mps;
  Eigen::VectorXd intensity;

  std::size_t size() const { return static_cast<std::size_t>(times.size()); }
  static ClusterInput from_series(const MpsSeries& series);
};

struct ClusterAssignment {
  std::vector<std::size_t> members;  // ascending indices into the series
  Eigen::VectorXd times;

  std::size_t size() const { return members.size(); }
};

struct ClusterSolution {
  std::vector<ClusterAssignment> clusters;
  std::optional<double> utility;  // none when K = 0
  std::vector<std::size_t> unassigned;
  bool exact = false;
  std::size_t feasible_count = 0;

  std::size_t k() const { return clusters.size(); }
};

/// |ln((t_k - t_j) / (t_j - t_i))|; throws unless t_i < t_j < t_k.
double consistency(double t_i, double t_j, double t_k);

/// Number of index subsets of size >= 3 out of m (0 for m < 3).
std::uint64_t k_max(int m);

double population_stddev(const Eigen::Ref<const Eigen::VectorXd>& x);

/// The bracketed per-cluster term of U.
double cluster_term(std::span<const std::size_t> members, const ClusterInput& input,
                    const ClusteringConfig& cfg);

/// U for K >= 1 clusters; throws std::invalid_argument for K = 0 or an
/// empty cluster.
double cluster_utility(std::span<const ClusterAssignment> clusters, const ClusterInput& input,
                       const ClusteringConfig& cfg);

/// True when the ascending member list meets the size, ICI and consistency
/// constraints.
bool is_feasible(std::span<const std::size_t> members, const Eigen::VectorXd& times,
                 const ClusteringConfig& cfg);

ClusterAssignment make_assignment(std::vector<std::size_t> members, const Eigen::VectorXd& times);

/// Every feasible subset, in lexicographic order of member indices.
/// Enumeration extends time-ordered prefixes and abandons a prefix at its
/// first infeasible pair or triple.
std::vector<ClusterAssignment> feasible_subsets(const ClusterInput& input, const ClusteringConfig& cfg);

ClusterSolution solve_clustering(const ClusterInput& input, const ClusteringConfig& cfg);

}  // namespace mpscd

#endif  // MPSCD_CLUSTER_HPP_
