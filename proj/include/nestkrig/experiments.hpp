#ifndef NESTKRIG_EXPERIMENTS_HPP
#define NESTKRIG_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nestkrig/aggregation.hpp"
#include "nestkrig/kernels.hpp"
#include "nestkrig/submodels.hpp"
#include "nestkrig/types.hpp"

namespace nestkrig {

/*
 * Adversarial layout on D = [0, 1]^d around a target point x0:
 *
 *  - u-points: a low-discrepancy sequence (van der Corput in 1-d, Halton
 *    otherwise) skipping every point closer than delta_n to x0;
 *  - w-points: w_j = xbar - r / (1 + j) e_1, accumulating at xbar;
 *  - p_n = ceil(n^{4/5}) groups, k_n = ceil(n^{1/5}) of them hold u-points,
 *    C_n is the largest m with m (p_n - 1) < n, groups 1..p_n-1 have C_n
 *    points and the last group takes the remaining w-points;
 *  - u-groups hold consecutive u-points, while w-points are dealt
 *    round-robin over the w-groups so that no group holds a run of
 *    nearly coincident w_j.
 *
 * delta_n = delta_scale * n^{-1/2}.
 */
struct NonConsistencyConfig {
  KernelSpec spec;
  Point x0;
  Point xbar;
  double r;
  std::vector<Eigen::Index> n_values;
  AggregationMethod method = AggregationMethod::PoE;
  double delta_scale = 1.0;
  /// Points over which the nested sup-MSE is also reported (may be empty).
  PointSet grid;

  /// Throws ArgumentError / PreconditionError on an invalid configuration.
  void validate() const;
};

struct AdversarialDesign {
  PointSet design;
  Partition partition;
  Eigen::Index num_groups;   ///< p_n
  Eigen::Index num_u_groups; ///< k_n
  Eigen::Index block_size;   ///< C_n
  Eigen::Index num_u_points;
  double delta;
};

/// p_n = ceil(n^{4/5}).
Eigen::Index adversarial_num_groups(Eigen::Index n);
/// k_n = ceil(n^{1/5}).
Eigen::Index adversarial_num_u_groups(Eigen::Index n);
/// Largest m with m (p - 1) < n.
Eigen::Index adversarial_block_size(Eigen::Index n, Eigen::Index p);

AdversarialDesign build_adversarial_design(const NonConsistencyConfig &cfg,
                                           Eigen::Index n);

/// van der Corput radical inverse of `index` in `base`.
double radical_inverse(std::uint64_t index, unsigned base);

/// Point `index` (1-based) of the Halton sequence in [0, 1]^dim.
Point halton_point(std::uint64_t index, Eigen::Index dim);

struct ExperimentRecord {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  double mse_method = 0.0; ///< NaN for consistency runs or failed weights
  double mse_nested = 0.0;
  double mse_full = 0.0;
  double sup_grid_mse_nested = 0.0;
  double sup_grid_mse_full = 0.0;
  double nn_bound = 0.0; ///< nearest-neighbor sup-MSE bound (consistency)
  double delta = 0.0;
  double eps1 = 0.0; ///< min over w-groups of v_k(x0)
  double eps2 = 0.0; ///< k(x0, x0) - max over w-groups of v_k(x0)
  std::string note;
};

struct Verdict {
  std::string name;
  bool passed;
  std::string detail;
};

struct ExperimentReport {
  std::string kind; ///< "nonconsistency" or "consistency"
  std::string method;
  std::vector<ExperimentRecord> records;
  std::vector<Verdict> verdicts;

  bool all_passed() const;
};

/// Finite-n proxy thresholds for the non-consistency verdict.
inline constexpr double kNonConsistencyRetention = 0.5;
inline constexpr double kNonConsistencyNestedRatio = 10.0;
inline constexpr double kDominanceSlack = 1e-10;

/*
 * For every n: builds the adversarial design, evaluates the exact MSE at x0
 * of the configured variance-based rule, of the nested aggregation and of
 * the full model on the same design, and checks the ordering
 * full <= nested <= method.
 */
ExperimentReport run_nonconsistency(const NonConsistencyConfig &cfg);

struct ConsistencyConfig {
  KernelSpec spec;
  PointSet domain_grid;
  std::vector<Eigen::Index> n_values;
  PartitionStrategy partition_rule = PartitionStrategy::RandomBalanced;
  std::uint64_t seed = 1;
  /// Overrides p = ceil(sqrt(n)) when positive.
  Eigen::Index fixed_num_groups = 0;
};

inline constexpr double kConsistencyBoundSlack = 1e-8;
inline constexpr double kConsistencyReduction = 0.1;

/// Dense design for the consistency study: equispaced on [0, 1] in 1-d,
/// Halton points otherwise.
PointSet consistency_design(Eigen::Index n, Eigen::Index dim);

/// sup over the grid of k(x, x) - k(x, t)^2 / k(t, t), t the nearest design row.
double nearest_neighbor_bound(const KernelSpec &spec, const PointSet &design,
                              const PointSet &grid);

ExperimentReport run_consistency(const ConsistencyConfig &cfg);

} // namespace nestkrig

#endif
