#ifndef NESTKRIG_SUBMODELS_HPP
#define NESTKRIG_SUBMODELS_HPP

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nestkrig/gp_core.hpp"
#include "nestkrig/kernels.hpp"
#include "nestkrig/types.hpp"

namespace nestkrig {

using IndexGroup = std::vector<Eigen::Index>;

/// Groups of 0-based row indices into the design. Groups may overlap (the
/// nested aggregator accepts that); variance-based rules require disjointness.
struct Partition {
  std::vector<IndexGroup> groups;

  std::size_t size() const { return groups.size(); }

  /// Every index in [0, n) belongs to at least one group.
  bool covers(Eigen::Index n) const;

  /// No index appears twice and the group sizes add up to n.
  bool is_disjoint(Eigen::Index n) const;

  /// Throws ArgumentError for empty groups or out-of-range indices.
  void validate(Eigen::Index n) const;

  bool operator==(const Partition &) const = default;
};

void to_json(nlohmann::json &j, const Partition &partition);
Partition partition_from_json(const nlohmann::json &j);

enum class PartitionStrategy { ContiguousBlocks, RandomBalanced, NearestCenters };

std::string_view to_string(PartitionStrategy strategy);
PartitionStrategy parse_partition_strategy(std::string_view name);

/*
 * ContiguousBlocks: index order, group sizes differ by at most one, larger
 *   groups first.
 * RandomBalanced: seeded shuffle, then contiguous blocks (indices sorted
 *   within each group).
 * NearestCenters: p distinct seeded rows as centers, each row joins its
 *   nearest center (ties go to the lower center index). An empty group takes
 *   the point farthest from its center in the currently largest group.
 */
Partition make_partition(Eigen::Index n, Eigen::Index p,
                         PartitionStrategy strategy, std::uint64_t seed,
                         const PointSet &design);

/// Per-point outputs of all submodels.
struct SubmodelPrediction {
  Vector means;  ///< M_i(x)
  Vector vars;   ///< v_i(x), clamped to [0, k(x, x)]
  Matrix lambda; ///< p x n, row i = k(x, X_i) k(X_i, X_i)^{-1} scattered
};

/// Same data as SubmodelPrediction with each row of lambda kept compact.
struct SubmodelWeights {
  std::vector<Vector> coefficients; ///< coefficients[i] has |group i| entries
  std::vector<Vector> whitened;     ///< L_i^{-1} k(X_i, x), L_i the group factor
  Vector means;
  Vector vars;
  double prior_variance = 0.0; ///< k(x, x)
  Vector k_design;             ///< k(X, x)
};

/// Kriging submodels fitted on the groups of a partition of one design.
class SubmodelBank {
public:
  /// Fits one FullModel per group. Overlapping groups are allowed.
  static std::shared_ptr<const SubmodelBank>
  fit(KernelSpec spec, PointSet design, Vector observations,
      Partition partition);

  const KernelSpec &spec() const { return spec_; }
  const PointSet &design() const { return design_; }
  const Vector &observations() const { return observations_; }
  const Partition &partition() const { return partition_; }
  const FullModel &submodel(std::size_t i) const { return models_[i]; }
  std::size_t num_submodels() const { return models_.size(); }
  Eigen::Index size() const { return design_.rows(); }

  /// k(X, X) of the whole design (computed once at fit time).
  const Matrix &design_covariance() const { return design_cov_; }

  /*
   * Covariance of the whitened group observations L_i^{-1} Y(X_i), stacked
   * group after group: block (i, j) is L_i^{-1} k(X_i, X_j) L_j^{-T}. Its
   * entries are bounded by the prior variance whatever the conditioning of
   * the groups, which keeps K_M(x) accurate for nearly duplicated points.
   */
  const Matrix &whitened_covariance() const { return whitened_cov_; }
  /// Offset of group i in the stacked ordering.
  Eigen::Index group_offset(std::size_t i) const { return offsets_[i]; }

  SubmodelWeights weights(const PointRef &x) const;
  SubmodelPrediction predict(const PointRef &x) const;

  /// Expands compact coefficients into the dense p x n matrix Lambda(x).
  Matrix dense_lambda(const SubmodelWeights &w) const;

  /// Lambda(x)^T z as an n-vector of weights over Y(X).
  Vector scatter(const SubmodelWeights &w, const Vector &z) const;

private:
  SubmodelBank(KernelSpec spec, PointSet design, Vector observations,
               Partition partition);

  KernelSpec spec_;
  PointSet design_;
  Vector observations_;
  Partition partition_;
  std::vector<FullModel> models_;
  Matrix design_cov_;
  Matrix whitened_cov_;
  std::vector<Eigen::Index> offsets_;
};

SubmodelPrediction predict_submodels(const SubmodelBank &bank,
                                     const PointRef &x);

} // namespace nestkrig

#endif
