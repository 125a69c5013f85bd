#ifndef NESTKRIG_AGGREGATED_PROCESS_HPP
#define NESTKRIG_AGGREGATED_PROCESS_HPP

#include <cstdint>
#include <memory>
#include <optional>

#include "nestkrig/linalg.hpp"
#include "nestkrig/submodels.hpp"
#include "nestkrig/types.hpp"

namespace nestkrig {

/*
 * The process Y_A = M_A + e', where e' is an independent copy of Y - M_A.
 * With w(x) the nested effective weights over Y(X), its covariance is
 *
 *   k_A(x, x') = k(x, x') + 2 w(x)^T K w(x') - w(x)^T k(X, x') - w(x')^T k(X, x)
 *
 * which is the usual k_M / K_M expression rewritten through Lambda. The
 * nested mean and variance are the exact conditional moments of Y_A given
 * Y_A(X). Construction computes w at every design row and factorizes
 * k_A(X, X); everything is sized for analysis work (n, grid up to ~2000).
 */
class AggregatedProcess {
public:
  explicit AggregatedProcess(std::shared_ptr<const SubmodelBank> bank);

  const SubmodelBank &bank() const { return *bank_; }
  std::shared_ptr<const SubmodelBank> bank_ptr() const { return bank_; }

  /// Nested effective weights w(x).
  Vector nested_weights(const PointRef &x) const;

  /// n x m matrix whose columns are w(g) for the rows g of `points`.
  Matrix nested_weight_matrix(const PointSet &points) const;

  /// k_A(x, x').
  double prior_covariance(const PointRef &x, const PointRef &xp) const;

  /// k_A(A, B) for two point sets.
  Matrix prior_covariance_matrix(const PointSet &a, const PointSet &b) const;

  /// k_A(X, X) for the design.
  const Matrix &design_prior_covariance() const { return design_prior_cov_; }

  /// k_A(X, x).
  Vector design_cross_covariance(const PointRef &x) const;

  /// c_A(x, x') = k_A(x, x') - k_A(x, X) k_A(X, X)^{-1} k_A(X, x').
  double posterior_covariance(const PointRef &x, const PointRef &xp) const;
  Matrix posterior_covariance_matrix(const PointSet &grid) const;

  /// m_A(x) = k_A(x, X) k_A(X, X)^{-1} f(X).
  double conditional_mean(const PointRef &x, const Vector &design_values) const;
  Vector conditional_means(const PointSet &grid,
                           const Vector &design_values) const;

  double design_jitter() const { return design_chol_.jitter(); }

private:
  // k_A between the points behind precomputed weight columns.
  Matrix prior_covariance_from_weights(const PointSet &a, const Matrix &wa,
                                       const PointSet &b,
                                       const Matrix &wb) const;

  std::shared_ptr<const SubmodelBank> bank_;
  Matrix design_weights_;
  Matrix design_prior_cov_;
  JitteredCholesky design_chol_;
};

double k_agg(const AggregatedProcess &model, const PointRef &x,
             const PointRef &xp);

double c_agg(const AggregatedProcess &model, const PointRef &x,
             const PointRef &xp);

/*
 * Draws `count` paths of Y_A on `grid` (one path per row of the result).
 * Unconditional paths are N(0, k_A(grid, grid)); conditional paths given
 * Y_A(X) = design_values are N(m_A(grid), c_A(grid, grid)). The covariance
 * is factorized with the design jitter schedule; when that fails (c_A is
 * zero on the design, so grids through design points are rank deficient) a
 * clamped eigendecomposition is used, provided no eigenvalue is below
 * -kSamplingIndefiniteTolerance times the largest prior variance on the
 * grid. Output is a deterministic function of the inputs and the seed.
 */
inline constexpr double kSamplingIndefiniteTolerance = 1e-8;

Matrix sample_paths(const AggregatedProcess &model, const PointSet &grid,
                    std::size_t count, std::uint64_t seed, bool conditional,
                    const std::optional<Vector> &design_values = std::nullopt);

} // namespace nestkrig

#endif
