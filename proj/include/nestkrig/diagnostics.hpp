#ifndef NESTKRIG_DIAGNOSTICS_HPP
#define NESTKRIG_DIAGNOSTICS_HPP

#include <memory>
#include <optional>

#include "nestkrig/aggregated_process.hpp"
#include "nestkrig/gp_core.hpp"
#include "nestkrig/kernels.hpp"
#include "nestkrig/submodels.hpp"
#include "nestkrig/types.hpp"

namespace nestkrig {

/// E[(Y(x0) - w^T Y(X))^2] = k(x0, x0) - 2 w^T k(X, x0) + w^T k(X, X) w.
double exact_mse(const Vector &weights, const PointRef &x0,
                 const KernelSpec &spec, const PointSet &design);

/// Same, with k(x0, x0), k(X, x0) and k(X, X) already at hand.
double exact_mse(const Vector &weights, double prior_variance,
                 const Vector &k_design, const Matrix &design_cov);

struct CovarianceIdentities {
  double lhs_mean; ///< E[(M_A - M_full)^2]
  double rhs_mean; ///< ||k(X, x) - k_A(X, x)||_K^2
  double lhs_var;  ///< v_A - v_full
  double rhs_var;  ///< ||k(X, x)||_K^2 - ||k_A(X, x)||_K^2
};

struct BoundCheck {
  double mean_gap;      ///< M_A(x) - M_full(x)
  double var_gap;       ///< v_A(x) - v_full(x)
  double delta_norm;    ///< operator norm of Delta(x), used as lambda = mu
  double k_norm;        ///< ||k(X, x)||
  double y_norm;        ///< ||Y(X)||
  double mean_bound;    ///< delta_norm * k_norm * y_norm
  double var_bound;     ///< delta_norm * k_norm^2
  double sandwich_high; ///< min_k E[(Y - M_k)^2] - v_full
  bool mean_ok;
  bool var_ok;
  bool sandwich_ok;
};

struct ErrorReport {
  Point x;
  double mean_gap_rms;  ///< sqrt(E[(M_A - M_full)^2])
  double var_gap;       ///< v_A - v_full
  double sandwich_high; ///< min_k E[(Y - M_k)^2] - v_full
  /// Absent when some design row is in no group.
  std::optional<double> mean_identity_residual;
  std::optional<double> var_identity_residual;
  double lambda_min; ///< smallest eigenvalue of k(X, X)
};

/// One row of the bounds report (CSV columns of the same names).
struct BoundsRow {
  double mean_gap;       ///< M_A(x) - M_full(x) for the observed values
  double mean_gap_rms;   ///< sqrt(E[(M_A(x) - M_full(x))^2])
  double mean_gap_bound; ///< lambda_min^{-1/2} ||k(X, x) - k_A(X, x)||, bounds the rms gap
  double var_gap;
  double var_gap_upper;  ///< min_k E[(Y - M_k)^2] - v_full
};

/*
 * Compares a nested aggregation against the full model on the same design.
 * Holds the full-model factorization, the aggregated process and the
 * spectrum bound of k(X, X), so per-point queries stay O(n^2).
 */
class ErrorAnalysis {
public:
  explicit ErrorAnalysis(std::shared_ptr<const SubmodelBank> bank);

  const SubmodelBank &bank() const { return process_.bank(); }
  const FullModel &full_model() const { return full_; }
  const AggregatedProcess &process() const { return process_; }
  double lambda_min() const { return lambda_min_; }

  /// True when the smallest eigenvalue of k(X, X) is at least
  /// 1e-12 * trace / n, i.e. the ||.||_K <= ||.|| / lambda_min bound is usable.
  bool well_conditioned() const;

  /// Delta(x) = K^{-1} - Lambda^T (Lambda K Lambda^T)^{-1} Lambda.
  Matrix delta_matrix(const PointRef &x) const;

  /// u^T k(X, X)^{-1} u.
  double k_norm_squared(const Vector &u) const;

  /// Both sides of the covariance-difference identities. Requires every
  /// design row to be covered by a group (PreconditionError otherwise).
  CovarianceIdentities covariance_identities(const PointRef &x) const;

  BoundCheck error_bound_check(const PointRef &x) const;
  BoundCheck error_bound_check(const PointRef &x, const Vector &y) const;

  ErrorReport report(const PointRef &x) const;

  BoundsRow bounds_row(const PointRef &x) const;

private:
  FullModel full_;
  AggregatedProcess process_;
  double lambda_min_;
};

} // namespace nestkrig

#endif
