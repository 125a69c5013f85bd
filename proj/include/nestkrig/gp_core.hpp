#ifndef NESTKRIG_GP_CORE_HPP
#define NESTKRIG_GP_CORE_HPP

#include "nestkrig/kernels.hpp"
#include "nestkrig/linalg.hpp"
#include "nestkrig/types.hpp"

namespace nestkrig {

struct Prediction {
  double mean;
  double variance;
};

/// Predicted variances may come out slightly negative from cancellation.
/// Values down to -kVarianceTolerance are clamped to zero; anything lower
/// means the factorization is broken and is reported as an error.
inline constexpr double kVarianceTolerance = 1e-10;

double clamp_variance(double variance, const char *what);

/*
 * Simple Kriging with a zero mean: the exact conditional law of Y given Y(X).
 *
 * Every solve goes through the stored Cholesky factor of k(X, X) + jitter I;
 * the explicit inverse is never formed.
 */
class FullModel {
public:
  const KernelSpec &spec() const { return spec_; }
  const PointSet &design() const { return design_; }
  const Vector &observations() const { return observations_; }
  const JitteredCholesky &factorization() const { return chol_; }
  double jitter_used() const { return chol_.jitter(); }
  Eigen::Index size() const { return design_.rows(); }

  /// Conditional mean and variance at x.
  Prediction predict(const PointRef &x) const;

  /// Conditional covariance c_full(x, x').
  double covariance(const PointRef &x, const PointRef &xp) const;

  /// Kriging weights k(X, X)^{-1} k(X, x), so that mean = weights . y.
  Vector weights(const PointRef &x) const;

  /// Solves (k(X, X) + jitter I) z = b.
  Vector solve(const Vector &b) const { return chol_.solve(b); }
  Matrix solve(const Matrix &b) const { return chol_.solve(b); }

private:
  friend FullModel fit_full(KernelSpec spec, PointSet design,
                            Vector observations);

  FullModel(KernelSpec spec, PointSet design, Vector observations,
            JitteredCholesky chol);

  KernelSpec spec_;
  PointSet design_;
  Vector observations_;
  JitteredCholesky chol_;
  Vector alpha_;
};

/// Factorizes k(X, X) with jitter escalation (none, then 1e-12 up to 1e-4
/// times the mean diagonal). Throws SingularMatrixError naming the closest
/// pair of design rows when every attempt fails.
FullModel fit_full(KernelSpec spec, PointSet design, Vector observations);

Prediction predict_full(const FullModel &model, const PointRef &x);

double predict_full_cov(const FullModel &model, const PointRef &x,
                        const PointRef &xp);

} // namespace nestkrig

#endif
