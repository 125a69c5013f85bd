#ifndef NESTKRIG_LINALG_HPP
#define NESTKRIG_LINALG_HPP

#include <optional>

#include <Eigen/Cholesky>

#include "nestkrig/types.hpp"

namespace nestkrig {

/*
 * Diagonal regularization schedule. The first attempt uses no jitter; then
 * jitter = first_relative * mean_diagonal, multiplied by `growth` until it
 * exceeds last_relative * mean_diagonal.
 */
struct JitterSchedule {
  double first_relative;
  double last_relative;
  double growth = 10.0;
};

/// Schedule used for design covariance matrices k(X, X) and sample covariances.
inline constexpr JitterSchedule kDesignJitter{1e-12, 1e-4};

/// Ridge schedule for the p x p submodel covariance K_M(x).
inline constexpr JitterSchedule kAggregationRidge{1e-12, 1e-6};

/// Cholesky factor of A + jitter * I.
class JitteredCholesky {
public:
  JitteredCholesky() = default;
  JitteredCholesky(Eigen::LLT<Matrix> llt, double jitter)
      : llt_(std::move(llt)), jitter_(jitter) {}

  double jitter() const { return jitter_; }
  Eigen::Index size() const { return llt_.rows(); }
  Matrix lower() const { return llt_.matrixL(); }

  Vector solve(const Vector &b) const { return llt_.solve(b); }
  Matrix solve(const Matrix &b) const { return llt_.solve(b); }

  /// L^{-1} b.
  Vector whiten(const Vector &b) const { return llt_.matrixL().solve(b); }
  Matrix whiten(const Matrix &b) const { return llt_.matrixL().solve(b); }
  /// L^{-T} a, so that solve(b) == back_substitute(whiten(b)).
  Vector back_substitute(const Vector &a) const {
    return llt_.matrixU().solve(a);
  }

  /// Squared norm b^T (A + jitter I)^{-1} b.
  double inverse_quadratic(const Vector &b) const;

  const Eigen::LLT<Matrix> &llt() const { return llt_; }

private:
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
};

/// Runs the schedule; nullopt when every attempt fails.
std::optional<JitteredCholesky> factorize_with_jitter(const Matrix &a,
                                                      JitterSchedule schedule);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix &symmetric);

/// Spectral norm of a symmetric matrix.
double symmetric_operator_norm(const Matrix &symmetric);

} // namespace nestkrig

#endif
