#include "nestkrig/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace nestkrig {

double JitteredCholesky::inverse_quadratic(const Vector &b) const {
  const Vector half = llt_.matrixL().solve(b);
  return half.squaredNorm();
}

std::optional<JitteredCholesky> factorize_with_jitter(const Matrix &a,
                                                      JitterSchedule schedule) {
  const Eigen::Index n = a.rows();
  if (n == 0 || !a.allFinite()) {
    return std::nullopt;
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) {
    return JitteredCholesky(std::move(llt), 0.0);
  }
  const double scale = a.trace() / static_cast<double>(n);
  if (!(scale > 0.0)) {
    return std::nullopt;
  }
  // Tolerate rounding in the last step of the geometric schedule.
  const double last = schedule.last_relative * (1.0 + 1e-9);
  for (double rel = schedule.first_relative; rel <= last;
       rel *= schedule.growth) {
    const double jitter = rel * scale;
    Matrix shifted = a;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      return JitteredCholesky(std::move(llt), jitter);
    }
  }
  return std::nullopt;
}

double min_eigenvalue(const Matrix &symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric,
                                               Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double symmetric_operator_norm(const Matrix &symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric,
                                               Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace nestkrig
