#include "nestkrig/gp_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "nestkrig/errors.hpp"

namespace nestkrig {

namespace {

std::string closest_pair_message(const PointSet &design) {
  const Eigen::Index n = design.rows();
  double best = std::numeric_limits<double>::infinity();
  Eigen::Index bi = 0;
  Eigen::Index bj = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (design.row(i) - design.row(j)).norm();
      if (d < best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  }
  std::ostringstream msg;
  msg << "k(X, X) is not positive definite even with maximal jitter";
  if (n >= 2) {
    msg << "; closest design rows are " << bi << " and " << bj
        << " at distance " << best;
  }
  return msg.str();
}

} // namespace

double clamp_variance(double variance, const char *what) {
  if (std::isnan(variance)) {
    throw SingularMatrixError(std::string(what) + " is NaN");
  }
  if (variance < 0.0) {
    if (variance < -kVarianceTolerance) {
      std::ostringstream msg;
      msg << what << " is " << variance
          << ", below the clamping tolerance; the factorization is broken";
      throw SingularMatrixError(msg.str());
    }
    return 0.0;
  }
  return variance;
}

FullModel::FullModel(KernelSpec spec, PointSet design, Vector observations,
                     JitteredCholesky chol)
    : spec_(std::move(spec)), design_(std::move(design)),
      observations_(std::move(observations)), chol_(std::move(chol)) {
  alpha_ = chol_.solve(observations_);
}

FullModel fit_full(KernelSpec spec, PointSet design, Vector observations) {
  if (design.rows() < 1) {
    throw ArgumentError("fit_full needs at least one design point");
  }
  if (observations.size() != design.rows()) {
    throw ArgumentError("observation count " +
                        std::to_string(observations.size()) +
                        " does not match design rows " +
                        std::to_string(design.rows()));
  }
  if (design.cols() != spec.dim()) {
    throw ArgumentError("design dimension does not match kernel dimension");
  }
  if (!observations.allFinite() || !design.allFinite()) {
    throw ArgumentError("design and observations must be finite");
  }
  const Matrix k = kernel_matrix(spec, design);
  auto chol = factorize_with_jitter(k, kDesignJitter);
  if (!chol) {
    throw SingularMatrixError(closest_pair_message(design));
  }
  return FullModel(std::move(spec), std::move(design), std::move(observations),
                   std::move(*chol));
}

Vector FullModel::weights(const PointRef &x) const {
  return chol_.solve(kernel_vector(spec_, design_, x));
}

Prediction FullModel::predict(const PointRef &x) const {
  const Vector kx = kernel_vector(spec_, design_, x);
  const double mean = kx.dot(alpha_);
  const double variance = spec_(x, x) - chol_.inverse_quadratic(kx);
  return {mean, clamp_variance(variance, "full-model variance")};
}

double FullModel::covariance(const PointRef &x, const PointRef &xp) const {
  const Vector kx = kernel_vector(spec_, design_, x);
  const Vector kxp = kernel_vector(spec_, design_, xp);
  const auto &L = chol_.llt().matrixL();
  const Vector a = L.solve(kx);
  const Vector b = L.solve(kxp);
  return spec_(x, xp) - a.dot(b);
}

Prediction predict_full(const FullModel &model, const PointRef &x) {
  return model.predict(x);
}

double predict_full_cov(const FullModel &model, const PointRef &x,
                        const PointRef &xp) {
  return model.covariance(x, xp);
}

} // namespace nestkrig
