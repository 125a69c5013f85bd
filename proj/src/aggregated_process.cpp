#include "nestkrig/aggregated_process.hpp"

#include <algorithm>
#include <random>

#include <Eigen/Eigenvalues>

#include "nestkrig/errors.hpp"
#include "nestkrig/nested_aggregator.hpp"
#include "nestkrig/parallel.hpp"

namespace nestkrig {

AggregatedProcess::AggregatedProcess(std::shared_ptr<const SubmodelBank> bank)
    : bank_(std::move(bank)) {
  if (!bank_) {
    throw ArgumentError("aggregated process needs a fitted submodel bank");
  }
  const PointSet &design = bank_->design();
  design_weights_ = nested_weight_matrix(design);
  design_prior_cov_ =
      prior_covariance_from_weights(design, design_weights_, design,
                                    design_weights_);
  design_prior_cov_ =
      0.5 * (design_prior_cov_ + design_prior_cov_.transpose()).eval();
  auto chol = factorize_with_jitter(design_prior_cov_, kDesignJitter);
  if (!chol) {
    throw SingularMatrixError(
        "k_A(X, X) is not positive definite even with maximal jitter");
  }
  design_chol_ = std::move(*chol);
}

Vector AggregatedProcess::nested_weights(const PointRef &x) const {
  return nested_predict(*bank_, x).effective_weights;
}

Matrix AggregatedProcess::nested_weight_matrix(const PointSet &points) const {
  Matrix out(bank_->size(), points.rows());
  parallel_for(static_cast<std::size_t>(points.rows()), [&](std::size_t j) {
    const auto col = static_cast<Eigen::Index>(j);
    out.col(col) = nested_predict(*bank_, points.row(col)).effective_weights;
  });
  return out;
}

Matrix AggregatedProcess::prior_covariance_from_weights(const PointSet &a,
                                                        const Matrix &wa,
                                                        const PointSet &b,
                                                        const Matrix &wb) const {
  const KernelSpec &spec = bank_->spec();
  const PointSet &design = bank_->design();
  const Matrix &K = bank_->design_covariance();
  const Matrix kxb = kernel_matrix(spec, design, b);
  const Matrix kxa = kernel_matrix(spec, design, a);
  Matrix out = kernel_matrix(spec, a, b);
  out.noalias() += 2.0 * wa.transpose() * (K * wb);
  out.noalias() -= wa.transpose() * kxb;
  out.noalias() -= kxa.transpose() * wb;
  return out;
}

double AggregatedProcess::prior_covariance(const PointRef &x,
                                           const PointRef &xp) const {
  const KernelSpec &spec = bank_->spec();
  const PointSet &design = bank_->design();
  const Vector w = nested_weights(x);
  const Vector wp = nested_weights(xp);
  const Vector kx = kernel_vector(spec, design, x);
  const Vector kxp = kernel_vector(spec, design, xp);
  return spec(x, xp) + 2.0 * w.dot(bank_->design_covariance() * wp) -
         w.dot(kxp) - wp.dot(kx);
}

Matrix AggregatedProcess::prior_covariance_matrix(const PointSet &a,
                                           const PointSet &b) const {
  return prior_covariance_from_weights(a, nested_weight_matrix(a), b,
                                       nested_weight_matrix(b));
}

Vector AggregatedProcess::design_cross_covariance(const PointRef &x) const {
  const Vector w = nested_weights(x);
  const Vector kx = kernel_vector(bank_->spec(), bank_->design(), x);
  const Matrix &K = bank_->design_covariance();
  const Vector kw = K * w;
  return kx + 2.0 * design_weights_.transpose() * kw -
         design_weights_.transpose() * kx - kw;
}

double AggregatedProcess::posterior_covariance(const PointRef &x,
                                               const PointRef &xp) const {
  const auto &L = design_chol_.llt().matrixL();
  const Vector a = L.solve(design_cross_covariance(x));
  const Vector b = L.solve(design_cross_covariance(xp));
  return prior_covariance(x, xp) - a.dot(b);
}

Matrix AggregatedProcess::posterior_covariance_matrix(const PointSet &grid) const {
  const Matrix wg = nested_weight_matrix(grid);
  Matrix out = prior_covariance_from_weights(grid, wg, grid, wg);
  const Matrix cross = prior_covariance_from_weights(
      bank_->design(), design_weights_, grid, wg);
  const Matrix half = design_chol_.llt().matrixL().solve(cross);
  out.noalias() -= half.transpose() * half;
  return 0.5 * (out + out.transpose());
}

double AggregatedProcess::conditional_mean(const PointRef &x,
                                           const Vector &design_values) const {
  if (design_values.size() != bank_->size()) {
    throw ArgumentError("design values must have one entry per design row");
  }
  return design_cross_covariance(x).dot(design_chol_.solve(design_values));
}

Vector AggregatedProcess::conditional_means(const PointSet &grid,
                                           const Vector &design_values) const {
  if (design_values.size() != bank_->size()) {
    throw ArgumentError("design values must have one entry per design row");
  }
  const Matrix cross = prior_covariance_from_weights(
      bank_->design(), design_weights_, grid, nested_weight_matrix(grid));
  return cross.transpose() * design_chol_.solve(design_values);
}

double k_agg(const AggregatedProcess &model, const PointRef &x,
             const PointRef &xp) {
  return model.prior_covariance(x, xp);
}

double c_agg(const AggregatedProcess &model, const PointRef &x,
             const PointRef &xp) {
  return model.posterior_covariance(x, xp);
}

Matrix sample_paths(const AggregatedProcess &model, const PointSet &grid,
                    std::size_t count, std::uint64_t seed, bool conditional,
                    const std::optional<Vector> &design_values) {
  if (grid.rows() == 0) {
    throw ArgumentError("sample grid is empty");
  }
  Vector mean = Vector::Zero(grid.rows());
  Matrix cov;
  if (conditional) {
    if (!design_values || design_values->size() != model.bank().size()) {
      throw ArgumentError(
          "conditional sampling needs one design value per design row");
    }
    mean = model.conditional_means(grid, *design_values);
    cov = model.posterior_covariance_matrix(grid);
  } else {
    cov = model.prior_covariance_matrix(grid, grid);
  }
  cov = 0.5 * (cov + cov.transpose()).eval();
  Matrix L;
  if (auto chol = factorize_with_jitter(cov, kDesignJitter)) {
    L = chol->lower();
  } else {
    // Positive semidefinite but rank deficient, e.g. c_A on design points
    // where it vanishes: use the eigendecomposition with clamped spectrum.
    double scale = 0.0;
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
      scale = std::max(scale, model.bank().spec()(grid.row(i), grid.row(i)));
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success ||
        eig.eigenvalues().minCoeff() < -kSamplingIndefiniteTolerance * scale) {
      throw SamplingError("sample covariance is not positive semidefinite");
    }
    L = eig.eigenvectors() *
        eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index m = grid.rows();
  Matrix out(static_cast<Eigen::Index>(count), m);
  Vector z(m);
  for (Eigen::Index s = 0; s < out.rows(); ++s) {
    for (Eigen::Index j = 0; j < m; ++j) {
      z[j] = normal(rng);
    }
    out.row(s) = (mean + L * z).transpose();
  }
  return out;
}

} // namespace nestkrig
