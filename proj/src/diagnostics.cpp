#include "nestkrig/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nestkrig/errors.hpp"
#include "nestkrig/linalg.hpp"
#include "nestkrig/nested_aggregator.hpp"

namespace nestkrig {

double exact_mse(const Vector &weights, double prior_variance,
                 const Vector &k_design, const Matrix &design_cov) {
  if (weights.size() != k_design.size() ||
      design_cov.rows() != weights.size()) {
    throw ArgumentError("exact_mse: weight vector length does not match design");
  }
  const double mse = prior_variance - 2.0 * weights.dot(k_design) +
                     weights.dot(design_cov * weights);
  return clamp_variance(mse, "exact MSE");
}

double exact_mse(const Vector &weights, const PointRef &x0,
                 const KernelSpec &spec, const PointSet &design) {
  if (weights.size() != design.rows()) {
    throw ArgumentError("exact_mse: weight vector length does not match design");
  }
  return exact_mse(weights, spec(x0, x0), kernel_vector(spec, design, x0),
                   kernel_matrix(spec, design));
}

ErrorAnalysis::ErrorAnalysis(std::shared_ptr<const SubmodelBank> bank)
    : full_(fit_full(bank->spec(), bank->design(), bank->observations())),
      process_(bank),
      lambda_min_(min_eigenvalue(bank->design_covariance())) {}

bool ErrorAnalysis::well_conditioned() const {
  const Matrix &K = bank().design_covariance();
  return lambda_min_ >= 1e-12 * K.trace() / static_cast<double>(K.rows());
}

double ErrorAnalysis::k_norm_squared(const Vector &u) const {
  return full_.factorization().inverse_quadratic(u);
}

Matrix ErrorAnalysis::delta_matrix(const PointRef &x) const {
  const SubmodelBank &b = bank();
  const SubmodelWeights w = b.weights(x);
  const NestedPrediction np = nested_predict(b, w);
  const Matrix lambda = b.dense_lambda(w);

  // Same active set and ridge as the nested predictor at x.
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < np.KM.rows(); ++i) {
    if (np.KM(i, i) > kInactiveSubmodelRelative * w.prior_variance) {
      active.push_back(i);
    }
  }
  const Eigen::Index n = b.size();
  Matrix delta = full_.solve(Matrix(Matrix::Identity(n, n)));
  if (!active.empty()) {
    const auto q = static_cast<Eigen::Index>(active.size());
    Matrix km(q, q);
    Matrix la(q, n);
    for (Eigen::Index a = 0; a < q; ++a) {
      la.row(a) = lambda.row(active[static_cast<std::size_t>(a)]);
      for (Eigen::Index c = 0; c < q; ++c) {
        km(a, c) = np.KM(active[static_cast<std::size_t>(a)],
                         active[static_cast<std::size_t>(c)]);
      }
    }
    km.diagonal().array() += np.ridge_used;
    Eigen::LLT<Matrix> llt(km);
    if (llt.info() != Eigen::Success) {
      throw SingularAggregationError("K_M(x) is not invertible for Delta(x)");
    }
    delta.noalias() -= la.transpose() * llt.solve(la);
  }
  return 0.5 * (delta + delta.transpose());
}

CovarianceIdentities ErrorAnalysis::covariance_identities(const PointRef &x) const {
  const SubmodelBank &b = bank();
  if (!b.partition().covers(b.size())) {
    throw PreconditionError(
        "covariance-difference identities need every design row in some "
        "group; the aggregated predictor does not interpolate otherwise");
  }
  const Vector kx = kernel_vector(b.spec(), b.design(), x);
  const NestedPrediction np = nested_predict(b, x);
  const Vector wf = full_.weights(x);
  const Vector gap = np.effective_weights - wf;
  const Vector kax = process_.design_cross_covariance(x);

  CovarianceIdentities out;
  out.lhs_mean = gap.dot(b.design_covariance() * gap);
  out.rhs_mean = k_norm_squared(kx - kax);
  out.lhs_var = np.variance - full_.predict(x).variance;
  out.rhs_var = k_norm_squared(kx) - k_norm_squared(kax);
  return out;
}

BoundCheck ErrorAnalysis::error_bound_check(const PointRef &x) const {
  return error_bound_check(x, bank().observations());
}

BoundCheck ErrorAnalysis::error_bound_check(const PointRef &x,
                                            const Vector &y) const {
  const SubmodelBank &b = bank();
  if (y.size() != b.size()) {
    throw ArgumentError("observation vector length does not match design");
  }
  const Vector kx = kernel_vector(b.spec(), b.design(), x);
  const double prior = b.spec()(x, x);
  const NestedPrediction np = nested_predict(b, x);
  const Vector wf = full_.weights(x);
  const double v_full = full_.predict(x).variance;

  BoundCheck out;
  out.mean_gap = (np.effective_weights - wf).dot(y);
  out.var_gap = np.variance - v_full;
  out.delta_norm = symmetric_operator_norm(delta_matrix(x));
  out.k_norm = kx.norm();
  out.y_norm = y.norm();
  out.mean_bound = out.delta_norm * out.k_norm * out.y_norm;
  out.var_bound = out.delta_norm * out.k_norm * out.k_norm;
  out.sandwich_high = submodel_mse(np, prior).minCoeff() - v_full;

  constexpr double kSlack = 1e-8;
  out.mean_ok = std::abs(out.mean_gap) <= out.mean_bound * (1.0 + 1e-9) + 1e-12;
  out.var_ok = std::abs(out.var_gap) <= out.var_bound * (1.0 + 1e-9) + 1e-12;
  out.sandwich_ok =
      out.var_gap >= -kSlack && out.var_gap <= out.sandwich_high + kSlack;
  return out;
}

ErrorReport ErrorAnalysis::report(const PointRef &x) const {
  const SubmodelBank &b = bank();
  const double prior = b.spec()(x, x);
  const NestedPrediction np = nested_predict(b, x);
  const Vector gap = np.effective_weights - full_.weights(x);
  const double v_full = full_.predict(x).variance;

  ErrorReport out;
  out.x = x;
  out.mean_gap_rms = std::sqrt(std::max(0.0, gap.dot(b.design_covariance() * gap)));
  out.var_gap = np.variance - v_full;
  out.sandwich_high = submodel_mse(np, prior).minCoeff() - v_full;
  out.lambda_min = lambda_min_;
  if (b.partition().covers(b.size())) {
    const CovarianceIdentities id = covariance_identities(x);
    out.mean_identity_residual = std::abs(id.lhs_mean - id.rhs_mean);
    out.var_identity_residual = std::abs(id.lhs_var - id.rhs_var);
  }
  return out;
}

BoundsRow ErrorAnalysis::bounds_row(const PointRef &x) const {
  const SubmodelBank &b = bank();
  const double prior = b.spec()(x, x);
  const Vector kx = kernel_vector(b.spec(), b.design(), x);
  const NestedPrediction np = nested_predict(b, x);
  const Prediction full = full_.predict(x);

  BoundsRow row;
  row.mean_gap = np.mean - full.mean;
  const Vector gap = np.effective_weights - full_.weights(x);
  row.mean_gap_rms = std::sqrt(std::max(0.0, gap.dot(b.design_covariance() * gap)));
  row.mean_gap_bound =
      (kx - process_.design_cross_covariance(x)).norm() / std::sqrt(lambda_min_);
  row.var_gap = np.variance - full.variance;
  row.var_gap_upper = submodel_mse(np, prior).minCoeff() - full.variance;
  return row;
}

} // namespace nestkrig
