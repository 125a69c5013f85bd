#include "nestkrig/nested_aggregator.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "nestkrig/errors.hpp"
#include "nestkrig/gp_core.hpp"
#include "nestkrig/linalg.hpp"

namespace nestkrig {

namespace {

// A factorization whose smallest squared pivot is below this fraction of the
// largest diagonal entry is treated as failed; the ridge then takes over.
constexpr double kPivotRelative = 1e-14;

struct CompactCross {
  Vector kM;
  Matrix KM;
};

// kM_i = |a_i|^2 and KM_ij = a_i^T W_ij a_j with a_i = L_i^{-1} k(X_i, x) and
// W the whitened group covariance. Evaluating Lambda K Lambda^T directly
// loses the positive semidefiniteness of K_M when groups hold nearly
// duplicated points (large, cancelling kriging weights).
CompactCross compact_cross(const SubmodelBank &bank, const SubmodelWeights &w) {
  const auto p = static_cast<Eigen::Index>(bank.num_submodels());
  const Matrix &W = bank.whitened_covariance();

  CompactCross out;
  out.kM.resize(p);
  Matrix wa(W.rows(), p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Vector &a = w.whitened[static_cast<std::size_t>(j)];
    out.kM[j] = a.squaredNorm();
    wa.col(j) = W.middleCols(bank.group_offset(static_cast<std::size_t>(j)),
                             a.size()) *
                a;
  }
  out.KM.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Vector &a = w.whitened[static_cast<std::size_t>(i)];
    out.KM.row(i) =
        a.transpose() *
        wa.middleRows(bank.group_offset(static_cast<std::size_t>(i)), a.size());
  }
  out.KM = 0.5 * (out.KM + out.KM.transpose()).eval();
  return out;
}

bool acceptable(const JitteredCholesky &chol, const Matrix &a) {
  const Vector pivots = chol.llt().matrixLLT().diagonal();
  const double smallest = pivots.cwiseAbs().minCoeff();
  return smallest * smallest >= kPivotRelative * a.diagonal().maxCoeff();
}

std::optional<JitteredCholesky> factorize_km(const Matrix &km) {
  const Eigen::Index p = km.rows();
  const double scale = km.trace() / static_cast<double>(p);
  {
    Eigen::LLT<Matrix> llt(km);
    if (llt.info() == Eigen::Success) {
      JitteredCholesky plain(std::move(llt), 0.0);
      if (acceptable(plain, km)) {
        return plain;
      }
    }
  }
  if (!(scale > 0.0)) {
    return std::nullopt;
  }
  const double last = kAggregationRidge.last_relative * (1.0 + 1e-9);
  for (double rel = kAggregationRidge.first_relative; rel <= last;
       rel *= kAggregationRidge.growth) {
    Matrix shifted = km;
    shifted.diagonal().array() += rel * scale;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success) {
      JitteredCholesky ridged(std::move(llt), rel * scale);
      if (acceptable(ridged, shifted)) {
        return ridged;
      }
    }
  }
  return std::nullopt;
}

[[noreturn]] void throw_singular(const Matrix &km,
                                 const std::vector<Eigen::Index> &active) {
  double best = -1.0;
  Eigen::Index bi = 0;
  Eigen::Index bj = 0;
  for (Eigen::Index i = 0; i < km.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < km.rows(); ++j) {
      const double c =
          std::abs(km(i, j)) / std::sqrt(km(i, i) * km(j, j));
      if (c > best) {
        best = c;
        bi = i;
        bj = j;
      }
    }
  }
  std::ostringstream msg;
  msg << "submodel covariance K_M(x) is singular beyond the ridge policy";
  if (best >= 0.0) {
    msg << "; submodels " << active[static_cast<std::size_t>(bi)] << " and "
        << active[static_cast<std::size_t>(bj)] << " are redundant (correlation "
        << best << ")";
  }
  throw SingularAggregationError(msg.str());
}

} // namespace

CrossCovariances cross_covariances(const SubmodelBank &bank,
                                   const PointRef &x) {
  const SubmodelWeights w = bank.weights(x);
  CompactCross cc = compact_cross(bank, w);
  return {std::move(cc.kM), std::move(cc.KM), bank.dense_lambda(w)};
}

NestedPrediction nested_predict(const SubmodelBank &bank,
                                const SubmodelWeights &w) {
  CompactCross cc = compact_cross(bank, w);
  const Eigen::Index p = cc.kM.size();
  const double prior = w.prior_variance;

  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (cc.KM(i, i) > kInactiveSubmodelRelative * prior) {
      active.push_back(i);
    }
  }

  NestedPrediction out;
  out.kM = cc.kM;
  out.KM = cc.KM;
  out.submodel_means = w.means;
  out.submodel_vars = w.vars;
  out.submodel_weights = Vector::Zero(p);
  out.ridge_used = 0.0;

  if (active.empty()) {
    out.mean = 0.0;
    out.variance = prior;
    out.effective_weights = Vector::Zero(bank.size());
    return out;
  }

  const auto q = static_cast<Eigen::Index>(active.size());
  Matrix km(q, q);
  Vector kv(q);
  for (Eigen::Index a = 0; a < q; ++a) {
    kv[a] = cc.kM[active[static_cast<std::size_t>(a)]];
    for (Eigen::Index b = 0; b < q; ++b) {
      km(a, b) = cc.KM(active[static_cast<std::size_t>(a)],
                       active[static_cast<std::size_t>(b)]);
    }
  }
  auto chol = factorize_km(km);
  if (!chol) {
    throw_singular(km, active);
  }
  const Vector z = chol->solve(kv);
  for (Eigen::Index a = 0; a < q; ++a) {
    out.submodel_weights[active[static_cast<std::size_t>(a)]] = z[a];
  }
  out.ridge_used = chol->jitter();
  out.mean = out.submodel_weights.dot(w.means);

  double variance = 0.0;
  if (out.ridge_used == 0.0) {
    variance = prior - kv.dot(z);
  } else {
    // With a ridge, z is no longer K_M^{-1} k_M; report the exact MSE of
    // the predictor actually returned.
    variance = prior - 2.0 * z.dot(kv) + z.dot(km * z);
  }
  out.variance = clamp_variance(variance, "nested variance");
  out.effective_weights = bank.scatter(w, out.submodel_weights);
  return out;
}

NestedPrediction nested_predict(const SubmodelBank &bank, const PointRef &x) {
  return nested_predict(bank, bank.weights(x));
}

Vector submodel_mse(const NestedPrediction &prediction, double prior_variance) {
  Vector out(prediction.kM.size());
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    out[k] = prior_variance - 2.0 * prediction.kM[k] + prediction.KM(k, k);
  }
  return out;
}

} // namespace nestkrig
