#ifndef NESTKRIG_NESTED_AGGREGATOR_HPP
#define NESTKRIG_NESTED_AGGREGATOR_HPP

#include "nestkrig/submodels.hpp"
#include "nestkrig/types.hpp"

namespace nestkrig {

/// Submodels with Var(M_i(x)) at or below this fraction of k(x, x) are
/// numerically zero at x and get aggregation weight zero.
inline constexpr double kInactiveSubmodelRelative = 1e-15;

struct CrossCovariances {
  Vector kM;     ///< Cov(Y(x), M_i(x)) = Lambda(x) k(X, x)
  Matrix KM;     ///< Cov(M_i(x), M_j(x)) = Lambda(x) k(X, X) Lambda(x)^T
  Matrix lambda; ///< dense p x n Lambda(x)
};

CrossCovariances cross_covariances(const SubmodelBank &bank, const PointRef &x);

/// Best linear predictor of Y(x) from M_1(x), ..., M_p(x).
struct NestedPrediction {
  double mean;
  double variance;
  Vector kM;
  Matrix KM;
  Vector submodel_weights;  ///< K_M^{-1} k_M
  Vector effective_weights; ///< Lambda(x)^T K_M^{-1} k_M over Y(X)
  Vector submodel_means;
  Vector submodel_vars;
  double ridge_used;
};

/*
 * Solves K_M z = k_M by Cholesky. If K_M is numerically singular a ridge of
 * 1e-12 * trace / p is added and grown tenfold up to 1e-6 * trace / p;
 * after that SingularAggregationError names the most correlated pair of
 * submodels.
 */
NestedPrediction nested_predict(const SubmodelBank &bank, const PointRef &x);

/// Nested prediction from precomputed submodel weights at x.
NestedPrediction nested_predict(const SubmodelBank &bank,
                                const SubmodelWeights &weights);

/// E[(Y(x) - M_k(x))^2] = k(x, x) - 2 kM_k + KM_kk for every submodel.
Vector submodel_mse(const NestedPrediction &prediction, double prior_variance);

} // namespace nestkrig

#endif
