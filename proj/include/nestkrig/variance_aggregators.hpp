#ifndef NESTKRIG_VARIANCE_AGGREGATORS_HPP
#define NESTKRIG_VARIANCE_AGGREGATORS_HPP

#include "nestkrig/aggregation.hpp"
#include "nestkrig/submodels.hpp"
#include "nestkrig/types.hpp"

namespace nestkrig {

/// Submodel variances are floored at this fraction of k(x, x) before any
/// division or logarithm, since v_i vanishes at observation points.
inline constexpr double kVarianceFloorRelative = 1e-12;

/*
 * Weights of the product-of-experts family,
 *
 *   alpha_k = (beta_k / v_k) / D,
 *   D = sum_i beta_i / v_i                                (PoE, gPoE)
 *   D = sum_i beta_i / v_i + (1 - sum_i beta_i) / v_prior (BCM, rBCM)
 *
 * with beta = 1 (PoE, BCM) or beta_i = max(0, log(v_prior / v_i) / 2)
 * (gPoE, rBCM). Throws DegenerateWeightsError when D is not positive.
 */
Vector variance_weights(AggregationMethod method, const Vector &vars,
                        double v_prior);

struct VarianceAggregate {
  AggregationMethod method;
  double mean;
  Vector alphas;            ///< one per submodel
  Vector effective_weights; ///< n weights over Y(X): mean = w . y
};

/// Requires a disjoint partition (PreconditionError otherwise).
VarianceAggregate aggregate_variance_based(const SubmodelBank &bank,
                                           AggregationMethod method,
                                           const PointRef &x);

} // namespace nestkrig

#endif
