#include "nestkrig/variance_aggregators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nestkrig/errors.hpp"

namespace nestkrig {

Vector variance_weights(AggregationMethod method, const Vector &vars,
                        double v_prior) {
  if (!is_variance_based(method)) {
    throw ArgumentError("variance_weights needs poe, gpoe, bcm or rbcm");
  }
  if (!(v_prior > 0.0)) {
    throw ArgumentError("prior variance must be positive");
  }
  if (vars.size() == 0) {
    throw ArgumentError("variance_weights needs at least one submodel");
  }
  if ((vars.array() < 0.0).any() || !vars.allFinite()) {
    throw ArgumentError("submodel variances must be finite and nonnegative");
  }

  const Vector floored = vars.cwiseMax(kVarianceFloorRelative * v_prior);
  const bool generalized =
      method == AggregationMethod::GPoE || method == AggregationMethod::RBCM;
  const bool committee =
      method == AggregationMethod::BCM || method == AggregationMethod::RBCM;

  Vector beta(vars.size());
  for (Eigen::Index i = 0; i < vars.size(); ++i) {
    beta[i] = generalized
                  ? std::max(0.0, 0.5 * (std::log(v_prior) - std::log(floored[i])))
                  : 1.0;
  }

  const Vector precision = beta.cwiseQuotient(floored);
  double denominator = precision.sum();
  if (committee) {
    denominator += (1.0 - beta.sum()) / v_prior;
  }
  if (!(denominator > 0.0) || !std::isfinite(denominator)) {
    std::ostringstream msg;
    msg << to_string(method) << " weight denominator is " << denominator;
    throw DegenerateWeightsError(msg.str());
  }
  return precision / denominator;
}

VarianceAggregate aggregate_variance_based(const SubmodelBank &bank,
                                           AggregationMethod method,
                                           const PointRef &x) {
  if (!bank.partition().is_disjoint(bank.size())) {
    throw PreconditionError(
        "variance-based aggregation needs a disjoint partition of the design");
  }
  const SubmodelWeights w = bank.weights(x);
  VarianceAggregate out;
  out.method = method;
  out.alphas = variance_weights(method, w.vars, w.prior_variance);
  out.mean = out.alphas.dot(w.means);
  out.effective_weights = bank.scatter(w, out.alphas);
  return out;
}

} // namespace nestkrig
