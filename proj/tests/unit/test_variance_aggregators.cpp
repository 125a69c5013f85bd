#include <gtest/gtest.h>

#include "nestkrig/aggregation.hpp"
#include "nestkrig/errors.hpp"
#include "nestkrig/variance_aggregators.hpp"
#include "support.hpp"

using namespace nestkrig;

TEST(VarianceWeights, PoEIsPrecisionWeighted) {
  Vector v(3);
  v << 0.5, 0.25, 1.0;
  const Vector a = variance_weights(AggregationMethod::PoE, v, 1.0);
  // precisions 2, 4, 1 over 7
  EXPECT_NEAR(a[0], 2.0 / 7.0, 1e-15);
  EXPECT_NEAR(a[1], 4.0 / 7.0, 1e-15);
  EXPECT_NEAR(a[2], 1.0 / 7.0, 1e-15);
  EXPECT_NEAR(a.sum(), 1.0, 1e-15);
}

TEST(VarianceWeights, AllRulesMatchOracle) {
  Vector v(4);
  v << 0.3, 0.8, 0.05, 0.95;
  for (auto [m, name] : {std::pair{AggregationMethod::PoE, "poe"},
                         std::pair{AggregationMethod::GPoE, "gpoe"},
                         std::pair{AggregationMethod::BCM, "bcm"},
                         std::pair{AggregationMethod::RBCM, "rbcm"}}) {
    const Vector a = variance_weights(m, v, 1.2);
    const oracle::Vec ref = oracle::variance_alphas(name, v, 1.2);
    EXPECT_LT((a - ref).cwiseAbs().maxCoeff(), 1e-14) << name;
  }
}

TEST(VarianceWeights, FloorsZeroVariance) {
  Vector v(2);
  v << 0.0, 0.5;
  const Vector a = variance_weights(AggregationMethod::PoE, v, 1.0);
  EXPECT_TRUE(a.allFinite());
  EXPECT_NEAR(a[0], 1.0, 1e-9);
}

TEST(VarianceWeights, DegenerateGeneralizedPoE) {
  // Every submodel at the prior variance: all log-variance reductions vanish.
  const Vector v = Vector::Constant(3, 1.0);
  EXPECT_THROW(variance_weights(AggregationMethod::GPoE, v, 1.0), DegenerateWeightsError);
  EXPECT_NO_THROW(variance_weights(AggregationMethod::RBCM, v, 1.0));
}

TEST(VarianceWeights, RejectsNested) {
  EXPECT_THROW(variance_weights(AggregationMethod::Nested, Vector::Ones(2), 1.0),
               ArgumentError);
}

TEST(VarianceAggregate, EffectiveWeightsReproduceMean) {
  const support::FivePoint fp;
  auto bank = fp.bank();
  const VarianceAggregate agg =
      aggregate_variance_based(*bank, AggregationMethod::BCM, support::pt(0.63));
  EXPECT_NEAR(agg.effective_weights.dot(fp.values), agg.mean, 1e-13);
  const SubmodelPrediction sp = bank->predict(support::pt(0.63));
  EXPECT_NEAR(agg.alphas.dot(sp.means), agg.mean, 1e-13);
}

TEST(VarianceAggregate, NeedsDisjointPartition) {
  const support::FivePoint fp;
  auto bank = SubmodelBank::fit(support::to_spec(fp.kernel), fp.design, fp.values,
                                Partition{{{0, 1, 2}, {2, 3, 4}}});
  EXPECT_THROW(aggregate_variance_based(*bank, AggregationMethod::PoE, support::pt(0.5)),
               PreconditionError);
}

TEST(Aggregation, MethodNames) {
  EXPECT_EQ(parse_aggregation_method("rBCM"), AggregationMethod::RBCM);
  EXPECT_EQ(to_string(AggregationMethod::GPoE), "gpoe");
  EXPECT_TRUE(is_variance_based(AggregationMethod::BCM));
  EXPECT_FALSE(is_variance_based(AggregationMethod::Nested));
  EXPECT_THROW(parse_aggregation_method("median"), ArgumentError);
}
