#include <gtest/gtest.h>

#include <random>

#include "nestkrig/diagnostics.hpp"
#include "nestkrig/errors.hpp"
#include "nestkrig/gp_core.hpp"
#include "nestkrig/nested_aggregator.hpp"
#include "support.hpp"

using namespace nestkrig;

TEST(ExactMse, MatchesOracle) {
  std::mt19937_64 rng(9);
  const oracle::Kernel k = support::iso("m32", 1.4, 0.3, 2);
  const oracle::Mat X = oracle::separated_design(rng, 12, 2, 0.05);
  const oracle::Vec w = oracle::Vec::Random(12);
  oracle::Vec x(2);
  x << 0.3, 0.6;
  EXPECT_NEAR(exact_mse(w, x.transpose(), support::to_spec(k), X),
              oracle::mse(k, X, w, x), 1e-12);
  EXPECT_THROW(exact_mse(oracle::Vec::Zero(3), x.transpose(), support::to_spec(k), X),
               ArgumentError);
}

TEST(ExactMse, FullModelWeightsGiveKrigingVariance) {
  const support::FivePoint fp;
  const FullModel full = fit_full(support::to_spec(fp.kernel), fp.design, fp.values);
  const Vector w = full.weights(support::pt(0.85));
  EXPECT_NEAR(exact_mse(w, support::pt(0.85), full.spec(), fp.design),
              0.0094251331968348, 1e-12);
}

TEST(ErrorAnalysis, CovarianceIdentitiesAgainstBruteForce) {
  std::mt19937_64 rng(31);
  const oracle::Kernel k = support::iso("m52", 1.0, 0.3, 2);
  const oracle::Mat X = oracle::separated_design(rng, 20, 2, 0.05);
  const Partition part = make_partition(20, 4, PartitionStrategy::RandomBalanced, 7, X);
  const ErrorAnalysis analysis(
      SubmodelBank::fit(support::to_spec(k), X, oracle::Vec::Random(20), part));
  const oracle::Mat Kinv = oracle::inverse(oracle::gram(k, X, X));
  for (int t = 0; t < 5; ++t) {
    const oracle::Vec x = (oracle::Vec::Random(2).array() + 1.0) / 2.0;
    const CovarianceIdentities id = analysis.covariance_identities(x.transpose());
    EXPECT_NEAR(id.lhs_mean, id.rhs_mean, 1e-8);
    EXPECT_NEAR(id.lhs_var, id.rhs_var, 1e-8);

    // Brute force: both sides from dense oracle quantities.
    const oracle::Vec y0 = oracle::Vec::Zero(20);
    const oracle::Vec wa = oracle::nested(k, X, y0, part.groups, x).weights;
    const oracle::Vec wf = oracle::krige(k, X, y0, x).weights;
    const oracle::Vec kx = oracle::cross(k, X, x);
    oracle::Vec kax(20);
    for (Eigen::Index i = 0; i < 20; ++i) {
      kax[i] = oracle::k_agg(k, X, part.groups, x, X.row(i).transpose());
    }
    const oracle::Mat K = oracle::gram(k, X, X);
    EXPECT_NEAR(id.lhs_mean, (wa - wf).dot(K * (wa - wf)), 1e-8);
    EXPECT_NEAR(id.rhs_mean, (kx - kax).dot(Kinv * (kx - kax)), 1e-8);
    EXPECT_NEAR(id.rhs_var, kx.dot(Kinv * kx) - kax.dot(Kinv * kax), 1e-8);
  }
}

TEST(ErrorAnalysis, IdentitiesNeedCoveringPartition) {
  const support::FivePoint fp;
  const ErrorAnalysis analysis(SubmodelBank::fit(support::to_spec(fp.kernel), fp.design,
                                                 fp.values, Partition{{{0, 1}, {3, 4}}}));
  EXPECT_THROW(analysis.covariance_identities(support::pt(0.5)), PreconditionError);
  const ErrorReport r = analysis.report(support::pt(0.5));
  EXPECT_FALSE(r.mean_identity_residual.has_value());
}

TEST(ErrorAnalysis, BoundsHoldOnFivePointGrid) {
  const support::FivePoint fp;
  const ErrorAnalysis analysis(fp.bank());
  for (int i = 0; i <= 100; ++i) {
    const Point x = support::pt(i / 100.0);
    const BoundCheck b = analysis.error_bound_check(x);
    EXPECT_TRUE(b.mean_ok) << i;
    EXPECT_TRUE(b.var_ok) << i;
    EXPECT_TRUE(b.sandwich_ok) << i;
    const BoundsRow row = analysis.bounds_row(x);
    EXPECT_LE(row.mean_gap_rms, row.mean_gap_bound * (1 + 1e-9) + 1e-12);
    EXPECT_GE(row.var_gap, -1e-8);
    EXPECT_LE(row.var_gap, row.var_gap_upper + 1e-8);
  }
}

TEST(ErrorAnalysis, SingletonGroupsLoseNothing) {
  std::mt19937_64 rng(2);
  const oracle::Kernel k = support::iso("m32", 1.0, 0.2);
  const oracle::Mat X = oracle::separated_design(rng, 10, 1, 0.04);
  oracle::Groups singletons;
  for (Eigen::Index i = 0; i < 10; ++i) {
    singletons.push_back({i});
  }
  const ErrorAnalysis analysis(
      SubmodelBank::fit(support::to_spec(k), X, oracle::Vec::Random(10), Partition{singletons}));
  for (double x : {0.05, 0.5, 0.93}) {
    EXPECT_LT(symmetric_operator_norm(analysis.delta_matrix(support::pt(x))), 1e-8);
    const ErrorReport r = analysis.report(support::pt(x));
    EXPECT_LT(r.mean_gap_rms, 1e-6);
    EXPECT_LT(std::abs(r.var_gap), 1e-8);
  }
}

TEST(ErrorAnalysis, KNormBoundedBySpectrum) {
  const support::FivePoint fp;
  const ErrorAnalysis analysis(fp.bank());
  ASSERT_TRUE(analysis.well_conditioned());
  Vector u(5);
  u << 0.3, -1.0, 0.2, 0.8, -0.5;
  EXPECT_LE(analysis.k_norm_squared(u), u.squaredNorm() / analysis.lambda_min() * (1 + 1e-12));
  EXPECT_GT(analysis.k_norm_squared(u), 0.0);
}
