#include <gtest/gtest.h>

#include <random>

#include "nestkrig/aggregated_process.hpp"
#include "nestkrig/errors.hpp"
#include "nestkrig/nested_aggregator.hpp"
#include "support.hpp"

using namespace nestkrig;

TEST(AggregatedProcess, FivePointFrozenCovariances) {
  const support::FivePoint fp;
  const AggregatedProcess a(fp.bank());
  EXPECT_NEAR(k_agg(a, support::pt(0.85), support::pt(0.3)), 0.04071836116439571, 1e-12);
  EXPECT_NEAR(k_agg(a, support::pt(0.2), support::pt(0.6)), 0.11094334135548192, 1e-12);
  const KernelSpec spec = support::to_spec(fp.kernel);
  EXPECT_NEAR(k_agg(a, support::pt(0.6), support::pt(0.95)) -
                  spec(support::pt(0.6), support::pt(0.95)),
              -0.0389118862165618, 1e-12);
}

TEST(AggregatedProcess, MatchesDenseOracle) {
  std::mt19937_64 rng(17);
  const oracle::Kernel k = support::iso("m32", 1.0, 0.25, 2);
  const oracle::Mat X = oracle::separated_design(rng, 15, 2, 0.05);
  const Partition part = make_partition(15, 3, PartitionStrategy::RandomBalanced, 2, X);
  const AggregatedProcess a(
      SubmodelBank::fit(support::to_spec(k), X, oracle::Vec::Random(15), part));
  for (int t = 0; t < 10; ++t) {
    const oracle::Vec x = (oracle::Vec::Random(2).array() + 1.0) / 2.0;
    const oracle::Vec xp = (oracle::Vec::Random(2).array() + 1.0) / 2.0;
    EXPECT_NEAR(a.prior_covariance(x.transpose(), xp.transpose()),
                oracle::k_agg(k, X, part.groups, x, xp), 1e-8);
  }
}

TEST(AggregatedProcess, InterpolatesCovarianceAtDesign) {
  const support::FivePoint fp;
  const AggregatedProcess a(fp.bank());
  const Matrix K = kernel_matrix(support::to_spec(fp.kernel), fp.design);
  EXPECT_LT((a.design_prior_covariance() - K).cwiseAbs().maxCoeff(), 1e-8);
  for (double x = 0.0; x <= 1.0; x += 0.05) {
    EXPECT_NEAR(k_agg(a, support::pt(x), support::pt(x)), 1.0, 1e-10);
  }
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(k_agg(a, support::pt(0.3), fp.design.row(i)), K(1, i), 1e-8);
  }
}

TEST(AggregatedProcess, PosteriorMatchesNestedPrediction) {
  const support::FivePoint fp;
  auto bank = fp.bank();
  const AggregatedProcess a(bank);
  for (double x : {0.05, 0.4, 0.85}) {
    const NestedPrediction np = nested_predict(*bank, support::pt(x));
    EXPECT_NEAR(c_agg(a, support::pt(x), support::pt(x)), np.variance, 1e-9);
    EXPECT_NEAR(a.conditional_mean(support::pt(x), fp.values), np.mean, 1e-9);
  }
}

TEST(AggregatedProcess, MatrixFormsAgreeWithPointwise) {
  const support::FivePoint fp;
  const AggregatedProcess a(fp.bank());
  PointSet g(4, 1);
  g << 0.0, 0.25, 0.62, 0.9;
  const Matrix ka = a.prior_covariance_matrix(g, g);
  const Matrix ca = a.posterior_covariance_matrix(g);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      EXPECT_NEAR(ka(i, j), a.prior_covariance(g.row(i), g.row(j)), 1e-13);
      EXPECT_NEAR(ca(i, j), a.posterior_covariance(g.row(i), g.row(j)), 1e-12);
    }
  }
}

TEST(Sampling, DeterministicAndConditional) {
  const support::FivePoint fp;
  const AggregatedProcess a(fp.bank());
  PointSet grid(7, 1);
  grid << 0.0, 0.1, 0.3, 0.45, 0.7, 0.9, 1.0;
  const Matrix s1 = sample_paths(a, grid, 4, 42, false);
  const Matrix s2 = sample_paths(a, grid, 4, 42, false);
  EXPECT_TRUE(s1 == s2);
  EXPECT_EQ(s1.rows(), 4);
  EXPECT_EQ(s1.cols(), 7);
  EXPECT_FALSE(s1 == sample_paths(a, grid, 4, 43, false));

  const Matrix c = sample_paths(a, grid, 20, 3, true, fp.values);
  const int design_cols[] = {1, 2, 4, 5}; // grid points 0.1, 0.3, 0.7, 0.9
  const int design_rows[] = {0, 1, 3, 4};
  for (Eigen::Index s = 0; s < c.rows(); ++s) {
    for (int t = 0; t < 4; ++t) {
      EXPECT_NEAR(c(s, design_cols[t]), fp.values[design_rows[t]], 1e-5);
    }
  }
}

TEST(Sampling, RejectsBadArguments) {
  const support::FivePoint fp;
  const AggregatedProcess a(fp.bank());
  EXPECT_THROW(sample_paths(a, PointSet(0, 1), 1, 1, false), ArgumentError);
  PointSet grid(2, 1);
  grid << 0.2, 0.4;
  EXPECT_THROW(sample_paths(a, grid, 1, 1, true, Vector::Zero(3)), ArgumentError);
}

TEST(Sampling, ConditionalPathsThroughDesignOnly) {
  const support::FivePoint fp;
  const AggregatedProcess process(fp.bank());
  const Matrix paths = sample_paths(process, fp.design, 4, 3, true, fp.values);
  for (Eigen::Index s = 0; s < paths.rows(); ++s) {
    EXPECT_LT((paths.row(s).transpose() - fp.values).cwiseAbs().maxCoeff(), 1e-6);
  }
}
