#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

#include "nestkrig/errors.hpp"
#include "nestkrig/submodels.hpp"
#include "support.hpp"

using namespace nestkrig;

TEST(Partition, ContiguousBlocks) {
  const Partition p = make_partition(10, 3, PartitionStrategy::ContiguousBlocks, 1, {});
  ASSERT_EQ(p.size(), 3u);
  EXPECT_TRUE(p.covers(10));
  EXPECT_TRUE(p.is_disjoint(10));
  std::vector<Eigen::Index> flat;
  for (const auto &g : p.groups) {
    flat.insert(flat.end(), g.begin(), g.end());
    EXPECT_GE(g.size(), 3u);
    EXPECT_LE(g.size(), 4u);
  }
  for (Eigen::Index i = 0; i < 10; ++i) {
    EXPECT_EQ(flat[static_cast<std::size_t>(i)], i);
  }
}

TEST(Partition, RandomIsSeededAndBalanced) {
  const Partition a = make_partition(23, 4, PartitionStrategy::RandomBalanced, 5, {});
  const Partition b = make_partition(23, 4, PartitionStrategy::RandomBalanced, 5, {});
  const Partition c = make_partition(23, 4, PartitionStrategy::RandomBalanced, 6, {});
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == c);
  EXPECT_TRUE(a.is_disjoint(23));
  for (const auto &g : a.groups) {
    EXPECT_GE(g.size(), 5u);
    EXPECT_LE(g.size(), 6u);
  }
}

TEST(Partition, NearestCentersCoversWithoutEmptyGroups) {
  std::mt19937_64 rng(3);
  const oracle::Mat X = oracle::separated_design(rng, 30, 2, 0.01);
  const Partition p = make_partition(30, 6, PartitionStrategy::NearestCenters, 2, X);
  EXPECT_EQ(p.size(), 6u);
  EXPECT_TRUE(p.is_disjoint(30));
  for (const auto &g : p.groups) {
    EXPECT_FALSE(g.empty());
  }
  EXPECT_THROW(make_partition(30, 6, PartitionStrategy::NearestCenters, 2, {}),
               ArgumentError);
}

TEST(Partition, ValidationAndOverlap) {
  Partition overlap{{{0, 1}, {1, 2}}};
  EXPECT_NO_THROW(overlap.validate(3));
  EXPECT_TRUE(overlap.covers(3));
  EXPECT_FALSE(overlap.is_disjoint(3));
  Partition partial{{{0}, {2}}};
  EXPECT_FALSE(partial.covers(3));
  EXPECT_THROW((Partition{{{0}, {}}}).validate(2), ArgumentError);
  EXPECT_THROW((Partition{{{0, 5}}}).validate(2), ArgumentError);
  EXPECT_THROW(make_partition(3, 4, PartitionStrategy::ContiguousBlocks, 1, {}),
               ArgumentError);
}

TEST(Partition, JsonStrict) {
  const Partition p{{{0, 2}, {1}}};
  nlohmann::json j;
  to_json(j, p);
  EXPECT_EQ(partition_from_json(j), p);
  EXPECT_THROW(partition_from_json(nlohmann::json::parse(R"({"groups": [[0]], "x": 1})")),
               ParseError);
  EXPECT_EQ(parse_partition_strategy("random"), PartitionStrategy::RandomBalanced);
  EXPECT_THROW(parse_partition_strategy("kmeans"), ArgumentError);
}

TEST(SubmodelBank, MatchesOracleLambda) {
  std::mt19937_64 rng(21);
  const oracle::Kernel k = support::iso("m52", 1.3, 0.25, 2);
  const oracle::Mat X = oracle::separated_design(rng, 24, 2, 0.03);
  oracle::Vec y = oracle::Vec::Random(24);
  const Partition part = make_partition(24, 5, PartitionStrategy::RandomBalanced, 4, X);
  auto bank = SubmodelBank::fit(support::to_spec(k), X, y, part);
  for (int t = 0; t < 5; ++t) {
    const oracle::Vec x = (oracle::Vec::Random(2).array() + 1.0) / 2.0;
    const oracle::Mat L = oracle::lambda(k, X, part.groups, x);
    const SubmodelPrediction sp = bank->predict(x.transpose());
    EXPECT_LT((sp.lambda - L).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((sp.means - L * y).cwiseAbs().maxCoeff(), 1e-9);
    for (Eigen::Index i = 0; i < 5; ++i) {
      const double v = k(x, x) - L.row(i).dot(oracle::cross(k, X, x));
      EXPECT_NEAR(sp.vars[i], std::max(v, 0.0), 1e-10);
    }
  }
}

TEST(SubmodelBank, WhitenedCovarianceReproducesLambdaKLambda) {
  const support::FivePoint fp;
  auto bank = fp.bank();
  const SubmodelWeights w = bank->weights(support::pt(0.42));
  const Matrix L = bank->dense_lambda(w);
  const Matrix direct = L * bank->design_covariance() * L.transpose();
  Matrix via(2, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      via(i, j) = w.whitened[i].dot(
          bank->whitened_covariance()
              .block(bank->group_offset(i), bank->group_offset(j), w.whitened[i].size(),
                     w.whitened[j].size()) *
          w.whitened[j]);
    }
  }
  EXPECT_LT((direct - via).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SubmodelBank, FivePointFrozenSubmodels) {
  const support::FivePoint fp;
  const SubmodelPrediction sp = predict_submodels(*fp.bank(), support::pt(0.85));
  EXPECT_NEAR(sp.means[0], -0.07308005373919287, 1e-12);
  EXPECT_NEAR(sp.vars[0], 0.9277209354488366, 1e-12);
  EXPECT_NEAR(sp.means[1], 0.1862741085103518, 1e-12);
  EXPECT_NEAR(sp.vars[1], 0.016483076370158778, 1e-12);
}

TEST(SubmodelBank, RejectsMismatchedObservations) {
  const support::FivePoint fp;
  EXPECT_THROW(SubmodelBank::fit(support::to_spec(fp.kernel), fp.design, Vector::Zero(4),
                                 Partition{fp.groups}),
               ArgumentError);
}
