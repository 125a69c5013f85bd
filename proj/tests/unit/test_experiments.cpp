#include <gtest/gtest.h>

#include <set>

#include "nestkrig/errors.hpp"
#include "nestkrig/experiments.hpp"
#include "support.hpp"

using namespace nestkrig;

namespace {

NonConsistencyConfig small_config() {
  NonConsistencyConfig cfg{KernelSpec::isotropic(KernelFamily::Matern32, 1.0, 0.3),
                           support::pt(0.2), support::pt(0.6), 0.09, {50, 100, 200}};
  return cfg;
}

} // namespace

TEST(Adversarial, LayoutArithmetic) {
  struct Row {
    Eigen::Index n, p, k, c;
  };
  for (const Row r : {Row{50, 23, 3, 2}, Row{100, 40, 3, 2}, Row{200, 70, 3, 2},
                      Row{400, 121, 4, 3}, Row{800, 211, 4, 3}}) {
    EXPECT_EQ(adversarial_num_groups(r.n), r.p) << r.n;
    EXPECT_EQ(adversarial_num_u_groups(r.n), r.k) << r.n;
    EXPECT_EQ(adversarial_block_size(r.n, r.p), r.c) << r.n;
    // C_n is the largest m with m (p_n - 1) < n.
    EXPECT_LT(r.c * (r.p - 1), r.n);
    EXPECT_GE((r.c + 1) * (r.p - 1), r.n);
  }
  // Exact powers are not rounded up: 32^(4/5) = 16, 32^(1/5) = 2.
  EXPECT_EQ(adversarial_num_groups(32), 16);
  EXPECT_EQ(adversarial_num_u_groups(32), 2);
}

TEST(Adversarial, DesignProperties) {
  const NonConsistencyConfig cfg = small_config();
  for (Eigen::Index n : {50, 100, 200, 400}) {
    const AdversarialDesign adv = build_adversarial_design(cfg, n);
    ASSERT_EQ(adv.design.rows(), n);
    EXPECT_TRUE(adv.partition.covers(n));
    EXPECT_TRUE(adv.partition.is_disjoint(n));
    EXPECT_EQ(static_cast<Eigen::Index>(adv.partition.size()), adv.num_groups);
    EXPECT_NEAR(adv.delta, 1.0 / std::sqrt(static_cast<double>(n)), 1e-15);
    std::set<double> distinct;
    for (Eigen::Index i = 0; i < n; ++i) {
      distinct.insert(adv.design(i, 0));
    }
    EXPECT_EQ(static_cast<Eigen::Index>(distinct.size()), n);
    for (Eigen::Index g = 0; g < adv.num_groups; ++g) {
      const auto &group = adv.partition.groups[static_cast<std::size_t>(g)];
      ASSERT_FALSE(group.empty());
      if (g + 1 < adv.num_groups) {
        EXPECT_EQ(static_cast<Eigen::Index>(group.size()), adv.block_size);
      }
      for (Eigen::Index i : group) {
        const double x = adv.design(i, 0);
        if (g < adv.num_u_groups) {
          EXPECT_GE(std::abs(x - 0.2), adv.delta);
          EXPECT_LT(i, adv.num_u_points);
        } else {
          EXPECT_LT(x, 0.6);
          EXPECT_GE(x, 0.6 - 0.09);
          EXPECT_GE(i, adv.num_u_points);
        }
      }
    }
  }
}

TEST(Adversarial, WPointSequence) {
  const AdversarialDesign adv = build_adversarial_design(small_config(), 50);
  // w_j = xbar - r / (1 + j), j = 1, 2, ...
  EXPECT_DOUBLE_EQ(adv.design(adv.num_u_points, 0), 0.6 - 0.09 / 2.0);
  EXPECT_DOUBLE_EQ(adv.design(adv.num_u_points + 1, 0), 0.6 - 0.09 / 3.0);
}

TEST(LowDiscrepancy, RadicalInverseAndHalton) {
  EXPECT_DOUBLE_EQ(radical_inverse(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(radical_inverse(2, 2), 0.25);
  EXPECT_DOUBLE_EQ(radical_inverse(3, 2), 0.75);
  EXPECT_DOUBLE_EQ(radical_inverse(1, 3), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(radical_inverse(5, 3), 2.0 / 3.0 + 1.0 / 9.0);
  const Point h = halton_point(4, 2);
  EXPECT_DOUBLE_EQ(h[0], 0.125);
  EXPECT_DOUBLE_EQ(h[1], 4.0 / 9.0);
  EXPECT_THROW(halton_point(1, 0), ArgumentError);
}

TEST(NonConsistency, VariantOrderingAndVerdicts) {
  const ExperimentReport report = run_nonconsistency(small_config());
  ASSERT_EQ(report.records.size(), 3u);
  for (const auto &r : report.records) {
    EXPECT_LE(r.mse_full, r.mse_nested + kDominanceSlack);
    EXPECT_LE(r.mse_nested, r.mse_method + kDominanceSlack);
    EXPECT_GT(r.eps1, 0.0);
    EXPECT_GT(r.eps2, 0.0);
  }
  for (const auto &v : report.verdicts) {
    if (v.name != "nonconsistent-trend") {
      EXPECT_TRUE(v.passed) << v.name << ": " << v.detail;
    }
  }
}

TEST(NonConsistency, ConfigValidation) {
  NonConsistencyConfig cfg = small_config();
  cfg.spec = KernelSpec::isotropic(KernelFamily::SquaredExponential, 1.0, 0.3);
  try {
    run_nonconsistency(cfg);
    FAIL() << "expected rejection";
  } catch (const ArgumentError &e) {
    EXPECT_NE(std::string(e.what()).find("kernel not neb-qualified"), std::string::npos);
  }
  cfg = small_config();
  cfg.r = 0.2; // not below |x0 - xbar| / 4 = 0.1
  EXPECT_THROW(run_nonconsistency(cfg), ArgumentError);
  cfg = small_config();
  cfg.method = AggregationMethod::Nested;
  EXPECT_THROW(run_nonconsistency(cfg), ArgumentError);
  cfg = small_config();
  cfg.n_values = {100, 50};
  EXPECT_THROW(run_nonconsistency(cfg), ArgumentError);
  cfg = small_config();
  cfg.n_values = {3};
  EXPECT_THROW(run_nonconsistency(cfg), ArgumentError);
}

TEST(Consistency, DesignsAndBound) {
  const PointSet d = consistency_design(5, 1);
  EXPECT_DOUBLE_EQ(d(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(d(4, 0), 1.0);
  const PointSet h = consistency_design(3, 2);
  EXPECT_DOUBLE_EQ(h(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(h(0, 1), 1.0 / 3.0);

  const KernelSpec spec = KernelSpec::isotropic(KernelFamily::Matern32, 1.0, 0.2);
  // Grid equal to the design: every nearest neighbor is exact.
  EXPECT_NEAR(nearest_neighbor_bound(spec, d, d), 0.0, 1e-15);
  PointSet mid(1, 1);
  mid << 0.125;
  const double k = spec(support::pt(0.125), support::pt(0.0));
  EXPECT_NEAR(nearest_neighbor_bound(spec, d, mid), 1.0 - k * k, 1e-15);
}

TEST(Consistency, SupMseShrinks) {
  PointSet grid(51, 1);
  for (Eigen::Index i = 0; i < 51; ++i) {
    grid(i, 0) = i / 50.0;
  }
  ConsistencyConfig cfg{KernelSpec::isotropic(KernelFamily::Matern32, 1.0, 0.2), grid,
                        {10, 20, 40}};
  const ExperimentReport report = run_consistency(cfg);
  ASSERT_EQ(report.records.size(), 3u);
  EXPECT_EQ(report.records[0].p, 4);
  EXPECT_EQ(report.records[2].p, 7);
  for (const auto &r : report.records) {
    EXPECT_LE(r.sup_grid_mse_full, r.sup_grid_mse_nested + 1e-10);
    EXPECT_LE(r.sup_grid_mse_nested, r.nn_bound + kConsistencyBoundSlack);
  }
  EXPECT_TRUE(report.verdicts[0].passed);
  EXPECT_TRUE(report.verdicts[1].passed);
}
