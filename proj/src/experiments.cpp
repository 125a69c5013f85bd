#include "nestkrig/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nestkrig/diagnostics.hpp"
#include "nestkrig/errors.hpp"
#include "nestkrig/gp_core.hpp"
#include "nestkrig/nested_aggregator.hpp"
#include "nestkrig/parallel.hpp"
#include "nestkrig/variance_aggregators.hpp"

namespace nestkrig {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ceil(n^e), treating values within 1e-9 of an integer as that integer.
Eigen::Index ceil_power(Eigen::Index n, double exponent) {
  const double v = std::pow(static_cast<double>(n), exponent);
  const double nearest = std::round(v);
  if (std::abs(v - nearest) < 1e-9) {
    return static_cast<Eigen::Index>(nearest);
  }
  return static_cast<Eigen::Index>(std::ceil(v));
}

constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

struct SupMse {
  double nested;
  double full;
};

SupMse sup_grid_mse(const SubmodelBank &bank, const FullModel &full,
                    const PointSet &grid) {
  if (grid.rows() == 0) {
    return {kNaN, kNaN};
  }
  const Matrix &K = bank.design_covariance();
  Vector nested(grid.rows());
  Vector best(grid.rows());
  parallel_for(static_cast<std::size_t>(grid.rows()), [&](std::size_t j) {
    const auto r = static_cast<Eigen::Index>(j);
    const SubmodelWeights w = bank.weights(grid.row(r));
    const NestedPrediction np = nested_predict(bank, w);
    nested[r] = exact_mse(np.effective_weights, w.prior_variance, w.k_design, K);
    best[r] = exact_mse(full.solve(w.k_design), w.prior_variance, w.k_design, K);
  });
  return {nested.maxCoeff(), best.maxCoeff()};
}

std::string format_value(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

} // namespace

double radical_inverse(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

Point halton_point(std::uint64_t index, Eigen::Index dim) {
  if (dim < 1 || dim > static_cast<Eigen::Index>(std::size(kPrimes))) {
    throw ArgumentError("Halton sequence supports dimensions 1 to 20");
  }
  Point p(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    p[i] = radical_inverse(index, kPrimes[i]);
  }
  return p;
}

Eigen::Index adversarial_num_groups(Eigen::Index n) { return ceil_power(n, 0.8); }

Eigen::Index adversarial_num_u_groups(Eigen::Index n) {
  return ceil_power(n, 0.2);
}

Eigen::Index adversarial_block_size(Eigen::Index n, Eigen::Index p) {
  if (p < 2) {
    throw ArgumentError("adversarial layout needs at least two groups");
  }
  return (n - 1) / (p - 1);
}

void NonConsistencyConfig::validate() const {
  if (!neb_qualified(spec)) {
    throw ArgumentError("kernel not neb-qualified: the " +
                        std::string(to_string(spec.family())) +
                        " family lacks the no-empty-ball property");
  }
  const Eigen::Index d = spec.dim();
  if (x0.size() != d || xbar.size() != d) {
    throw ArgumentError("x0 and xbar must match the kernel dimension");
  }
  if (!is_variance_based(method)) {
    throw ArgumentError("non-consistency runs need poe, gpoe, bcm or rbcm");
  }
  if (!(spec(x0, xbar) > 0.0)) {
    throw ArgumentError("k(x0, xbar) must be positive");
  }
  const double gap = (x0 - xbar).norm();
  if (!(r > 0.0) || !(r < gap / 4.0)) {
    throw ArgumentError("cluster radius r must satisfy 0 < r < |x0 - xbar| / 4");
  }
  if (!(delta_scale > 0.0)) {
    throw ArgumentError("delta scale must be positive");
  }
  if (n_values.empty()) {
    throw ArgumentError("n_values is empty");
  }
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] < 4) {
      throw ArgumentError("adversarial designs need n >= 4");
    }
    if (i > 0 && n_values[i] <= n_values[i - 1]) {
      throw ArgumentError("n_values must be strictly increasing");
    }
  }
  if (grid.rows() > 0 && grid.cols() != d) {
    throw ArgumentError("grid dimension does not match kernel dimension");
  }
}

AdversarialDesign build_adversarial_design(const NonConsistencyConfig &cfg,
                                           Eigen::Index n) {
  if (!neb_qualified(cfg.spec)) {
    throw ArgumentError("kernel not neb-qualified");
  }
  if (n < 4) {
    throw ArgumentError("adversarial designs need n >= 4");
  }
  if (!(cfg.spec(cfg.x0, cfg.xbar) > 0.0)) {
    throw ArgumentError("k(x0, xbar) must be positive");
  }
  const Eigen::Index d = cfg.spec.dim();
  AdversarialDesign out;
  out.num_groups = adversarial_num_groups(n);
  out.num_u_groups = adversarial_num_u_groups(n);
  if (out.num_u_groups >= out.num_groups) {
    throw ArgumentError("n too small for the adversarial layout");
  }
  out.block_size = adversarial_block_size(n, out.num_groups);
  out.num_u_points = out.num_u_groups * out.block_size;
  out.delta = cfg.delta_scale / std::sqrt(static_cast<double>(n));
  const Eigen::Index num_w = n - out.num_u_points;

  PointSet w_points(num_w, d);
  for (Eigen::Index j = 0; j < num_w; ++j) {
    w_points.row(j) = cfg.xbar;
    w_points(j, 0) -= cfg.r / static_cast<double>(j + 2);
  }

  out.design.resize(n, d);
  Eigen::Index found = 0;
  constexpr std::uint64_t kMaxCandidates = 100'000'000;
  for (std::uint64_t index = 1; found < out.num_u_points; ++index) {
    if (index > kMaxCandidates) {
      throw ArgumentError("could not place the u-points outside the excluded ball");
    }
    const Point candidate = d == 1 ? Point::Constant(1, radical_inverse(index, 2))
                                   : halton_point(index, d);
    if ((candidate - cfg.x0).norm() < out.delta) {
      continue;
    }
    bool clash = false;
    for (Eigen::Index j = 0; j < num_w && !clash; ++j) {
      clash = (candidate - w_points.row(j)).norm() < 1e-12;
    }
    if (clash) {
      continue;
    }
    out.design.row(found++) = candidate;
  }
  out.design.bottomRows(num_w) = w_points;

  // u-groups take consecutive u-points. The w-points are dealt round-robin
  // over the w-groups (first ones capped at C_n, the last one unbounded):
  // consecutive w_j are ~r / j^2 apart, and blocks of them make the group
  // covariances singular to working precision.
  const Eigen::Index c = out.block_size;
  const Eigen::Index num_w_groups = out.num_groups - out.num_u_groups;
  out.partition.groups.resize(static_cast<std::size_t>(out.num_groups));
  for (Eigen::Index g = 0; g < out.num_u_groups; ++g) {
    auto &group = out.partition.groups[static_cast<std::size_t>(g)];
    for (Eigen::Index i = g * c; i < (g + 1) * c; ++i) {
      group.push_back(i);
    }
  }
  Eigen::Index next = out.num_u_points;
  while (next < n) {
    for (Eigen::Index g = 0; g < num_w_groups && next < n; ++g) {
      auto &group =
          out.partition.groups[static_cast<std::size_t>(out.num_u_groups + g)];
      if (g + 1 < num_w_groups && static_cast<Eigen::Index>(group.size()) >= c) {
        continue;
      }
      group.push_back(next++);
    }
  }
  return out;
}

bool ExperimentReport::all_passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(),
                     [](const Verdict &v) { return v.passed; });
}

ExperimentReport run_nonconsistency(const NonConsistencyConfig &cfg) {
  cfg.validate();
  ExperimentReport report;
  report.kind = "nonconsistency";
  report.method = std::string(to_string(cfg.method));

  for (Eigen::Index n : cfg.n_values) {
    const AdversarialDesign adv = build_adversarial_design(cfg, n);
    auto bank = SubmodelBank::fit(cfg.spec, adv.design, Vector::Zero(n),
                                  adv.partition);
    const FullModel full = fit_full(cfg.spec, adv.design, Vector::Zero(n));
    const Matrix &K = bank->design_covariance();
    const SubmodelWeights w = bank->weights(cfg.x0);

    ExperimentRecord rec;
    rec.n = n;
    rec.p = adv.num_groups;
    rec.delta = adv.delta;
    try {
      const Vector alphas = variance_weights(cfg.method, w.vars, w.prior_variance);
      rec.mse_method = exact_mse(bank->scatter(w, alphas), w.prior_variance,
                                 w.k_design, K);
    } catch (const DegenerateWeightsError &e) {
      rec.mse_method = kNaN;
      rec.note = e.what();
    }
    const NestedPrediction np = nested_predict(*bank, w);
    rec.mse_nested =
        exact_mse(np.effective_weights, w.prior_variance, w.k_design, K);
    rec.mse_full =
        exact_mse(full.solve(w.k_design), w.prior_variance, w.k_design, K);

    const auto w_vars = w.vars.tail(adv.num_groups - adv.num_u_groups);
    rec.eps1 = w_vars.minCoeff();
    rec.eps2 = w.prior_variance - w_vars.maxCoeff();

    const SupMse sup = sup_grid_mse(*bank, full, cfg.grid);
    rec.sup_grid_mse_nested = sup.nested;
    rec.sup_grid_mse_full = sup.full;
    rec.nn_bound = kNaN;
    report.records.push_back(rec);
  }

  const auto &recs = report.records;
  {
    bool ok = true;
    std::string detail = "mse_full <= mse_nested <= mse_method at every n";
    for (const auto &r : recs) {
      const bool chain =
          r.mse_full <= r.mse_nested + kDominanceSlack &&
          (std::isnan(r.mse_method) || r.mse_nested <= r.mse_method + kDominanceSlack);
      if (!chain) {
        ok = false;
        detail = "ordering violated at n=" + std::to_string(r.n);
      }
    }
    report.verdicts.push_back({"dominance-chain", ok, detail});
  }
  {
    bool ok = true;
    for (std::size_t i = 1; i < recs.size(); ++i) {
      ok = ok && recs[i].mse_nested < recs[i - 1].mse_nested;
    }
    report.verdicts.push_back(
        {"nested-decreasing", ok, "nested MSE at x0 strictly decreasing in n"});
  }
  {
    const ExperimentRecord &first = recs.front();
    const ExperimentRecord &last = recs.back();
    const bool retained =
        last.mse_method >= kNonConsistencyRetention * first.mse_method;
    const bool dominant =
        last.mse_method >= kNonConsistencyNestedRatio * last.mse_nested;
    std::string detail = "mse_method(n_max)=" + format_value(last.mse_method) +
                         ", mse_method(n_min)=" + format_value(first.mse_method) +
                         ", mse_nested(n_max)=" + format_value(last.mse_nested);
    report.verdicts.push_back(
        {"nonconsistent-trend", retained && dominant, detail});
  }
  {
    bool ok = true;
    for (const auto &r : recs) {
      ok = ok && r.eps1 > 0.0 && r.eps2 > 0.0;
    }
    report.verdicts.push_back(
        {"adversarial-validity", ok,
         "eps1 <= v_k(x0) <= k(x0, x0) - eps2 with eps1, eps2 > 0 for all w-groups"});
  }
  return report;
}

PointSet consistency_design(Eigen::Index n, Eigen::Index dim) {
  if (n < 1) {
    throw ArgumentError("design size must be positive");
  }
  PointSet design(n, dim);
  if (dim == 1) {
    if (n == 1) {
      design(0, 0) = 0.5;
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = static_cast<double>(i) / static_cast<double>(n - 1);
      }
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      design.row(i) = halton_point(static_cast<std::uint64_t>(i + 1), dim);
    }
  }
  return design;
}

double nearest_neighbor_bound(const KernelSpec &spec, const PointSet &design,
                              const PointSet &grid) {
  double sup = 0.0;
  for (Eigen::Index g = 0; g < grid.rows(); ++g) {
    Eigen::Index nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
      const double d = (design.row(i) - grid.row(g)).squaredNorm();
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    const double ktt = spec(design.row(nearest), design.row(nearest));
    const double kxt = spec(grid.row(g), design.row(nearest));
    const double kxx = spec(grid.row(g), grid.row(g));
    const double f = ktt > 0.0 ? kxx - kxt * kxt / ktt : kxx;
    sup = std::max(sup, f);
  }
  return sup;
}

ExperimentReport run_consistency(const ConsistencyConfig &cfg) {
  if (cfg.n_values.empty()) {
    throw ArgumentError("n_values is empty");
  }
  if (cfg.domain_grid.rows() == 0 || cfg.domain_grid.cols() != cfg.spec.dim()) {
    throw ArgumentError("domain grid must be nonempty and match the kernel dimension");
  }
  ExperimentReport report;
  report.kind = "consistency";
  report.method = "nested";

  for (Eigen::Index n : cfg.n_values) {
    const PointSet design = consistency_design(n, cfg.spec.dim());
    const Eigen::Index p =
        cfg.fixed_num_groups > 0 ? std::min(cfg.fixed_num_groups, n)
                                 : ceil_power(n, 0.5);
    Partition partition =
        make_partition(n, p, cfg.partition_rule, cfg.seed, design);
    if (!partition.covers(n)) {
      throw PreconditionError("consistency runs need a covering partition");
    }
    auto bank = SubmodelBank::fit(cfg.spec, design, Vector::Zero(n),
                                  std::move(partition));
    const FullModel full = fit_full(cfg.spec, design, Vector::Zero(n));
    const SupMse sup = sup_grid_mse(*bank, full, cfg.domain_grid);

    ExperimentRecord rec;
    rec.n = n;
    rec.p = p;
    rec.mse_method = kNaN;
    rec.mse_nested = sup.nested;
    rec.mse_full = sup.full;
    rec.sup_grid_mse_nested = sup.nested;
    rec.sup_grid_mse_full = sup.full;
    rec.nn_bound = nearest_neighbor_bound(cfg.spec, design, cfg.domain_grid);
    rec.delta = kNaN;
    rec.eps1 = kNaN;
    rec.eps2 = kNaN;
    report.records.push_back(rec);
  }

  const auto &recs = report.records;
  {
    bool ok = true;
    for (std::size_t i = 1; i < recs.size(); ++i) {
      ok = ok && recs[i].sup_grid_mse_nested < recs[i - 1].sup_grid_mse_nested;
    }
    report.verdicts.push_back(
        {"sup-mse-decreasing", ok, "nested sup-grid MSE strictly decreasing in n"});
  }
  {
    bool ok = true;
    for (const auto &r : recs) {
      ok = ok && r.sup_grid_mse_nested <= r.nn_bound + kConsistencyBoundSlack;
    }
    report.verdicts.push_back({"below-nearest-neighbor-bound", ok,
                               "nested sup-grid MSE <= nearest-neighbor bound"});
  }
  {
    const double first = recs.front().sup_grid_mse_nested;
    const double last = recs.back().sup_grid_mse_nested;
    report.verdicts.push_back(
        {"tenfold-reduction", last < kConsistencyReduction * first,
         "final=" + format_value(last) + ", initial=" + format_value(first)});
  }
  return report;
}

} // namespace nestkrig
