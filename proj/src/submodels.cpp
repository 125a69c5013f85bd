#include "nestkrig/submodels.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "nestkrig/errors.hpp"

namespace nestkrig {

bool Partition::covers(Eigen::Index n) const {
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const auto &group : groups) {
    for (Eigen::Index i : group) {
      if (i >= 0 && i < n) {
        seen[static_cast<std::size_t>(i)] = true;
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

bool Partition::is_disjoint(Eigen::Index n) const {
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  Eigen::Index total = 0;
  for (const auto &group : groups) {
    for (Eigen::Index i : group) {
      if (i < 0 || i >= n || seen[static_cast<std::size_t>(i)]) {
        return false;
      }
      seen[static_cast<std::size_t>(i)] = true;
      ++total;
    }
  }
  return total == n;
}

void Partition::validate(Eigen::Index n) const {
  if (groups.empty()) {
    throw ArgumentError("partition has no groups");
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) {
      throw ArgumentError("partition group " + std::to_string(g) + " is empty");
    }
    for (Eigen::Index i : groups[g]) {
      if (i < 0 || i >= n) {
        throw ArgumentError("partition index " + std::to_string(i) +
                            " out of range for " + std::to_string(n) +
                            " design rows");
      }
    }
  }
}

void to_json(nlohmann::json &j, const Partition &partition) {
  j = nlohmann::json{{"groups", partition.groups}};
}

Partition partition_from_json(const nlohmann::json &j) {
  if (!j.is_object() || !j.contains("groups") || j.size() != 1) {
    throw ParseError("partition must be an object with a single 'groups' key");
  }
  try {
    Partition p;
    p.groups = j.at("groups").get<std::vector<IndexGroup>>();
    return p;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("invalid partition: ") + e.what());
  }
}

std::string_view to_string(PartitionStrategy strategy) {
  switch (strategy) {
  case PartitionStrategy::ContiguousBlocks:
    return "contiguous";
  case PartitionStrategy::RandomBalanced:
    return "random";
  case PartitionStrategy::NearestCenters:
    return "nearest";
  }
  return "unknown";
}

PartitionStrategy parse_partition_strategy(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (key == "contiguous" || key == "contiguousblocks" || key == "blocks") {
    return PartitionStrategy::ContiguousBlocks;
  }
  if (key == "random" || key == "randombalanced") {
    return PartitionStrategy::RandomBalanced;
  }
  if (key == "nearest" || key == "nearestcenters" || key == "centers") {
    return PartitionStrategy::NearestCenters;
  }
  throw ArgumentError("unknown partition strategy '" + std::string(name) + "'");
}

namespace {

std::vector<IndexGroup> contiguous_blocks(const std::vector<Eigen::Index> &order,
                                          Eigen::Index p) {
  const auto n = static_cast<Eigen::Index>(order.size());
  const Eigen::Index base = n / p;
  const Eigen::Index extra = n % p;
  std::vector<IndexGroup> groups(static_cast<std::size_t>(p));
  Eigen::Index cursor = 0;
  for (Eigen::Index g = 0; g < p; ++g) {
    const Eigen::Index size = base + (g < extra ? 1 : 0);
    auto &group = groups[static_cast<std::size_t>(g)];
    group.assign(order.begin() + cursor, order.begin() + cursor + size);
    cursor += size;
  }
  return groups;
}

std::vector<IndexGroup> nearest_centers(const PointSet &design, Eigen::Index p,
                                        std::mt19937_64 &rng) {
  const Eigen::Index n = design.rows();
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  std::shuffle(rows.begin(), rows.end(), rng);
  std::vector<Eigen::Index> centers(rows.begin(), rows.begin() + p);

  std::vector<IndexGroup> groups(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    double best_d = (design.row(i) - design.row(centers[0])).squaredNorm();
    for (Eigen::Index c = 1; c < p; ++c) {
      const double d = (design.row(i) - design.row(centers[c])).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    groups[static_cast<std::size_t>(best)].push_back(i);
  }

  // Duplicate rows can leave a center without members.
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!groups[g].empty()) {
      continue;
    }
    std::size_t largest = 0;
    for (std::size_t h = 1; h < groups.size(); ++h) {
      if (groups[h].size() > groups[largest].size()) {
        largest = h;
      }
    }
    auto &donor = groups[largest];
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t k = 0; k < donor.size(); ++k) {
      const double d =
          (design.row(donor[k]) - design.row(centers[largest])).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = k;
      }
    }
    groups[g].push_back(donor[far]);
    donor.erase(donor.begin() + static_cast<std::ptrdiff_t>(far));
  }
  return groups;
}

} // namespace

Partition make_partition(Eigen::Index n, Eigen::Index p,
                         PartitionStrategy strategy, std::uint64_t seed,
                         const PointSet &design) {
  if (p < 1 || p > n) {
    throw ArgumentError("partition needs 1 <= p <= n, got p=" +
                        std::to_string(p) + ", n=" + std::to_string(n));
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);

  Partition partition;
  switch (strategy) {
  case PartitionStrategy::ContiguousBlocks:
    partition.groups = contiguous_blocks(order, p);
    break;
  case PartitionStrategy::RandomBalanced:
    std::shuffle(order.begin(), order.end(), rng);
    partition.groups = contiguous_blocks(order, p);
    for (auto &group : partition.groups) {
      std::sort(group.begin(), group.end());
    }
    break;
  case PartitionStrategy::NearestCenters:
    if (design.rows() != n) {
      throw ArgumentError("nearest-centers partition needs the design points");
    }
    partition.groups = nearest_centers(design, p, rng);
    break;
  }
  return partition;
}

SubmodelBank::SubmodelBank(KernelSpec spec, PointSet design,
                           Vector observations, Partition partition)
    : spec_(std::move(spec)), design_(std::move(design)),
      observations_(std::move(observations)),
      partition_(std::move(partition)) {}

std::shared_ptr<const SubmodelBank>
SubmodelBank::fit(KernelSpec spec, PointSet design, Vector observations,
                  Partition partition) {
  if (design.rows() < 1) {
    throw ArgumentError("submodel bank needs at least one design point");
  }
  if (observations.size() != design.rows()) {
    throw ArgumentError("observation count does not match design rows");
  }
  partition.validate(design.rows());

  std::shared_ptr<SubmodelBank> bank(
      new SubmodelBank(std::move(spec), std::move(design),
                       std::move(observations), std::move(partition)));
  bank->design_cov_ = kernel_matrix(bank->spec_, bank->design_);
  bank->models_.reserve(bank->partition_.size());
  for (const auto &group : bank->partition_.groups) {
    PointSet sub(static_cast<Eigen::Index>(group.size()), bank->design_.cols());
    Vector sub_y(static_cast<Eigen::Index>(group.size()));
    for (std::size_t k = 0; k < group.size(); ++k) {
      sub.row(static_cast<Eigen::Index>(k)) = bank->design_.row(group[k]);
      sub_y[static_cast<Eigen::Index>(k)] = bank->observations_[group[k]];
    }
    bank->models_.push_back(fit_full(bank->spec_, std::move(sub), std::move(sub_y)));
  }

  const auto &groups = bank->partition_.groups;
  const std::size_t p = groups.size();
  Eigen::Index total = 0;
  bank->offsets_.resize(p);
  for (std::size_t i = 0; i < p; ++i) {
    bank->offsets_[i] = total;
    total += static_cast<Eigen::Index>(groups[i].size());
  }
  // Rows: L_i^{-1} k(X_i, X) for every group.
  Matrix left(total, bank->design_.rows());
  for (std::size_t i = 0; i < p; ++i) {
    const auto &group = groups[i];
    const auto ni = static_cast<Eigen::Index>(group.size());
    Matrix rows(ni, bank->design_.rows());
    for (Eigen::Index k = 0; k < ni; ++k) {
      rows.row(k) = bank->design_cov_.row(group[static_cast<std::size_t>(k)]);
    }
    left.middleRows(bank->offsets_[i], ni) =
        bank->models_[i].factorization().whiten(rows);
  }
  Matrix &w = bank->whitened_cov_;
  w.resize(total, total);
  for (std::size_t j = 0; j < p; ++j) {
    const auto &group = groups[j];
    const auto nj = static_cast<Eigen::Index>(group.size());
    Matrix cols(nj, total);
    for (Eigen::Index k = 0; k < nj; ++k) {
      cols.row(k) = left.col(group[static_cast<std::size_t>(k)]).transpose();
    }
    w.middleCols(bank->offsets_[j], nj) =
        bank->models_[j].factorization().whiten(cols).transpose();
  }
  w = 0.5 * (w + w.transpose()).eval();
  return bank;
}

SubmodelWeights SubmodelBank::weights(const PointRef &x) const {
  const std::size_t p = models_.size();
  SubmodelWeights w;
  w.k_design = kernel_vector(spec_, design_, x);
  w.prior_variance = spec_(x, x);
  w.coefficients.resize(p);
  w.whitened.resize(p);
  w.means.resize(static_cast<Eigen::Index>(p));
  w.vars.resize(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    const auto &group = partition_.groups[i];
    Vector kg(static_cast<Eigen::Index>(group.size()));
    for (std::size_t k = 0; k < group.size(); ++k) {
      kg[static_cast<Eigen::Index>(k)] = w.k_design[group[k]];
    }
    const FullModel &model = models_[i];
    w.whitened[i] = model.factorization().whiten(kg);
    w.coefficients[i] = model.factorization().back_substitute(w.whitened[i]);
    const auto ii = static_cast<Eigen::Index>(i);
    w.means[ii] = w.coefficients[i].dot(model.observations());
    const double v = w.prior_variance - w.whitened[i].squaredNorm();
    w.vars[ii] = std::min(clamp_variance(v, "submodel variance"), w.prior_variance);
  }
  return w;
}

Matrix SubmodelBank::dense_lambda(const SubmodelWeights &w) const {
  Matrix lambda = Matrix::Zero(static_cast<Eigen::Index>(models_.size()),
                               design_.rows());
  for (std::size_t i = 0; i < models_.size(); ++i) {
    const auto &group = partition_.groups[i];
    for (std::size_t k = 0; k < group.size(); ++k) {
      lambda(static_cast<Eigen::Index>(i), group[k]) =
          w.coefficients[i][static_cast<Eigen::Index>(k)];
    }
  }
  return lambda;
}

Vector SubmodelBank::scatter(const SubmodelWeights &w, const Vector &z) const {
  Vector out = Vector::Zero(design_.rows());
  for (std::size_t i = 0; i < models_.size(); ++i) {
    const double zi = z[static_cast<Eigen::Index>(i)];
    if (zi == 0.0) {
      continue;
    }
    const auto &group = partition_.groups[i];
    for (std::size_t k = 0; k < group.size(); ++k) {
      out[group[k]] += zi * w.coefficients[i][static_cast<Eigen::Index>(k)];
    }
  }
  return out;
}

SubmodelPrediction SubmodelBank::predict(const PointRef &x) const {
  SubmodelWeights w = weights(x);
  return {w.means, w.vars, dense_lambda(w)};
}

SubmodelPrediction predict_submodels(const SubmodelBank &bank,
                                     const PointRef &x) {
  return bank.predict(x);
}

} // namespace nestkrig
