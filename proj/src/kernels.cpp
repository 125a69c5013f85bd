#include "nestkrig/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "nestkrig/errors.hpp"

namespace nestkrig {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;
constexpr double kSqrt5 = 2.2360679774997896964;

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

} // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
  case KernelFamily::SquaredExponential:
    return "squared_exponential";
  case KernelFamily::Matern12:
    return "matern12";
  case KernelFamily::Matern32:
    return "matern32";
  case KernelFamily::Matern52:
    return "matern52";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  const std::string key = lowercase(name);
  if (key == "squared_exponential" || key == "squaredexponential" ||
      key == "se" || key == "gaussian" || key == "rbf") {
    return KernelFamily::SquaredExponential;
  }
  if (key == "matern12" || key == "matern_1_2" || key == "exponential") {
    return KernelFamily::Matern12;
  }
  if (key == "matern32" || key == "matern_3_2") {
    return KernelFamily::Matern32;
  }
  if (key == "matern52" || key == "matern_5_2") {
    return KernelFamily::Matern52;
  }
  throw ArgumentError("unknown kernel family '" + std::string(name) + "'");
}

KernelSpec::KernelSpec(KernelFamily family, double variance,
                       Vector lengthscales)
    : family_(family), variance_(variance),
      lengthscales_(std::move(lengthscales)) {
  if (!(variance_ > 0.0) || !std::isfinite(variance_)) {
    throw ArgumentError("kernel variance must be positive and finite");
  }
  if (lengthscales_.size() < 1) {
    throw ArgumentError("kernel dimension must be at least 1");
  }
  for (Eigen::Index i = 0; i < lengthscales_.size(); ++i) {
    if (!(lengthscales_[i] > 0.0) || !std::isfinite(lengthscales_[i])) {
      throw ArgumentError("kernel lengthscales must be positive and finite");
    }
  }
}

KernelSpec KernelSpec::isotropic(KernelFamily family, double variance,
                                 double lengthscale, Eigen::Index dim) {
  if (dim < 1) {
    throw ArgumentError("kernel dimension must be at least 1");
  }
  return KernelSpec(family, variance, Vector::Constant(dim, lengthscale));
}

double KernelSpec::correlation(double r2) const {
  switch (family_) {
  case KernelFamily::SquaredExponential:
    return std::exp(-0.5 * r2);
  case KernelFamily::Matern12:
    return std::exp(-std::sqrt(r2));
  case KernelFamily::Matern32: {
    const double s = kSqrt3 * std::sqrt(r2);
    return (1.0 + s) * std::exp(-s);
  }
  case KernelFamily::Matern52: {
    const double s = kSqrt5 * std::sqrt(r2);
    return (1.0 + s + 5.0 * r2 / 3.0) * std::exp(-s);
  }
  }
  return 0.0;
}

double KernelSpec::operator()(const PointRef &x, const PointRef &xp) const {
  const Eigen::Index d = dim();
  if (x.size() != d || xp.size() != d) {
    throw ArgumentError("point dimension " + std::to_string(x.size()) + "/" +
                        std::to_string(xp.size()) +
                        " does not match kernel dimension " +
                        std::to_string(d));
  }
  // (a - b)^2 == (b - a)^2 exactly, so evaluation is bitwise symmetric.
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double t = (x[i] - xp[i]) / lengthscales_[i];
    r2 += t * t;
  }
  return variance_ * correlation(r2);
}

double eval_kernel(const KernelSpec &spec, const PointRef &x,
                   const PointRef &xp) {
  return spec(x, xp);
}

Matrix kernel_matrix(const KernelSpec &spec, const PointSet &a,
                     const PointSet &b) {
  if (a.rows() == 0 || b.rows() == 0) {
    throw ArgumentError("kernel_matrix needs nonempty point sets");
  }
  if (a.cols() != spec.dim() || b.cols() != spec.dim()) {
    throw ArgumentError("point set dimension does not match kernel dimension");
  }
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out(i, j) = spec(a.row(i), b.row(j));
    }
  }
  return out;
}

Matrix kernel_matrix(const KernelSpec &spec, const PointSet &a) {
  if (a.rows() == 0) {
    throw ArgumentError("kernel_matrix needs a nonempty point set");
  }
  if (a.cols() != spec.dim()) {
    throw ArgumentError("point set dimension does not match kernel dimension");
  }
  const Eigen::Index n = a.rows();
  Matrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out(j, j) = spec(a.row(j), a.row(j));
    for (Eigen::Index i = 0; i < j; ++i) {
      out(i, j) = spec(a.row(i), a.row(j));
      out(j, i) = out(i, j);
    }
  }
  return out;
}

Vector kernel_vector(const KernelSpec &spec, const PointSet &a,
                     const PointRef &x) {
  if (a.cols() != spec.dim() || x.size() != spec.dim()) {
    throw ArgumentError("dimension mismatch in kernel_vector");
  }
  Vector out(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    out[i] = spec(a.row(i), x);
  }
  return out;
}

bool neb_qualified(const KernelSpec &spec) {
  return spec.family() != KernelFamily::SquaredExponential;
}

void to_json(nlohmann::json &j, const KernelSpec &spec) {
  j = nlohmann::json::object();
  j["family"] = std::string(to_string(spec.family()));
  j["variance"] = spec.variance();
  const Vector &ls = spec.lengthscales();
  if ((ls.array() == ls[0]).all()) {
    j["lengthscale"] = ls[0];
  } else {
    j["lengthscale"] = std::vector<double>(ls.data(), ls.data() + ls.size());
  }
  j["dim"] = spec.dim();
}

KernelSpec kernel_spec_from_json(const nlohmann::json &j) {
  if (!j.is_object()) {
    throw ParseError("kernel record must be an object");
  }
  for (const auto &item : j.items()) {
    const std::string &key = item.key();
    if (key != "family" && key != "variance" && key != "lengthscale" &&
        key != "dim") {
      throw ParseError("unknown kernel key '" + key + "'");
    }
  }
  try {
    const KernelFamily family =
        parse_kernel_family(j.at("family").get<std::string>());
    const double variance = j.value("variance", 1.0);
    const nlohmann::json &ls = j.at("lengthscale");
    Eigen::Index dim = j.value("dim", Eigen::Index{0});
    Vector lengthscales;
    if (ls.is_array()) {
      const auto values = ls.get<std::vector<double>>();
      lengthscales = Eigen::Map<const Vector>(values.data(),
                                              static_cast<Eigen::Index>(values.size()));
      if (dim == 0) {
        dim = lengthscales.size();
      }
      if (dim != lengthscales.size()) {
        throw ParseError("kernel lengthscale array length does not match dim");
      }
    } else {
      if (dim == 0) {
        dim = 1;
      }
      lengthscales = Vector::Constant(dim, ls.get<double>());
    }
    return KernelSpec(family, variance, lengthscales);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("invalid kernel record: ") + e.what());
  } catch (const ArgumentError &e) {
    throw ParseError(std::string("invalid kernel record: ") + e.what());
  }
}

} // namespace nestkrig
