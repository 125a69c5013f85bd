#ifndef NESTKRIG_KERNELS_HPP
#define NESTKRIG_KERNELS_HPP

#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "nestkrig/types.hpp"

namespace nestkrig {

enum class KernelFamily { SquaredExponential, Matern12, Matern32, Matern52 };

std::string_view to_string(KernelFamily family);

/// Accepts the canonical names ("squared_exponential", "matern12", ...) and a
/// few common aliases ("se", "gaussian", "rbf", "matern32", "matern_3_2").
KernelFamily parse_kernel_family(std::string_view name);

/*
 * Stationary covariance function on R^d,
 *
 *   k(x, x') = variance * rho(r),   r^2 = sum_i ((x_i - x'_i) / lengthscale_i)^2
 *
 * with rho(r) = exp(-r^2 / 2) for the squared exponential family and the
 * usual closed forms for Matern 1/2, 3/2 and 5/2. Instances are immutable.
 */
class KernelSpec {
public:
  KernelSpec(KernelFamily family, double variance, Vector lengthscales);

  /// Same lengthscale in every one of `dim` dimensions.
  static KernelSpec isotropic(KernelFamily family, double variance,
                              double lengthscale, Eigen::Index dim = 1);

  KernelFamily family() const { return family_; }
  double variance() const { return variance_; }
  const Vector &lengthscales() const { return lengthscales_; }
  Eigen::Index dim() const { return lengthscales_.size(); }

  /// Evaluates k(x, x'); throws ArgumentError on dimension mismatch.
  double operator()(const PointRef &x, const PointRef &xp) const;

  /// Correlation at scaled distance r (no dimension checks).
  double correlation(double scaled_distance_squared) const;

  bool operator==(const KernelSpec &other) const = default;

private:
  KernelFamily family_;
  double variance_;
  Vector lengthscales_;
};

double eval_kernel(const KernelSpec &spec, const PointRef &x,
                   const PointRef &xp);

/// k(A, B), an |A| x |B| matrix. Both sets must be nonempty.
Matrix kernel_matrix(const KernelSpec &spec, const PointSet &a,
                     const PointSet &b);

/// k(A, A); symmetric by construction (upper triangle mirrored).
Matrix kernel_matrix(const KernelSpec &spec, const PointSet &a);

/// Column vector k(A, x).
Vector kernel_vector(const KernelSpec &spec, const PointSet &a,
                     const PointRef &x);

/// Whether the family has a positive spectral density with polynomially
/// bounded inverse, which the adversarial non-consistency construction needs.
/// Matern kernels qualify; the squared exponential does not.
bool neb_qualified(const KernelSpec &spec);

void to_json(nlohmann::json &j, const KernelSpec &spec);
KernelSpec kernel_spec_from_json(const nlohmann::json &j);

} // namespace nestkrig

#endif
