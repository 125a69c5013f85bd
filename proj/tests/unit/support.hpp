#ifndef NESTKRIG_TESTS_SUPPORT_HPP
#define NESTKRIG_TESTS_SUPPORT_HPP

#include <cmath>
#include <memory>

#include "nestkrig/kernels.hpp"
#include "nestkrig/submodels.hpp"
#include "oracles.hpp"

namespace support {

inline nestkrig::KernelFamily family_of(const std::string &name) {
  if (name == "se") {
    return nestkrig::KernelFamily::SquaredExponential;
  }
  if (name == "m12") {
    return nestkrig::KernelFamily::Matern12;
  }
  if (name == "m32") {
    return nestkrig::KernelFamily::Matern32;
  }
  return nestkrig::KernelFamily::Matern52;
}

inline nestkrig::KernelSpec to_spec(const oracle::Kernel &k) {
  return nestkrig::KernelSpec(family_of(k.family), k.variance, k.lengthscales);
}

inline oracle::Kernel iso(const std::string &family, double variance, double ls,
                          Eigen::Index dim = 1) {
  return {family, variance, oracle::Vec::Constant(dim, ls)};
}

// Five observations of sin(2 pi x) + x, split {0.1, 0.3, 0.5} / {0.7, 0.9},
// squared exponential kernel exp(-12.5 (x - x')^2).
struct FivePoint {
  oracle::Kernel kernel = iso("se", 1.0, 0.2);
  nestkrig::PointSet design;
  nestkrig::Vector values;
  oracle::Groups groups{{0, 1, 2}, {3, 4}};

  FivePoint() : design(5, 1), values(5) {
    design << 0.1, 0.3, 0.5, 0.7, 0.9;
    for (int i = 0; i < 5; ++i) {
      values[i] = std::sin(2.0 * M_PI * design(i, 0)) + design(i, 0);
    }
  }

  std::shared_ptr<const nestkrig::SubmodelBank> bank() const {
    return nestkrig::SubmodelBank::fit(to_spec(kernel), design, values,
                                       nestkrig::Partition{groups});
  }
};

inline nestkrig::Point pt(double x) { return nestkrig::Point::Constant(1, x); }

} // namespace support

#endif
