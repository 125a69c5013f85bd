// Reference computations for the tests. Everything here goes through dense
// LU inverses and explicit formulas, never through the library's Cholesky
// or group-wise code paths.
#ifndef NESTKRIG_TESTS_ORACLES_HPP
#define NESTKRIG_TESTS_ORACLES_HPP

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Groups = std::vector<std::vector<Eigen::Index>>;

struct Kernel {
  std::string family; // "se", "m12", "m32", "m52"
  double variance;
  Vec lengthscales;

  double operator()(const Vec &x, const Vec &xp) const {
    const double r = ((x - xp).array() / lengthscales.array()).matrix().norm();
    if (family == "se") {
      return variance * std::exp(-0.5 * r * r);
    }
    if (family == "m12") {
      return variance * std::exp(-r);
    }
    if (family == "m32") {
      const double s = std::sqrt(3.0) * r;
      return variance * (1.0 + s) * std::exp(-s);
    }
    const double s = std::sqrt(5.0) * r;
    return variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
  }
};

inline Mat gram(const Kernel &k, const Mat &a, const Mat &b) {
  Mat out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      out(i, j) = k(a.row(i).transpose(), b.row(j).transpose());
    }
  }
  return out;
}

inline Vec cross(const Kernel &k, const Mat &a, const Vec &x) {
  Vec out(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    out[i] = k(a.row(i).transpose(), x);
  }
  return out;
}

inline Mat inverse(const Mat &a) { return a.fullPivLu().inverse(); }

struct Kriging {
  double mean;
  double variance;
  Vec weights;
};

// Simple Kriging by explicit inversion.
inline Kriging krige(const Kernel &k, const Mat &X, const Vec &y, const Vec &x) {
  const Mat Kinv = inverse(gram(k, X, X));
  const Vec kx = cross(k, X, x);
  const Vec w = Kinv * kx;
  return {w.dot(y), k(x, x) - kx.dot(w), w};
}

// Dense p x n Lambda(x), row i = k(x, X_i) k(X_i, X_i)^{-1} scattered.
inline Mat lambda(const Kernel &k, const Mat &X, const Groups &groups, const Vec &x) {
  Mat L = Mat::Zero(static_cast<Eigen::Index>(groups.size()), X.rows());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto &idx = groups[g];
    Mat Xg(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t t = 0; t < idx.size(); ++t) {
      Xg.row(static_cast<Eigen::Index>(t)) = X.row(idx[t]);
    }
    const Vec a = inverse(gram(k, Xg, Xg)) * cross(k, Xg, x);
    for (std::size_t t = 0; t < idx.size(); ++t) {
      L(static_cast<Eigen::Index>(g), idx[t]) = a[static_cast<Eigen::Index>(t)];
    }
  }
  return L;
}

struct Nested {
  double mean;
  double variance;
  Vec weights; // over Y(X)
  Vec sub_means;
  Vec sub_vars;
};

inline Nested nested(const Kernel &k, const Mat &X, const Vec &y, const Groups &groups,
                     const Vec &x) {
  const Mat L = lambda(k, X, groups, x);
  const Mat K = gram(k, X, X);
  const Vec kx = cross(k, X, x);
  const Mat KM = L * K * L.transpose();
  const Vec kM = L * kx;
  const Vec z = KM.fullPivLu().solve(kM);
  const Vec w = L.transpose() * z;
  Vec vars(L.rows());
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    vars[i] = k(x, x) - kM[i];
  }
  return {w.dot(y), k(x, x) - kM.dot(z), w, L * y, vars};
}

// E[(Y(x) - w^T Y(X))^2].
inline double mse(const Kernel &k, const Mat &X, const Vec &w, const Vec &x) {
  return k(x, x) - 2.0 * w.dot(cross(k, X, x)) + w.dot(gram(k, X, X) * w);
}

// Covariance of the aggregated process built from the dense Lambda route.
inline double k_agg(const Kernel &k, const Mat &X, const Groups &groups, const Vec &x,
                    const Vec &xp) {
  const Vec y = Vec::Zero(X.rows());
  const Vec w = nested(k, X, y, groups, x).weights;
  const Vec wp = nested(k, X, y, groups, xp).weights;
  const Mat K = gram(k, X, X);
  // Cov(M_A(x), M_A(x')) + Cov(Y(x) - M_A(x), Y(x') - M_A(x')).
  const double signal = w.dot(K * wp);
  const double noise = k(x, xp) - w.dot(cross(k, X, xp)) - wp.dot(cross(k, X, x)) +
                       w.dot(K * wp);
  return signal + noise;
}

// Variance-based aggregation weights, written out per rule.
inline Vec variance_alphas(const std::string &method, const Vec &vars, double prior) {
  const Eigen::Index p = vars.size();
  Vec beta = Vec::Ones(p);
  if (method == "gpoe" || method == "rbcm") {
    for (Eigen::Index i = 0; i < p; ++i) {
      beta[i] = std::max(0.0, 0.5 * (std::log(prior) - std::log(vars[i])));
    }
  }
  double denom = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    denom += beta[i] / vars[i];
  }
  if (method == "bcm" || method == "rbcm") {
    denom += (1.0 - beta.sum()) / prior;
  }
  Vec out(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    out[i] = beta[i] / vars[i] / denom;
  }
  return out;
}

// Random design with a minimum pairwise separation.
inline Mat separated_design(std::mt19937_64 &rng, Eigen::Index n, Eigen::Index d,
                            double min_sep) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat X(n, d);
  Eigen::Index filled = 0;
  for (long attempts = 0; filled < n; ++attempts) {
    if (attempts > 1000000) {
      throw std::runtime_error("separated_design: separation too large for n");
    }
    Vec c(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      c[j] = u(rng);
    }
    bool ok = true;
    for (Eigen::Index i = 0; i < filled && ok; ++i) {
      ok = (X.row(i).transpose() - c).norm() >= min_sep;
    }
    if (ok) {
      X.row(filled++) = c.transpose();
    }
  }
  return X;
}

} // namespace oracle

#endif
