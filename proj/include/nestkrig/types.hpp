#ifndef NESTKRIG_TYPES_HPP
#define NESTKRIG_TYPES_HPP

#include <Eigen/Core>

namespace nestkrig {

/// A set of points in R^d, one point per row.
using PointSet =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A single point in R^d.
using Point = Eigen::RowVectorXd;

/// Non-owning view of a point; binds to a `Point` or to a row of a `PointSet`.
using PointRef = Eigen::Ref<const Eigen::RowVectorXd>;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

} // namespace nestkrig

#endif
