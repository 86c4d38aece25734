#pragma once

#include <Eigen/Dense>

namespace crgimsc {

using Real = double;
using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<Real>;
using Vector = VectorX<Real>;
using IntMatrix = MatrixX<int>;

} // namespace crgimsc
