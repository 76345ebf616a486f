#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace othr {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat32 = Eigen::Matrix<double, 3, 2>;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ground distance to the receiver is too small for the slant mapping.
class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

/// Slant measurement cannot be inverted under the hypothesised heights.
class OutOfDomain : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

/// Invalid scenario or tracker configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A linear solve failed (singular innovation covariance and similar).
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Exhaustive enumeration would exceed its budget.
class TooLarge : public Error {
public:
    using Error::Error;
};

class AllHypothesesInfeasible : public Error {
public:
    using Error::Error;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

/// Symmetrises a square matrix in place.
template <typename Derived>
void symmetrize(Eigen::MatrixBase<Derived>& m) {
    m = 0.5 * (m + m.transpose()).eval();
}

}  // namespace othr
