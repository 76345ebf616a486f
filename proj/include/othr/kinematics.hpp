#pragma once

// Kinematic belief of a target: prediction, extended Kalman update against
// stacked synthetic measurements, and fixed-interval smoothing.

#include "othr/gaussian.hpp"
#include "othr/geometry.hpp"

#include <vector>

namespace othr::kin {

using GaussianState = Gaussian<4>;

/// One synthetic measurement block for a (sensor, path) pair.
struct ObservationBlock {
    int sensor = 0;
    int path = 0;
    Vec3 y = Vec3::Zero();
    Mat3 cov = Mat3::Identity();
    geometry::SiteConfig site;
    geometry::PathHeights heights;
};

using StackedObservation = std::vector<ObservationBlock>;

/// Throws std::invalid_argument when a (sensor, path) pair repeats.
void check_unique(const StackedObservation& obs);

[[nodiscard]] GaussianState predict(const GaussianState& prior, const Mat4& f, const Mat4& q);

/// Single stacked EKF update with a Joseph-form covariance. The model is
/// linearized at `lin` when given, otherwise at the predicted mean. Throws
/// NumericalFailure when the innovation covariance cannot be factorized.
[[nodiscard]] GaussianState update(const GaussianState& pred, const StackedObservation& obs,
                                   const Vec4* lin = nullptr);

/// RTS smoothing of a filtered sequence.
[[nodiscard]] std::vector<GaussianState> smooth(const std::vector<GaussianState>& filtered,
                                                const Mat4& f, const Mat4& q);

/// Gaussian log-density of each block under the linearized predictive
/// distribution N(h(m), J P J' + R).
[[nodiscard]] std::vector<double> innovation_loglik(const GaussianState& pred,
                                                    const StackedObservation& obs);

/// Log-density of a 3-vector residual under a covariance.
[[nodiscard]] double gaussian_logpdf(const Vec3& residual, const Mat3& cov);

}  // namespace othr::kin
