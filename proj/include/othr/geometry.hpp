#pragma once

// Planar OTHR coordinate geometry: the slant mapping from a ground (UTM)
// target state to (slant range, slant range rate, azimuth), its inverse, and
// the analytic Jacobians with respect to target state and path heights.

#include "othr/common.hpp"

namespace othr::geometry {

/// Target kinematic state in the planar ground frame. Positions in km,
/// velocities in km/s. Vector order is (x, vx, y, vy).
struct UtmState {
    double x = 0.0;
    double vx = 0.0;
    double y = 0.0;
    double vy = 0.0;

    [[nodiscard]] Vec4 vec() const { return {x, vx, y, vy}; }
    [[nodiscard]] static UtmState from(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }
    [[nodiscard]] double speed() const { return std::hypot(vx, vy); }
};

/// Radar-native measurement: slant range (km), slant range rate (km/s),
/// azimuth (rad).
struct SlantMeasurement {
    double r = 0.0;
    double rdot = 0.0;
    double a = 0.0;

    [[nodiscard]] Vec3 vec() const { return {r, rdot, a}; }
    [[nodiscard]] static SlantMeasurement from(const Vec3& v) { return {v(0), v(1), v(2)}; }
};

/// One OTHR site: receiver position (km), bore-sight bearing (rad, clockwise
/// from north) and transmitter-receiver separation (km).
struct SiteConfig {
    double x0 = 0.0;
    double y0 = 0.0;
    double beta0 = 0.0;
    double d0 = 0.0;
};

/// Reflection heights of one propagation path (km): transmit hop and receive hop.
struct PathHeights {
    double ht = 0.0;
    double hr = 0.0;
};

inline constexpr double kMinGroundDistance = 1.0;  // km
inline constexpr double kMinHeight = 50.0;         // km
inline constexpr double kMaxHeight = 400.0;        // km

/// Intermediate quantities shared by the forward map and both Jacobians.
struct SlantTerms {
    double dx, dy;   // target offset from the receiver
    double g;        // ground distance
    double gdot;     // ground range rate
    double b;        // azimuth relative to bore-sight, wrapped to (-pi, pi]
    double r1;       // receive hop length
    double r2;       // transmit hop length
    double r3;       // g - d0 sin(b)
    double r4;       // (x - x0) vx + (y - y0) vy
    double s;        // argument of the azimuth arcsin
};

/// Evaluates the shared terms; throws DegenerateGeometry when g < g_min.
[[nodiscard]] SlantTerms slant_terms(const UtmState& state, const SiteConfig& site,
                                     const PathHeights& heights,
                                     double g_min = kMinGroundDistance);

[[nodiscard]] SlantMeasurement forward_map(const UtmState& state, const SiteConfig& site,
                                           const PathHeights& heights,
                                           double g_min = kMinGroundDistance);

/// Ground position recovered from a slant measurement.
struct GroundPosition {
    double x = 0.0;
    double y = 0.0;
};

/// Inverse slant mapping. Throws OutOfDomain when the measurement is not
/// consistent with the height hypothesis.
[[nodiscard]] GroundPosition inverse_map(const SlantMeasurement& meas, const SiteConfig& site,
                                         const PathHeights& heights);

/// d(r, rdot, a) / d(x, vx, y, vy), evaluated as the product of
/// d(r, rdot, a)/d(g, gdot, b) and d(g, gdot, b)/d(x, vx, y, vy).
[[nodiscard]] Mat34 jacobian_state(const UtmState& state, const SiteConfig& site,
                                   const PathHeights& heights,
                                   double g_min = kMinGroundDistance);

/// d(r, rdot, a) / d(ht, hr).
[[nodiscard]] Mat32 jacobian_heights(const UtmState& state, const SiteConfig& site,
                                     const PathHeights& heights,
                                     double g_min = kMinGroundDistance);

/// Outer factor of the state Jacobian, d(r, rdot, a)/d(g, gdot, b).
[[nodiscard]] Mat3 jacobian_slant_wrt_ground(const SlantTerms& t, const SiteConfig& site);

/// Inner factor of the state Jacobian, d(g, gdot, b)/d(x, vx, y, vy).
[[nodiscard]] Mat34 jacobian_ground_wrt_state(const SlantTerms& t, const UtmState& state);

/// Gaussian approximation of a nonlinearly mapped quantity: mean h(.) and
/// combined covariance R + J Sigma J^T.
struct GaussianLikelihood {
    Vec3 mean;
    Mat3 cov;
};

/// Requires `noise` positive definite and `sigma` positive semidefinite;
/// throws NotPositiveDefinite otherwise.
template <int N>
[[nodiscard]] GaussianLikelihood gaussian_push(const Vec3& mean, const Mat3& noise,
                                               const Eigen::Matrix<double, 3, N>& jac,
                                               const Eigen::Matrix<double, N, N>& sigma);

/// Residual y - h with the azimuth component wrapped to (-pi, pi].
[[nodiscard]] inline Vec3 slant_residual(const Vec3& y, const Vec3& h) {
    Vec3 d = y - h;
    d(2) = wrap_angle(d(2));
    return d;
}

}  // namespace othr::geometry
