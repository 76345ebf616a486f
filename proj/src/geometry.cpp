#include "othr/geometry.hpp"

#include <algorithm>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <string>

namespace othr::geometry {

SlantTerms slant_terms(const UtmState& state, const SiteConfig& site, const PathHeights& heights,
                       double g_min) {
    SlantTerms t{};
    t.dx = state.x - site.x0;
    t.dy = state.y - site.y0;
    t.g = std::hypot(t.dx, t.dy);
    if (!(t.g >= g_min)) {
        throw DegenerateGeometry("ground distance " + std::to_string(t.g) +
                                 " km is below the minimum " + std::to_string(g_min) + " km");
    }
    t.r4 = t.dx * state.vx + t.dy * state.vy;
    t.gdot = t.r4 / t.g;
    // atan2 keeps the bearing unambiguous for targets west of the receiver.
    t.b = wrap_angle(kPi / 2.0 - std::atan2(t.dy, t.dx) - site.beta0);
    const double sb = std::sin(t.b);
    t.r1 = std::sqrt(t.g * t.g / 4.0 + heights.hr * heights.hr);
    t.r2 = std::sqrt((t.g * t.g - 2.0 * site.d0 * t.g * sb + site.d0 * site.d0) / 4.0 +
                     heights.ht * heights.ht);
    t.r3 = t.g - site.d0 * sb;
    t.s = t.g * sb / (2.0 * t.r1);
    return t;
}

SlantMeasurement forward_map(const UtmState& state, const SiteConfig& site,
                             const PathHeights& heights, double g_min) {
    const SlantTerms t = slant_terms(state, site, heights, g_min);
    SlantMeasurement m;
    m.r = t.r1 + t.r2;
    m.rdot = t.gdot / 4.0 * (t.g / t.r1 + t.r3 / t.r2);
    m.a = std::asin(t.s);
    return m;
}

GroundPosition inverse_map(const SlantMeasurement& meas, const SiteConfig& site,
                           const PathHeights& heights) {
    const double sa = std::sin(meas.a);
    const double k = meas.r * meas.r + heights.hr * heights.hr - heights.ht * heights.ht -
                     site.d0 * site.d0 / 4.0;
    const double denom = 2.0 * meas.r - site.d0 * sa;
    if (!(denom > 0.0) || !(k > 0.0)) {
        throw OutOfDomain("slant range too short for the height hypothesis");
    }
    const double r1 = k / denom;
    const double radicand = r1 * r1 - heights.hr * heights.hr;
    if (!(radicand > 0.0)) {
        throw OutOfDomain("negative ground-range radicand (r=" + std::to_string(meas.r) +
                          " km, hr=" + std::to_string(heights.hr) + " km)");
    }
    const double rho = 2.0 * std::sqrt(radicand);
    double arg = 2.0 * sa * r1 / rho;
    if (!(std::abs(arg) <= 1.0 + 1e-12)) {
        throw OutOfDomain("azimuth inconsistent with the height hypothesis");
    }
    arg = std::clamp(arg, -1.0, 1.0);
    const double theta = kPi / 2.0 - std::asin(arg) - site.beta0;
    return {site.x0 + rho * std::cos(theta), site.y0 + rho * std::sin(theta)};
}

Mat3 jacobian_slant_wrt_ground(const SlantTerms& t, const SiteConfig& site) {
    const double d0 = site.d0;
    const double sb = std::sin(t.b);
    const double cb = std::cos(t.b);
    const double r1 = t.r1;
    const double r2 = t.r2;
    const double r3 = t.r3;
    const double g = t.g;
    const double cos_a = std::sqrt(1.0 - t.s * t.s);

    Mat3 j;
    j(0, 0) = 0.25 * (g / r1 + r3 / r2);
    j(0, 1) = 0.0;
    j(0, 2) = -d0 * g * cb / (4.0 * r2);

    j(1, 0) = t.gdot / 4.0 *
              (1.0 / r1 + 1.0 / r2 - g * g / (4.0 * r1 * r1 * r1) - r3 * r3 / (4.0 * r2 * r2 * r2));
    j(1, 1) = (g * r2 + r1 * r3) / (4.0 * r1 * r2);
    j(1, 2) = -d0 * t.gdot * cb / (4.0 * r2) * (1.0 - g * r3 / (4.0 * r2 * r2));

    j(2, 0) = sb * (1.0 - g * g / (4.0 * r1 * r1)) / (2.0 * r1 * cos_a);
    j(2, 1) = 0.0;
    j(2, 2) = g * cb / (2.0 * r1 * cos_a);
    return j;
}

Mat34 jacobian_ground_wrt_state(const SlantTerms& t, const UtmState& state) {
    const double g = t.g;
    const double g2 = g * g;
    const double g3 = g2 * g;
    Mat34 j;
    j << t.dx / g, 0.0, t.dy / g, 0.0,
        state.vx / g - t.dx * t.r4 / g3, t.dx / g, state.vy / g - t.dy * t.r4 / g3, t.dy / g,
        t.dy / g2, 0.0, -t.dx / g2, 0.0;
    return j;
}

Mat34 jacobian_state(const UtmState& state, const SiteConfig& site, const PathHeights& heights,
                     double g_min) {
    const SlantTerms t = slant_terms(state, site, heights, g_min);
    return jacobian_slant_wrt_ground(t, site) * jacobian_ground_wrt_state(t, state);
}

Mat32 jacobian_heights(const UtmState& state, const SiteConfig& site, const PathHeights& heights,
                       double g_min) {
    const SlantTerms t = slant_terms(state, site, heights, g_min);
    const double r1_3 = t.r1 * t.r1 * t.r1;
    const double r2_3 = t.r2 * t.r2 * t.r2;
    const double cos_a = std::sqrt(1.0 - t.s * t.s);
    Mat32 j;
    j(0, 0) = heights.ht / t.r2;
    j(0, 1) = heights.hr / t.r1;
    j(1, 0) = -t.gdot * t.r3 * heights.ht / (4.0 * r2_3);
    j(1, 1) = -t.gdot * t.g * heights.hr / (4.0 * r1_3);
    j(2, 0) = 0.0;
    j(2, 1) = -t.g * std::sin(t.b) * heights.hr / (2.0 * r1_3 * cos_a);
    return j;
}

namespace {

void require_pd(const Mat3& m, const char* what) {
    Eigen::LLT<Mat3> llt(m);
    if (llt.info() != Eigen::Success || !m.isApprox(m.transpose(), 1e-9)) {
        throw NotPositiveDefinite(std::string(what) + " is not symmetric positive definite");
    }
}

template <int N>
void require_psd(const Eigen::Matrix<double, N, N>& m, const char* what) {
    if (!m.isApprox(m.transpose(), 1e-9) && !m.isZero()) {
        throw NotPositiveDefinite(std::string(what) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(m);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
        throw NotPositiveDefinite(std::string(what) + " has a negative eigenvalue");
    }
}

}  // namespace

template <int N>
GaussianLikelihood gaussian_push(const Vec3& mean, const Mat3& noise,
                                 const Eigen::Matrix<double, 3, N>& jac,
                                 const Eigen::Matrix<double, N, N>& sigma) {
    require_pd(noise, "measurement noise covariance");
    require_psd<N>(sigma, "propagated covariance");
    Mat3 cov = noise + jac * sigma * jac.transpose();
    symmetrize(cov);
    return {mean, cov};
}

template GaussianLikelihood gaussian_push<2>(const Vec3&, const Mat3&, const Mat32&, const Mat2&);
template GaussianLikelihood gaussian_push<4>(const Vec3&, const Mat3&, const Mat34&, const Mat4&);

}  // namespace othr::geometry
