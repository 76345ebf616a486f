#include "othr/kinematics.hpp"

#include <set>
#include <stdexcept>

namespace othr::kin {

void check_unique(const StackedObservation& obs) {
    std::set<std::pair<int, int>> seen;
    for (const auto& b : obs)
        if (!seen.insert({b.sensor, b.path}).second)
            throw std::invalid_argument("duplicate (sensor, path) block in stacked observation");
}

GaussianState predict(const GaussianState& prior, const Mat4& f, const Mat4& q) {
    return linear_predict<4>(prior, f, q);
}

GaussianState update(const GaussianState& pred, const StackedObservation& obs, const Vec4* lin) {
    if (obs.empty()) return pred;
    check_unique(obs);
    const Vec4 x_lin = lin ? *lin : pred.mean;
    const auto state_lin = geometry::UtmState::from(x_lin);
    const int n = static_cast<int>(obs.size()) * 3;
    MatX h(n, 4);
    VecX nu(n);
    MatX r = MatX::Zero(n, n);
    for (std::size_t b = 0; b < obs.size(); ++b) {
        const auto& blk = obs[b];
        const Vec3 hx = geometry::forward_map(state_lin, blk.site, blk.heights).vec();
        const Mat34 j = geometry::jacobian_state(state_lin, blk.site, blk.heights);
        const Vec3 expected = hx + j * (pred.mean - x_lin);
        const int o = static_cast<int>(b) * 3;
        h.block<3, 4>(o, 0) = j;
        nu.segment<3>(o) = geometry::slant_residual(blk.y, expected);
        r.block<3, 3>(o, o) = blk.cov;
    }
    MatX s = h * pred.cov * h.transpose() + r;
    symmetrize(s);
    Eigen::LLT<MatX> llt(s);
    if (llt.info() != Eigen::Success)
        throw NumericalFailure("innovation covariance is not positive definite");
    const MatX k = llt.solve(h * pred.cov).transpose();  // P H' S^{-1}
    GaussianState out;
    out.mean = pred.mean + k * nu;
    const Mat4 ikh = Mat4::Identity() - k * h;
    out.cov = ikh * pred.cov * ikh.transpose() + k * r * k.transpose();
    symmetrize(out.cov);
    return out;
}

std::vector<GaussianState> smooth(const std::vector<GaussianState>& filtered, const Mat4& f,
                                  const Mat4& q) {
    return rts_smooth<4>(filtered, f, q);
}

double gaussian_logpdf(const Vec3& residual, const Mat3& cov) {
    Eigen::LLT<Mat3> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalFailure("covariance is not positive definite");
    const Mat3 l = llt.matrixL();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    const Vec3 z = l.triangularView<Eigen::Lower>().solve(residual);
    return -0.5 * z.squaredNorm() - 1.5 * std::log(2.0 * kPi) - 0.5 * logdet;
}

std::vector<double> innovation_loglik(const GaussianState& pred, const StackedObservation& obs) {
    std::vector<double> out;
    const auto state = geometry::UtmState::from(pred.mean);
    for (const auto& blk : obs) {
        const Vec3 hx = geometry::forward_map(state, blk.site, blk.heights).vec();
        const Mat34 j = geometry::jacobian_state(state, blk.site, blk.heights);
        Mat3 s = j * pred.cov * j.transpose() + blk.cov;
        symmetrize(s);
        out.push_back(gaussian_logpdf(geometry::slant_residual(blk.y, hx), s));
    }
    return out;
}

}  // namespace othr::kin
