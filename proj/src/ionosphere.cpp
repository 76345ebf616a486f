#include "othr/ionosphere.hpp"

namespace othr::iono {

FeedbackBlock make_feedback(const Vec4& target_mean, const Mat4& target_cov, const Vec3& y,
                            const Mat3& meas_noise, double miss, const geometry::SiteConfig& site,
                            const PathLayers& layers, const Vec2& layers_lin) {
    FeedbackBlock fb;
    fb.target = geometry::UtmState::from(target_mean);
    fb.y = y;
    fb.layers = layers;
    fb.miss = miss;
    const Mat34 jx = geometry::jacobian_state(fb.target, site, path_heights(layers_lin, layers));
    fb.cov = (meas_noise + jx * target_cov * jx.transpose()) / (1.0 - miss);
    symmetrize(fb.cov);
    return fb;
}

IonoState predict_heights(const IonoState& prior, const Mat2& b, const Mat2& q) {
    return linear_predict<2>(prior, b, q);
}

IonoState update_heights(const IonoState& pred, const Vec2* reading, const Mat2& c, const Mat2& w,
                         const std::vector<FeedbackBlock>& feedback,
                         const geometry::SiteConfig& site, const HeightUpdateOptions& options) {
    const Vec2 u_lin = options.lin ? *options.lin : pred.mean;
    std::vector<const FeedbackBlock*> used;
    for (const auto& fb : feedback)
        if (fb.miss <= options.skip_miss) used.push_back(&fb);
    const int n = (reading ? 2 : 0) + 3 * static_cast<int>(used.size());
    if (n == 0) return pred;

    MatX h = MatX::Zero(n, 2);
    VecX nu(n);
    MatX r = MatX::Zero(n, n);
    int o = 0;
    if (reading) {
        h.block<2, 2>(0, 0) = c;
        nu.segment<2>(0) = *reading - c * pred.mean;
        r.block<2, 2>(0, 0) = w;
        o = 2;
    }
    for (const FeedbackBlock* fb : used) {
        const auto ph = path_heights(u_lin, fb->layers);
        const Vec3 hx = geometry::forward_map(fb->target, site, ph).vec();
        const Mat32 j = geometry::jacobian_heights(fb->target, site, ph) * layer_selection(fb->layers);
        h.block<3, 2>(o, 0) = j;
        nu.segment<3>(o) = geometry::slant_residual(fb->y, hx + j * (pred.mean - u_lin));
        r.block<3, 3>(o, o) = fb->cov;
        o += 3;
    }
    MatX s = h * pred.cov * h.transpose() + r;
    symmetrize(s);
    Eigen::LLT<MatX> llt(s);
    if (llt.info() != Eigen::Success)
        throw NumericalFailure("height innovation covariance is not positive definite");
    const MatX k = llt.solve(h * pred.cov).transpose();
    IonoState out;
    out.mean = pred.mean + k * nu;
    const Mat2 ikh = Mat2::Identity() - k * h;
    out.cov = ikh * pred.cov * ikh.transpose() + k * r * k.transpose();
    symmetrize(out.cov);
    out.mean = out.mean.cwiseMax(geometry::kMinHeight).cwiseMin(geometry::kMaxHeight);
    return out;
}

std::vector<IonoState> smooth_heights(const std::vector<IonoState>& filtered, const Mat2& b,
                                      const Mat2& q) {
    auto out = rts_smooth<2>(filtered, b, q);
    for (auto& s : out) s.mean = s.mean.cwiseMax(geometry::kMinHeight).cwiseMin(geometry::kMaxHeight);
    return out;
}

}  // namespace othr::iono
