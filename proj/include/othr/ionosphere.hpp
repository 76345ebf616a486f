#pragma once

// Per-sensor layer-height belief (hE, hF): ionosonde fusion, feedback from
// tracked targets, and fixed-interval smoothing.

#include "othr/gaussian.hpp"
#include "othr/geometry.hpp"
#include "othr/scenario.hpp"

#include <vector>

namespace othr::iono {

using IonoState = Gaussian<2>;

/// Synthetic measurement of a tracked target used as height evidence.
struct FeedbackBlock {
    geometry::UtmState target;
    Vec3 y = Vec3::Zero();
    Mat3 cov = Mat3::Identity();  ///< (R + Jx P Jx') / (1 - miss)
    PathLayers layers;
    double miss = 0.0;
};

/// Builds a feedback block, inflating R by the target's state uncertainty
/// propagated through the measurement Jacobian at `layers_lin`.
[[nodiscard]] FeedbackBlock make_feedback(const Vec4& target_mean, const Mat4& target_cov,
                                          const Vec3& y, const Mat3& meas_noise, double miss,
                                          const geometry::SiteConfig& site,
                                          const PathLayers& layers, const Vec2& layers_lin);

[[nodiscard]] IonoState predict_heights(const IonoState& prior, const Mat2& b, const Mat2& q);

struct HeightUpdateOptions {
    double skip_miss = 0.99;  ///< feedback blocks with a larger miss probability are ignored
    const Vec2* lin = nullptr;  ///< linearization point, predicted mean when null
};

/// Stacked EKF update with an optional ionosonde reading (I = C u + noise W)
/// and target feedback blocks. The posterior mean is clamped to the physical
/// height bounds. Throws NumericalFailure on a singular innovation covariance.
[[nodiscard]] IonoState update_heights(const IonoState& pred, const Vec2* reading, const Mat2& c,
                                       const Mat2& w, const std::vector<FeedbackBlock>& feedback,
                                       const geometry::SiteConfig& site,
                                       const HeightUpdateOptions& options = {});

[[nodiscard]] std::vector<IonoState> smooth_heights(const std::vector<IonoState>& filtered,
                                                    const Mat2& b, const Mat2& q);

}  // namespace othr::iono
