#include "othr/ionosphere.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace othr;
using namespace othr::iono;

namespace {

const geometry::SiteConfig kSite = default_scenario().sites[0];

IonoState prior(double var = 100.0) {
    IonoState p;
    p.mean = Vec2(100.0, 260.0);
    p.cov = var * Mat2::Identity();
    return p;
}

}  // namespace

TEST_SUITE("ionosphere") {

TEST_CASE("ionosonde reading halves equal variances") {
    const Vec2 reading(110.0, 250.0);
    const auto post = update_heights(prior(100.0), &reading, Mat2::Identity(), 100.0 * Mat2::Identity(), {}, kSite);
    CHECK(post.cov(0, 0) == doctest::Approx(50.0));
    CHECK(post.cov(1, 1) == doctest::Approx(50.0));
    CHECK(post.mean(0) == doctest::Approx(105.0));
    CHECK(post.mean(1) == doctest::Approx(255.0));
}

TEST_CASE("prediction adds the process noise") {
    const auto p = prior(10.0);
    const auto pred = predict_heights(p, Mat2::Identity(), Mat2::Identity());
    CHECK(pred.cov.trace() == doctest::Approx(p.cov.trace() + 2.0));
    CHECK(pred.mean == p.mean);
}

TEST_CASE("no reading and no feedback leaves the prediction") {
    const auto p = prior();
    const auto post = update_heights(p, nullptr, Mat2::Identity(), Mat2::Identity(), {}, kSite);
    CHECK(post.mean == p.mean);
    CHECK((post.cov - p.cov).norm() < 1e-12);
}

TEST_CASE("feedback with vanishing weight has no effect") {
    const auto cfg = default_scenario();
    const Vec4 target = cfg.targets[0].initial.vec();
    const Mat4 pcov = cfg.tracker.initial_cov_diag.asDiagonal();
    const PathLayers ef{0, 1};
    const auto p = prior();
    const Vec3 y = geometry::forward_map(geometry::UtmState::from(target), kSite,
                                         path_heights(Vec2(120.0, 240.0), ef)).vec();
    SUBCASE("inflated covariance") {
        auto fb = make_feedback(target, pcov, y, cfg.meas_noise, 0.0, kSite, ef, p.mean);
        fb.cov *= 1e14;
        const auto post = update_heights(p, nullptr, Mat2::Identity(), Mat2::Identity(), {fb}, kSite);
        CHECK((post.mean - p.mean).norm() < 1e-6);
        CHECK((post.cov - p.cov).norm() < 1e-6);
    }
    SUBCASE("miss probability above the skip level") {
        const auto fb = make_feedback(target, pcov, y, cfg.meas_noise, 0.995, kSite, ef, p.mean);
        const auto post = update_heights(p, nullptr, Mat2::Identity(), Mat2::Identity(), {fb}, kSite);
        CHECK(post.mean == p.mean);
    }
    SUBCASE("informative feedback moves the heights toward the truth") {
        const auto fb = make_feedback(target, 1e-6 * Mat4::Identity(), y, cfg.meas_noise, 0.0, kSite, ef, p.mean);
        CHECK(fb.cov(0, 0) == doctest::Approx(cfg.meas_noise(0, 0)).epsilon(1e-3));
        const auto post = update_heights(p, nullptr, Mat2::Identity(), Mat2::Identity(), {fb}, kSite);
        CHECK(post.cov.trace() < p.cov.trace());
        CHECK((post.mean - Vec2(120.0, 240.0)).norm() < (p.mean - Vec2(120.0, 240.0)).norm());
    }
}

TEST_CASE("feedback covariance is inflated by the target uncertainty and the weight") {
    const auto cfg = default_scenario();
    const Vec4 target = cfg.targets[0].initial.vec();
    const Mat4 pcov = cfg.tracker.initial_cov_diag.asDiagonal();
    const PathLayers ff{1, 1};
    const Vec2 lin(100.0, 260.0);
    const Vec3 y = geometry::forward_map(geometry::UtmState::from(target), kSite, path_heights(lin, ff)).vec();
    const auto fb = make_feedback(target, pcov, y, cfg.meas_noise, 0.5, kSite, ff, lin);
    const Mat34 jx = geometry::jacobian_state(geometry::UtmState::from(target), kSite, path_heights(lin, ff));
    const Mat3 expect = (cfg.meas_noise + jx * pcov * jx.transpose()) / 0.5;
    CHECK((fb.cov - expect).norm() < 1e-9 * expect.norm());
}

TEST_CASE("posterior mean is clamped to the physical bounds") {
    const Vec2 reading(10.0, 900.0);
    const auto post = update_heights(prior(), &reading, Mat2::Identity(), 1e-3 * Mat2::Identity(), {}, kSite);
    CHECK(post.mean(0) >= geometry::kMinHeight);
    CHECK(post.mean(1) <= geometry::kMaxHeight);
}

TEST_CASE("height smoother matches the batch solution with ionosonde readings") {
    std::mt19937_64 rng(51);
    std::normal_distribution<double> n(0.0, 1.0);
    const Mat2 b = Mat2::Identity();
    const Mat2 q = 4.0 * Mat2::Identity();
    const Mat2 c = Mat2::Identity();
    const Mat2 w = 25.0 * Mat2::Identity();
    const IonoState p0 = prior(100.0);
    Vec2 u = p0.mean;
    std::vector<VecX> ys;
    for (int k = 0; k < 15; ++k) {
        if (k > 0) u += 2.0 * Vec2(n(rng), n(rng));
        ys.push_back(Vec2(u + 5.0 * Vec2(n(rng), n(rng))));
    }
    std::vector<IonoState> filtered;
    IonoState g = p0;
    for (int k = 0; k < 15; ++k) {
        if (k > 0) g = predict_heights(g, b, q);
        const Vec2 reading = ys[k];
        g = update_heights(g, &reading, c, w, {}, kSite);
        filtered.push_back(g);
    }
    const auto smoothed = smooth_heights(filtered, b, q);
    const auto batch = oracle::batch_smoother(p0.mean, p0.cov, b, q, c, w, ys);
    double worst = 0.0;
    for (int k = 0; k < 15; ++k) {
        worst = std::max(worst, (smoothed[k].mean - batch.mean[k]).cwiseAbs().maxCoeff() / 260.0);
        worst = std::max(worst, (smoothed[k].cov - batch.cov[k]).cwiseAbs().maxCoeff() / 100.0);
    }
    CHECK(worst <= 1e-8);
}

}  // TEST_SUITE
