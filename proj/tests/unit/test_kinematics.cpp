#include "othr/kinematics.hpp"
#include "othr/scenario.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace othr;
using namespace othr::kin;

namespace {

struct Fixture {
    ScenarioConfig cfg = default_scenario();
    GaussianState pred;
    Fixture() {
        pred.mean = cfg.targets[0].initial.vec();
        pred.cov = cfg.tracker.initial_cov_diag.asDiagonal();
    }
    ObservationBlock block(int sensor, int path, const Vec3& offset = Vec3::Zero()) const {
        ObservationBlock b;
        b.sensor = sensor;
        b.path = path;
        b.site = cfg.sites[sensor];
        b.heights = path_heights(cfg.nominal_layers[sensor], cfg.paths[path]);
        b.cov = cfg.meas_noise;
        b.y = geometry::forward_map(geometry::UtmState::from(pred.mean), b.site, b.heights).vec() + offset;
        return b;
    }
};

}  // namespace

TEST_SUITE("kinematics") {

TEST_CASE("prediction is linear") {
    Fixture fx;
    const Mat4 f = fx.cfg.transition();
    const Mat4 q = fx.cfg.process_noise;
    const auto p = predict(fx.pred, f, q);
    CHECK((p.mean - f * fx.pred.mean).norm() < 1e-12);
    CHECK((p.cov - (f * fx.pred.cov * f.transpose() + q)).norm() < 1e-9);
}

TEST_CASE("zero innovation keeps the mean and shrinks the covariance") {
    Fixture fx;
    const auto post = update(fx.pred, {fx.block(0, 0), fx.block(1, 2)});
    CHECK((post.mean - fx.pred.mean).norm() < 1e-9);
    CHECK(post.cov.trace() < fx.pred.cov.trace());
    const Eigen::SelfAdjointEigenSolver<Mat4> eig(fx.pred.cov - post.cov);
    CHECK(eig.eigenvalues().minCoeff() > -1e-9);
}

TEST_CASE("an empty observation leaves the prediction unchanged") {
    Fixture fx;
    const auto post = update(fx.pred, {});
    CHECK(post.mean == fx.pred.mean);
    CHECK((post.cov - fx.pred.cov).norm() < 1e-12);
}

TEST_CASE("stacked update equals sequential updates at a common linearization point") {
    Fixture fx;
    const Vec4 lin = fx.pred.mean + Vec4(1.0, 0.01, -2.0, 0.005);
    const auto b1 = fx.block(0, 1, Vec3(3.0, 0.002, 0.001));
    const auto b2 = fx.block(1, 3, Vec3(-2.0, -0.001, 0.002));
    const auto stacked = update(fx.pred, {b1, b2}, &lin);
    const auto seq = update(update(fx.pred, {b1}, &lin), {b2}, &lin);
    CHECK((stacked.mean - seq.mean).norm() < 1e-8);
    CHECK((stacked.cov - seq.cov).norm() < 1e-8);
}

TEST_CASE("duplicate sensor path blocks are rejected") {
    Fixture fx;
    CHECK_THROWS_AS(check_unique({fx.block(0, 1), fx.block(0, 1)}), std::invalid_argument);
    CHECK_NOTHROW(check_unique({fx.block(0, 1), fx.block(1, 1)}));
}

TEST_CASE("innovation log-likelihood matches the predictive density") {
    Fixture fx;
    const auto b = fx.block(0, 2, Vec3(5.0, 0.003, -0.002));
    const auto ll = innovation_loglik(fx.pred, {b});
    REQUIRE(ll.size() == 1);
    const auto st = geometry::UtmState::from(fx.pred.mean);
    const Mat34 j = geometry::jacobian_state(st, b.site, b.heights);
    const Mat3 s = j * fx.pred.cov * j.transpose() + b.cov;
    const Vec3 r = b.y - geometry::forward_map(st, b.site, b.heights).vec();
    const double expect = -0.5 * (r.dot(s.inverse() * r) + std::log(s.determinant()) + 3.0 * std::log(2.0 * kPi));
    CHECK(ll[0] == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("gaussian log density at the mean") {
    CHECK(gaussian_logpdf(Vec3::Zero(), Mat3::Identity()) == doctest::Approx(-1.5 * std::log(2.0 * kPi)));
    const Mat3 c = Vec3(4.0, 9.0, 1.0).asDiagonal();
    CHECK(gaussian_logpdf(Vec3(2.0, 0.0, 0.0), c) ==
          doctest::Approx(-0.5 - 0.5 * std::log(36.0) - 1.5 * std::log(2.0 * kPi)));
    CHECK_THROWS((void)gaussian_logpdf(Vec3::Zero(), -Mat3::Identity()));
}

TEST_CASE("smoother matches the batch solution on a linear model") {
    // Linear position observations drive a hand-written Kalman filter; the
    // library smoother runs on its output.
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n(0.0, 1.0);
    const auto cfg = default_scenario();
    const Mat4 f = cfg.transition();
    const Mat4 q = cfg.process_noise;
    Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
    h(0, 0) = 1.0;
    h(1, 2) = 1.0;
    const Mat2 r = 4.0 * Mat2::Identity();
    const Vec4 m0(100.0, 0.1, 50.0, -0.05);
    const Mat4 p0 = Vec4(25.0, 0.04, 25.0, 0.04).asDiagonal();
    std::vector<VecX> ys;
    Vec4 x = m0;
    for (int k = 0; k < 12; ++k) {
        if (k > 0) x = f * x;
        ys.push_back(Vec2(x(0) + 2.0 * n(rng), x(2) + 2.0 * n(rng)));
    }
    std::vector<GaussianState> filtered;
    GaussianState g{m0, p0};
    for (int k = 0; k < 12; ++k) {
        if (k > 0) g = predict(g, f, q);
        const Mat2 s = h * g.cov * h.transpose() + r;
        const Eigen::Matrix<double, 4, 2> gain = g.cov * h.transpose() * s.inverse();
        g.mean = g.mean + gain * (ys[k] - h * g.mean);
        g.cov = (Mat4::Identity() - gain * h) * g.cov;
        g.cov = 0.5 * (g.cov + g.cov.transpose()).eval();
        filtered.push_back(g);
    }
    const auto smoothed = smooth(filtered, f, q);
    const auto batch = oracle::batch_smoother(m0, p0, f, q, h, r, ys);
    double worst_mean = 0.0, worst_cov = 0.0;
    for (int k = 0; k < 12; ++k) {
        worst_mean = std::max(worst_mean, (smoothed[k].mean - batch.mean[k]).cwiseAbs().maxCoeff() /
                                              std::max(1.0, batch.mean[k].cwiseAbs().maxCoeff()));
        worst_cov = std::max(worst_cov, (smoothed[k].cov - batch.cov[k]).cwiseAbs().maxCoeff() /
                                            std::max(1.0, batch.cov[k].cwiseAbs().maxCoeff()));
    }
    CHECK(worst_mean <= 1e-8);
    CHECK(worst_cov <= 1e-8);
    // The last smoothed estimate is the last filtered one.
    CHECK(smoothed.back().mean == filtered.back().mean);
}

TEST_CASE("non positive definite innovation covariance fails cleanly") {
    Fixture fx;
    auto b = fx.block(0, 0);
    b.cov = -1e6 * Mat3::Identity();
    fx.pred.cov = Mat4::Zero();
    CHECK_THROWS_AS((void)update(fx.pred, {b}), Error);
}

}  // TEST_SUITE
