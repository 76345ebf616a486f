#include "othr/metrics.hpp"

#include <doctest.h>

#include <random>

using namespace othr;
using namespace othr::metrics;

namespace {

/// Two straight-line targets over scans 1..20 and their hand-built tracks.
struct Fixture {
    sim::GroundTruth truth;
    std::vector<fusion::TargetTrack> tracks;

    static sim::TargetTruth line(double x0, double y0, int birth, int death) {
        sim::TargetTruth t;
        t.spec.birth = birth;
        t.spec.death = death;
        for (int k = birth; k <= death; ++k) t.states.push_back({x0 + k, 0.0, y0, 0.0});
        return t;
    }
    static fusion::TargetTrack follow(int id, const sim::TargetTruth& t, int from, int to, double dx,
                                      int confirm) {
        fusion::TargetTrack tr;
        tr.id = id;
        tr.birth = from;
        for (int k = from; k <= to; ++k) {
            kin::GaussianState g;
            g.mean = Vec4(t.at(k).x + dx, 0.0, t.at(k).y, 0.0);
            tr.states.push_back(g);
            tr.p_visible.push_back(0.95);
        }
        tr.confirm_scan = confirm;
        tr.confirmed_until = to;
        return tr;
    }

    Fixture() {
        truth.targets.push_back(line(0.0, 0.0, 1, 20));
        truth.targets.push_back(line(500.0, 500.0, 1, 20));
        truth.heights = {std::vector<Vec2>(20, Vec2(100.0, 260.0))};
        tracks.push_back(follow(1, truth.targets[0], 1, 20, 3.0, 3));   // valid, target 0
        tracks.push_back(follow(2, truth.targets[1], 5, 20, 4.0, 6));   // valid, target 1
        tracks.push_back(follow(3, truth.targets[1], 10, 15, 1.0, 10)); // too short
        auto ghost = follow(4, truth.targets[0], 1, 20, 0.0, 2);
        for (auto& s : ghost.states) s.mean(2) += 200.0;                // matches nothing
        tracks.push_back(ghost);
    }
};

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("ospa of simple sets") {
    CHECK(ospa({}, {}) == 0.0);
    CHECK(ospa({Vec2(0, 0)}, {}) == doctest::Approx(10.0));
    CHECK(ospa({}, {Vec2(0, 0), Vec2(5, 5)}) == doctest::Approx(10.0));
    CHECK(ospa({Vec2(0, 0)}, {Vec2(3, 4)}) == doctest::Approx(5.0));
    CHECK(ospa({Vec2(0, 0)}, {Vec2(30, 40)}) == doctest::Approx(10.0));
    // One exact match and one missed point: sqrt((0 + 100) / 2).
    CHECK(ospa({Vec2(0, 0)}, {Vec2(0, 0), Vec2(100, 100)}) == doctest::Approx(std::sqrt(50.0)));
}

TEST_CASE("ospa picks the optimal pairing") {
    const std::vector<Vec2> a{Vec2(0, 0), Vec2(10, 0)};
    const std::vector<Vec2> b{Vec2(9, 0), Vec2(1, 0)};
    CHECK(ospa(a, b) == doctest::Approx(1.0));
}

TEST_CASE("ospa is a metric on random sets") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    std::uniform_int_distribution<int> n(0, 4);
    auto draw = [&] {
        std::vector<Vec2> s(n(rng));
        for (auto& p : s) p = Vec2(u(rng), u(rng));
        return s;
    };
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = draw(), y = draw(), z = draw();
        const double xy = ospa(x, y), yx = ospa(y, x);
        CHECK(xy == doctest::Approx(yx));
        CHECK(xy >= 0.0);
        CHECK(xy <= 10.0 + 1e-12);
        CHECK(ospa(x, x) == doctest::Approx(0.0));
        CHECK(xy <= ospa(x, z) + ospa(z, y) + 1e-9);
        auto shuffled = x;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(ospa(shuffled, y) == doctest::Approx(xy));
    }
}

TEST_CASE("bad ospa parameters are rejected") {
    CHECK_THROWS_AS((void)ospa({}, {}, {0.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)ospa({}, {}, {10.0, 0.5}), std::invalid_argument);
}

TEST_CASE("track assignment") {
    Fixture fx;
    const auto a = assign_tracks(fx.tracks, fx.truth);
    CHECK(a.target_of_track[0] == 0);
    CHECK(a.target_of_track[1] == 1);
    CHECK(a.target_of_track[2] == Assignment::kIgnored);
    CHECK(a.target_of_track[3] == Assignment::kFalse);
    CHECK(a.track_of_target[0] == 0);
    CHECK(a.track_of_target[1] == 1);
}

TEST_CASE("the longest of several matching tracks is kept") {
    Fixture fx;
    fx.tracks.push_back(Fixture::follow(5, fx.truth.targets[1], 1, 20, 2.0, 2));
    const auto a = assign_tracks(fx.tracks, fx.truth);
    CHECK(a.track_of_target[1] == 4);
    CHECK(a.target_of_track[1] == Assignment::kIgnored);
}

TEST_CASE("assignment does not depend on the track order") {
    Fixture fx;
    auto reversed = fx.tracks;
    std::reverse(reversed.begin(), reversed.end());
    const auto a = assign_tracks(fx.tracks, fx.truth);
    const auto b = assign_tracks(reversed, fx.truth);
    const int n = static_cast<int>(fx.tracks.size());
    for (int i = 0; i < n; ++i) CHECK(a.target_of_track[i] == b.target_of_track[n - 1 - i]);
}

TEST_CASE("hand-computed report") {
    Fixture fx;
    std::vector<std::vector<Vec2>> heights{std::vector<Vec2>(20, Vec2(103.0, 264.0))};
    const auto a = assign_tracks(fx.tracks, fx.truth);
    const auto r = compute_report(a, fx.tracks, fx.truth, heights, 1.5, 20);
    CHECK(r.ntt == 2.0);
    CHECK(r.nft == 1.0);
    // Target 0 covered on scans 3..20, target 1 on 6..20.
    CHECK(r.tpd == doctest::Approx((18.0 / 20.0 + 15.0 / 20.0) / 2.0));
    CHECK(r.ctl == doctest::Approx((2.0 + 5.0) / 2.0));
    CHECK(r.aeep == doctest::Approx((18.0 * 3.0 + 15.0 * 4.0) / 33.0));
    CHECK(r.aees == doctest::Approx(0.0));
    CHECK(r.aeeh == doctest::Approx(5.0));
    CHECK(r.tet == 1.5);
    CHECK(r.mospa > 0.0);
    CHECK(r.mospa <= 10.0);
}

TEST_CASE("undefined metrics without true tracks") {
    Fixture fx;
    const std::vector<fusion::TargetTrack> none;
    const auto r = compute_report(assign_tracks(none, fx.truth), none, fx.truth, {}, 0.0, 20);
    CHECK(r.ntt == 0.0);
    CHECK(r.tpd == 0.0);
    CHECK(std::isnan(r.aeep));
    CHECK(std::isnan(r.ctl));
    CHECK(r.mospa == doctest::Approx(10.0));
}

TEST_CASE("aggregation skips undefined values and failed runs") {
    std::vector<RunRecord> runs(3);
    runs[0].report.aeep = 1.0;
    runs[1].report.aeep = std::numeric_limits<double>::quiet_NaN();
    runs[2].ok = false;
    runs[2].report.aeep = 100.0;
    runs[0].report.ntt = 4.0;
    runs[1].report.ntt = 6.0;
    const auto a = aggregate(runs);
    CHECK(a.n_ok == 2);
    CHECK(a.n_failed == 1);
    CHECK(a.mean.aeep == 1.0);
    CHECK(a.mean.ntt == 5.0);
    CHECK(a.stddev.ntt == 1.0);
}

TEST_CASE("report field order") {
    const auto r = MetricReport::from_values({1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(r.ntt == 1);
    CHECK(r.tet == 9);
    CHECK(MetricReport::names().size() == 9);
    CHECK(r.values() == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK_THROWS((void)MetricReport::from_values({1, 2}));
}

TEST_CASE("monte carlo batches") {
    auto cfg = default_scenario();
    cfg.n_scans = 8;
    cfg.targets.resize(2);
    for (auto& t : cfg.targets) {
        t.birth = 1;
        t.death = 8;
    }
    const auto one = monte_carlo(cfg, 1, 5);
    CHECK(one.runs.size() == 1);
    CHECK(one.runs[0].seed == 5);
    CHECK(one.summary.n_ok == 1);
    CHECK(one.summary.stddev.ntt == 0.0);
    const auto two = monte_carlo(cfg, 2, 5, Mode::Network, 2);
    CHECK(two.runs[0].report.ntt == one.runs[0].report.ntt);
    CHECK(two.runs[0].report.mospa == one.runs[0].report.mospa);
    const auto single = monte_carlo(cfg, 1, 5, Mode::Sensor2);
    CHECK(single.summary.n_ok == 1);
    CHECK(mode_name(Mode::Sensor1) == "sensor1");
    CHECK_THROWS((void)monte_carlo(cfg, 0, 1));
}

}  // TEST_SUITE
