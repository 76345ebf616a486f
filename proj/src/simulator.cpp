#include "othr/simulator.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace othr::sim {

namespace {

template <int N>
Eigen::Matrix<double, N, 1> draw_gaussian(std::mt19937_64& rng,
                                          const Eigen::Matrix<double, N, N>& chol) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Eigen::Matrix<double, N, 1> z;
    for (int i = 0; i < N; ++i) z(i) = n01(rng);
    return chol * z;
}

template <int N>
Eigen::Matrix<double, N, N> lower_factor(const Eigen::Matrix<double, N, N>& cov) {
    Eigen::LLT<Eigen::Matrix<double, N, N>> llt(cov);
    if (llt.info() != Eigen::Success) throw ConfigError("covariance is not positive definite");
    return llt.matrixL();
}

}  // namespace

SimulationOutput simulate(const ScenarioConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    const int n_s = config.n_sensors();
    const int n_p = config.n_paths();
    const Mat4 f = config.transition();
    const Mat4 q_chol = lower_factor<4>(config.process_noise);
    const Mat2 h_chol = lower_factor<2>(config.height_noise);
    const Mat3 r_chol = lower_factor<3>(config.meas_noise);
    const Mat2 w_chol = lower_factor<2>(config.iono_noise);

    SimulationOutput out;
    auto& truth = out.truth;

    // Target trajectories.
    for (const auto& spec : config.targets) {
        TargetTruth t;
        t.spec = spec;
        Vec4 x = spec.initial.vec();
        for (int k = spec.birth; k <= spec.death; ++k) {
            if (k > spec.birth) x = f * x + draw_gaussian<4>(rng, q_chol);
            t.states.push_back(geometry::UtmState::from(x));
        }
        t.detected.assign(static_cast<std::size_t>(spec.death - spec.birth + 1) * n_s * n_p, 0);
        truth.targets.push_back(std::move(t));
    }

    // Layer heights, a random walk from the nominal values kept inside the
    // physical bounds.
    truth.heights.resize(n_s);
    for (int s = 0; s < n_s; ++s) {
        Vec2 u = config.nominal_layers[s];
        for (int k = 1; k <= config.n_scans; ++k) {
            if (k > 1) u = config.height_transition * u + draw_gaussian<2>(rng, h_chol);
            u = u.cwiseMax(geometry::kMinHeight).cwiseMin(geometry::kMaxHeight);
            truth.heights[s].push_back(u);
        }
    }

    const RegionBounds& reg = config.region;
    std::poisson_distribution<int> n_clutter(config.expected_clutter);

    for (int k = 1; k <= config.n_scans; ++k) {
        for (int s = 0; s < n_s; ++s) {
            ScanFrame frame;
            frame.k = k;
            frame.sensor = s;
            FrameTruth labels;
            const Vec2& u = truth.heights[s][k - 1];
            for (std::size_t i = 0; i < truth.targets.size(); ++i) {
                auto& t = truth.targets[i];
                if (!t.alive(k)) continue;
                for (int p = 0; p < n_p; ++p) {
                    if (u01(rng) >= config.p_d[s][p]) continue;
                    const auto h = geometry::forward_map(t.at(k), config.sites[s],
                                                         path_heights(u, config.paths[p]));
                    t.detected[(static_cast<std::size_t>(k - t.spec.birth) * n_s + s) * n_p + p] = 1;
                    Vec3 y = h.vec() + draw_gaussian<3>(rng, r_chol);
                    y(2) = wrap_angle(y(2));
                    const auto m = geometry::SlantMeasurement::from(y);
                    if (!reg.contains(m)) continue;
                    frame.returns.push_back(m);
                    labels.target.push_back(static_cast<int>(i));
                    labels.path.push_back(p);
                }
            }
            const int nc = n_clutter(rng);
            for (int c = 0; c < nc; ++c) {
                geometry::SlantMeasurement m;
                m.r = reg.r_min + (reg.r_max - reg.r_min) * u01(rng);
                m.rdot = reg.rdot_min + (reg.rdot_max - reg.rdot_min) * u01(rng);
                m.a = reg.a_min + (reg.a_max - reg.a_min) * u01(rng);
                frame.returns.push_back(m);
                labels.target.push_back(-1);
                labels.path.push_back(-1);
            }
            // Shuffle the returns of the frame.
            std::vector<std::size_t> perm(frame.returns.size());
            std::iota(perm.begin(), perm.end(), 0);
            for (std::size_t n = perm.size(); n > 1; --n) {
                std::uniform_int_distribution<std::size_t> pick(0, n - 1);
                std::swap(perm[n - 1], perm[pick(rng)]);
            }
            ScanFrame shuffled = frame;
            FrameTruth shuffled_labels;
            for (std::size_t n = 0; n < perm.size(); ++n) {
                shuffled.returns[n] = frame.returns[perm[n]];
                shuffled_labels.target.push_back(labels.target[perm[n]]);
                shuffled_labels.path.push_back(labels.path[perm[n]]);
            }
            shuffled.ionosonde = config.iono_matrix * u + draw_gaussian<2>(rng, w_chol);
            out.frames.push_back(std::move(shuffled));
            out.labels.push_back(std::move(shuffled_labels));
        }
    }
    return out;
}

std::vector<ScanFrame> select_sensors(const std::vector<ScanFrame>& frames,
                                      const std::vector<int>& sensors) {
    std::vector<ScanFrame> out;
    for (const auto& f : frames) {
        auto it = std::find(sensors.begin(), sensors.end(), f.sensor);
        if (it == sensors.end()) continue;
        ScanFrame g = f;
        g.sensor = static_cast<int>(it - sensors.begin());
        out.push_back(std::move(g));
    }
    return out;
}

ScenarioConfig select_sensors(const ScenarioConfig& config, const std::vector<int>& sensors) {
    ScenarioConfig c = config;
    c.sites.clear();
    c.nominal_layers.clear();
    c.p_d.clear();
    for (int s : sensors) {
        if (s < 0 || s >= config.n_sensors()) throw ConfigError("sensor index out of range");
        c.sites.push_back(config.sites[s]);
        c.nominal_layers.push_back(config.nominal_layers[s]);
        c.p_d.push_back(config.p_d[s]);
    }
    return c;
}

GroundTruth select_sensors(const GroundTruth& truth, const std::vector<int>& sensors) {
    GroundTruth g;
    g.targets = truth.targets;
    for (int s : sensors) g.heights.push_back(truth.heights.at(s));
    return g;
}

}  // namespace othr::sim
