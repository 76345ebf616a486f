#include "othr/metrics.hpp"

#include "othr/assignment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace othr::metrics {

namespace {

struct Overlap {
    int scans = 0;
    double mean_dx = 0.0;
    double mean_dy = 0.0;
    double mean_dist = 0.0;
};

Overlap overlap(const fusion::TargetTrack& track, const std::vector<int>& scans,
                const sim::TargetTruth& target) {
    Overlap o;
    for (int k : scans) {
        if (!target.alive(k)) continue;
        const Vec4& m = track.states[k - track.birth].mean;
        const auto& x = target.at(k);
        o.mean_dx += std::abs(m(0) - x.x);
        o.mean_dy += std::abs(m(2) - x.y);
        o.mean_dist += std::hypot(m(0) - x.x, m(2) - x.y);
        ++o.scans;
    }
    if (o.scans > 0) {
        o.mean_dx /= o.scans;
        o.mean_dy /= o.scans;
        o.mean_dist /= o.scans;
    }
    return o;
}

}  // namespace

std::vector<int> confirmed_scans(const fusion::TargetTrack& track) {
    std::vector<int> out;
    for (int k = track.birth; k <= track.last_scan(); ++k)
        if (track.confirmed_at(k)) out.push_back(k);
    return out;
}

Assignment assign_tracks(const std::vector<fusion::TargetTrack>& tracks, const sim::GroundTruth& truth,
                         const AssignmentOptions& options) {
    const int n_tracks = static_cast<int>(tracks.size());
    const int n_targets = static_cast<int>(truth.targets.size());
    Assignment out;
    out.target_of_track.assign(n_tracks, Assignment::kIgnored);
    out.track_of_target.assign(n_targets, -1);
    std::vector<int> length(n_tracks, 0);
    std::vector<int> candidate(n_tracks, -1);
    for (int i = 0; i < n_tracks; ++i) {
        const auto scans = confirmed_scans(tracks[i]);
        length[i] = static_cast<int>(scans.size());
        if (length[i] < options.min_length) continue;
        double best = std::numeric_limits<double>::infinity();
        for (int g = 0; g < n_targets; ++g) {
            const auto o = overlap(tracks[i], scans, truth.targets[g]);
            if (o.scans == 0) continue;
            if (o.mean_dx < options.max_mean_offset && o.mean_dy < options.max_mean_offset &&
                o.mean_dist < best) {
                best = o.mean_dist;
                candidate[i] = g;
            }
        }
        out.target_of_track[i] = candidate[i] >= 0 ? candidate[i] : Assignment::kFalse;
    }
    // Keep the longest track per target; ties go to the smaller id.
    for (int i = 0; i < n_tracks; ++i) {
        const int g = candidate[i];
        if (g < 0) continue;
        const int cur = out.track_of_target[g];
        if (cur < 0 || length[i] > length[cur] ||
            (length[i] == length[cur] && tracks[i].id < tracks[cur].id)) {
            out.track_of_target[g] = i;
        }
    }
    for (int i = 0; i < n_tracks; ++i) {
        const int g = candidate[i];
        if (g >= 0 && out.track_of_target[g] != i) out.target_of_track[i] = Assignment::kIgnored;
    }
    return out;
}

const std::vector<std::string>& MetricReport::names() {
    static const std::vector<std::string> n{"NTT", "TPD", "NFT", "CTL", "AEEP",
                                            "AEES", "AEEH", "MOSPA", "TET"};
    return n;
}

std::vector<double> MetricReport::values() const {
    return {ntt, tpd, nft, ctl, aeep, aees, aeeh, mospa, tet};
}

MetricReport MetricReport::from_values(const std::vector<double>& v) {
    if (v.size() != 9) throw std::invalid_argument("a metric report has nine fields");
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
}

double ospa(const std::vector<Vec2>& a, const std::vector<Vec2>& b, const OspaOptions& options) {
    if (!(options.cutoff > 0.0) || !(options.order >= 1.0))
        throw std::invalid_argument("ospa needs c > 0 and p >= 1");
    const std::vector<Vec2>& small = a.size() <= b.size() ? a : b;
    const std::vector<Vec2>& large = a.size() <= b.size() ? b : a;
    const int m = static_cast<int>(small.size());
    const int n = static_cast<int>(large.size());
    if (n == 0) return 0.0;
    const double c = options.cutoff;
    const double p = options.order;
    MatX cost(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            cost(i, j) = std::pow(std::min(c, (small[i] - large[j]).norm()), p);
    double total = 0.0;
    if (m > 0) {
        const auto match = solve_assignment(cost);
        for (int i = 0; i < m; ++i) total += cost(i, match[i]);
    }
    total += std::pow(c, p) * (n - m);
    return std::pow(total / n, 1.0 / p);
}

MetricReport compute_report(const Assignment& assignment, const std::vector<fusion::TargetTrack>& tracks,
                            const sim::GroundTruth& truth, const std::vector<std::vector<Vec2>>& heights,
                            double wall_seconds, int n_scans, const OspaOptions& ospa_options) {
    MetricReport r;
    r.tet = wall_seconds;
    for (int code : assignment.target_of_track)
        if (code == Assignment::kFalse) r.nft += 1.0;

    double tpd = 0.0, ctl = 0.0, pos = 0.0, vel = 0.0;
    long samples = 0;
    int valid = 0;
    for (std::size_t g = 0; g < truth.targets.size(); ++g) {
        const int i = assignment.track_of_target[g];
        if (i < 0) continue;
        ++valid;
        const auto& target = truth.targets[g];
        const auto& track = tracks[i];
        const int lifetime = target.spec.death - target.spec.birth + 1;
        int covered = 0;
        for (int k : confirmed_scans(track)) {
            if (!target.alive(k)) continue;
            ++covered;
            const Vec4& m = track.states[k - track.birth].mean;
            const auto& x = target.at(k);
            pos += std::hypot(m(0) - x.x, m(2) - x.y);
            vel += std::hypot(m(1) - x.vx, m(3) - x.vy);
            ++samples;
        }
        tpd += static_cast<double>(covered) / lifetime;
        ctl += std::max(0, track.confirm_scan - target.spec.birth);
    }
    r.ntt = valid;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.tpd = valid > 0 ? tpd / valid : 0.0;
    r.ctl = valid > 0 ? ctl / valid : nan;
    r.aeep = samples > 0 ? pos / static_cast<double>(samples) : nan;
    r.aees = samples > 0 ? vel / static_cast<double>(samples) : nan;

    double h_err = 0.0;
    long h_n = 0;
    for (std::size_t s = 0; s < heights.size() && s < truth.heights.size(); ++s) {
        const std::size_t n = std::min(heights[s].size(), truth.heights[s].size());
        for (std::size_t k = 0; k < n; ++k) {
            h_err += (heights[s][k] - truth.heights[s][k]).norm();
            ++h_n;
        }
    }
    if (h_n > 0) r.aeeh = h_err / static_cast<double>(h_n);

    double ospa_sum = 0.0;
    for (int k = 1; k <= n_scans; ++k) {
        std::vector<Vec2> est, tru;
        for (const auto& t : tracks)
            if (k >= t.birth && k <= t.last_scan() && t.confirmed_at(k)) {
                const Vec4& m = t.states[k - t.birth].mean;
                est.emplace_back(m(0), m(2));
            }
        for (const auto& g : truth.targets)
            if (g.alive(k)) tru.emplace_back(g.at(k).x, g.at(k).y);
        ospa_sum += ospa(est, tru, ospa_options);
    }
    if (n_scans > 0) r.mospa = ospa_sum / n_scans;
    return r;
}

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::Network: return "network";
        case Mode::Sensor1: return "sensor1";
        case Mode::Sensor2: return "sensor2";
    }
    return "unknown";
}

Aggregate aggregate(const std::vector<RunRecord>& runs) {
    Aggregate a;
    std::vector<std::vector<double>> columns(9);
    for (const auto& r : runs) {
        if (!r.ok) {
            ++a.n_failed;
            continue;
        }
        ++a.n_ok;
        const auto v = r.report.values();
        for (int i = 0; i < 9; ++i)
            if (std::isfinite(v[i])) columns[i].push_back(v[i]);
    }
    std::vector<double> mean(9, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> sd(9, std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < 9; ++i) {
        const auto& c = columns[i];
        if (c.empty()) continue;
        double sum = 0.0;
        for (double x : c) sum += x;
        mean[i] = sum / static_cast<double>(c.size());
        double sq = 0.0;
        for (double x : c) sq += (x - mean[i]) * (x - mean[i]);
        sd[i] = std::sqrt(sq / static_cast<double>(c.size()));
    }
    a.mean = MetricReport::from_values(mean);
    a.stddev = MetricReport::from_values(sd);
    return a;
}

MetricReport evaluate_run(const ScenarioConfig& config, Mode mode) {
    const auto out = sim::simulate(config);
    ScenarioConfig cfg = config;
    std::vector<sim::ScanFrame> frames = out.frames;
    sim::GroundTruth truth = out.truth;
    if (mode != Mode::Network) {
        const std::vector<int> keep{mode == Mode::Sensor1 ? 0 : 1};
        if (keep[0] >= config.n_sensors()) throw ConfigError("scenario has no sensor for this mode");
        cfg = sim::select_sensors(config, keep);
        frames = sim::select_sensors(out.frames, keep);
        truth = sim::select_sensors(out.truth, keep);
    }
    const auto result = fusion::run_tracker(cfg, frames, cfg.n_scans);
    const auto assignment = assign_tracks(result.tracks, truth);
    return compute_report(assignment, result.tracks, truth, result.heights, result.summary.wall_seconds,
                          cfg.n_scans);
}

MonteCarloResult monte_carlo(const ScenarioConfig& config, int n_runs, std::uint64_t base_seed, Mode mode,
                             int threads) {
    if (n_runs < 1) throw std::invalid_argument("monte_carlo needs at least one run");
    MonteCarloResult out;
    out.runs.resize(n_runs);
    auto work = [&](int i) {
        auto& rec = out.runs[i];
        rec.run = i;
        rec.seed = base_seed + static_cast<std::uint64_t>(i);
        ScenarioConfig cfg = config;
        cfg.seed = rec.seed;
        try {
            rec.report = evaluate_run(cfg, mode);
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    };
    const int n_threads = std::clamp(threads, 1, n_runs);
    if (n_threads == 1) {
        for (int i = 0; i < n_runs; ++i) work(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                for (int i = next++; i < n_runs; i = next++) work(i);
            });
        for (auto& th : pool) th.join();
    }
    out.summary = aggregate(out.runs);
    return out;
}

}  // namespace othr::metrics
