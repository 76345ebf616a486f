#include "othr/initialization.hpp"

#include "othr/assignment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace othr::init {

std::vector<std::vector<int>> cluster_measurements(const std::vector<geometry::SlantMeasurement>& meas,
                                                   const Vec3& rho, int max_size) {
    std::vector<int> order(meas.size());
    std::iota(order.begin(), order.end(), 0);
    // Seeds in order of value, independent of input order.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& ma = meas[a];
        const auto& mb = meas[b];
        if (ma.r != mb.r) return ma.r < mb.r;
        if (ma.rdot != mb.rdot) return ma.rdot < mb.rdot;
        if (ma.a != mb.a) return ma.a < mb.a;
        return a < b;
    });
    auto close = [&](int a, int b) {
        return std::abs(meas[a].r - meas[b].r) < rho(0) &&
               std::abs(meas[a].rdot - meas[b].rdot) < rho(1) &&
               std::abs(wrap_angle(meas[a].a - meas[b].a)) < rho(2);
    };
    std::vector<bool> used(meas.size(), false);
    std::vector<std::vector<int>> clusters;
    for (int seed : order) {
        if (used[seed]) continue;
        std::vector<int> members{seed};
        used[seed] = true;
        for (int cand : order) {
            if (static_cast<int>(members.size()) >= max_size) break;
            if (used[cand]) continue;
            if (std::all_of(members.begin(), members.end(), [&](int m) { return close(m, cand); })) {
                members.push_back(cand);
                used[cand] = true;
            }
        }
        if (members.size() > 1) clusters.push_back(std::move(members));
    }
    return clusters;
}

long long count_hypotheses(int n_paths, int n) {
    if (n < 0 || n > n_paths) return 0;
    long long c = 1;
    for (int k = 0; k < n; ++k) c *= (n_paths - k);
    return c;
}

namespace {

struct Inverted {
    Vec2 pos;
    Mat2 cov;
};

Vec2 invert(const geometry::SlantMeasurement& m, const geometry::SiteConfig& site,
            const geometry::PathHeights& h) {
    const auto g = geometry::inverse_map(m, site, h);
    return {g.x, g.y};
}

/// Inverts a measurement and pushes measurement and height noise through the
/// inverse map by central differences.
Inverted invert_with_cov(const geometry::SlantMeasurement& m, const geometry::SiteConfig& site,
                         const PathLayers& layers, const Vec2& layer_mean, const Mat3& meas_noise,
                         const Mat2& layer_cov) {
    const auto h = path_heights(layer_mean, layers);
    Inverted out;
    out.pos = invert(m, site, h);

    constexpr double kStepR = 1e-3;
    constexpr double kStepA = 1e-7;
    constexpr double kStepH = 1e-3;
    Mat2 j_ra;
    {
        auto mp = m, mm = m;
        mp.r += kStepR;
        mm.r -= kStepR;
        j_ra.col(0) = (invert(mp, site, h) - invert(mm, site, h)) / (2.0 * kStepR);
        mp = m;
        mm = m;
        mp.a += kStepA;
        mm.a -= kStepA;
        j_ra.col(1) = (invert(mp, site, h) - invert(mm, site, h)) / (2.0 * kStepA);
    }
    Mat2 j_h;
    {
        auto hp = h, hm = h;
        hp.ht += kStepH;
        hm.ht -= kStepH;
        j_h.col(0) = (invert(m, site, hp) - invert(m, site, hm)) / (2.0 * kStepH);
        hp = h;
        hm = h;
        hp.hr += kStepH;
        hm.hr -= kStepH;
        j_h.col(1) = (invert(m, site, hp) - invert(m, site, hm)) / (2.0 * kStepH);
    }
    Mat2 r_ra;
    r_ra << meas_noise(0, 0), meas_noise(0, 2), meas_noise(2, 0), meas_noise(2, 2);
    const Mat2 sel = layer_selection(layers);
    out.cov = j_ra * r_ra * j_ra.transpose() + j_h * sel * layer_cov * sel.transpose() * j_h.transpose();
    symmetrize(out.cov);
    return out;
}

}  // namespace

PathHypothesis best_path_hypothesis(const std::vector<geometry::SlantMeasurement>& subset,
                                    const geometry::SiteConfig& site,
                                    const std::vector<PathLayers>& paths, const Vec2& layers,
                                    const Mat3& meas_noise, const Mat2& layer_cov) {
    const int n = static_cast<int>(subset.size());
    const int n_paths = static_cast<int>(paths.size());
    if (n < 1 || n > n_paths) throw std::invalid_argument("cluster size must lie in [1, n_paths]");

    // Cache inversions per (measurement, path); failures are marked invalid.
    std::vector<std::vector<Inverted>> inv(n, std::vector<Inverted>(n_paths));
    std::vector<std::vector<bool>> ok(n, std::vector<bool>(n_paths, false));
    for (int j = 0; j < n; ++j) {
        for (int p = 0; p < n_paths; ++p) {
            try {
                inv[j][p] = invert_with_cov(subset[j], site, paths[p], layers, meas_noise, layer_cov);
                ok[j][p] = true;
            } catch (const OutOfDomain&) {
            }
        }
    }

    PathHypothesis best;
    best.score = std::numeric_limits<double>::infinity();
    std::vector<int> labels(n, -1);
    std::vector<bool> taken(n_paths, false);
    int enumerated = 0;
    auto score_of = [&]() {
        if (n == 1) return 0.0;
        double total = 0.0;
        int pairs = 0;
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                const auto& ia = inv[a][labels[a]];
                const auto& ib = inv[b][labels[b]];
                const Vec2 d = ia.pos - ib.pos;
                total += d.dot((ia.cov + ib.cov).ldlt().solve(d));
                ++pairs;
            }
        }
        return total / pairs;
    };
    auto recurse = [&](auto&& self, int j) -> void {
        if (j == n) {
            ++enumerated;
            const double s = score_of();
            if (s < best.score) {
                best.score = s;
                best.labels = labels;
            }
            return;
        }
        for (int p = 0; p < n_paths; ++p) {
            if (taken[p]) continue;
            taken[p] = true;
            labels[j] = p;
            if (ok[j][p]) {
                self(self, j + 1);
            } else {
                // Count the infeasible branch without descending.
                enumerated += static_cast<int>(count_hypotheses(n_paths - j - 1, n - j - 1));
            }
            taken[p] = false;
        }
        labels[j] = -1;
    };
    recurse(recurse, 0);
    best.n_hypotheses = enumerated;
    if (best.labels.empty()) throw AllHypothesesInfeasible("no path labeling inverts the cluster");

    Mat2 info = Mat2::Zero();
    Vec2 info_mean = Vec2::Zero();
    for (int j = 0; j < n; ++j) {
        const auto& iv = inv[j][best.labels[j]];
        const Mat2 w = iv.cov.inverse();
        info += w;
        info_mean += w * iv.pos;
    }
    best.cov = info.inverse();
    symmetrize(best.cov);
    best.position = best.cov * info_mean;
    return best;
}

TentativeTrack init_local_track(const PathHypothesis& hyp, int n_paths, int sensor, int k,
                                double velocity_variance) {
    TentativeTrack t;
    t.state.mean = Vec4(hyp.position(0), 0.0, hyp.position(1), 0.0);
    t.state.cov = Mat4::Zero();
    t.state.cov(0, 0) = hyp.cov(0, 0);
    t.state.cov(0, 2) = hyp.cov(0, 1);
    t.state.cov(2, 0) = hyp.cov(1, 0);
    t.state.cov(2, 2) = hyp.cov(1, 1);
    t.state.cov(1, 1) = velocity_variance;
    t.state.cov(3, 3) = velocity_variance;
    t.p_visible = static_cast<double>(hyp.labels.size()) / n_paths;
    t.sensors = {sensor};
    t.birth = k;
    return t;
}

namespace {

Mat2 position_block(const Mat4& p) {
    Mat2 m;
    m << p(0, 0), p(0, 2), p(2, 0), p(2, 2);
    return m;
}

Vec2 position_of(const Vec4& x) { return {x(0), x(2)}; }

}  // namespace

std::vector<TentativeTrack> associate_and_fuse(const std::vector<TentativeTrack>& a,
                                               const std::vector<TentativeTrack>& b, double gamma) {
    const double inf = std::numeric_limits<double>::infinity();
    MatX cost(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const Vec2 d = position_of(a[i].state.mean) - position_of(b[j].state.mean);
            const Mat2 s = position_block(a[i].state.cov) + position_block(b[j].state.cov);
            const double dist = d.dot(s.ldlt().solve(d));
            cost(i, j) = dist < gamma ? dist : inf;
        }
    }
    const std::vector<int> match = solve_assignment(cost);
    std::vector<TentativeTrack> out;
    std::vector<bool> b_used(b.size(), false);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (match[i] < 0) {
            out.push_back(a[i]);
            continue;
        }
        const auto& ta = a[i];
        const auto& tb = b[match[i]];
        b_used[match[i]] = true;
        const Mat4 ia = ta.state.cov.inverse();
        const Mat4 ib = tb.state.cov.inverse();
        TentativeTrack f;
        f.state.cov = (ia + ib).inverse();
        symmetrize(f.state.cov);
        f.state.mean = f.state.cov * (ia * ta.state.mean + ib * tb.state.mean);
        f.p_visible = 0.5 * (ta.p_visible + tb.p_visible);
        f.sensors = ta.sensors;
        f.sensors.insert(f.sensors.end(), tb.sensors.begin(), tb.sensors.end());
        f.support = ta.support;
        f.support.insert(f.support.end(), tb.support.begin(), tb.support.end());
        f.birth = std::min(ta.birth, tb.birth);
        out.push_back(std::move(f));
    }
    for (std::size_t j = 0; j < b.size(); ++j)
        if (!b_used[j]) out.push_back(b[j]);
    return out;
}

std::vector<TentativeTrack> spawn_tracks(
    const ScenarioConfig& config, int k,
    const std::vector<const std::vector<geometry::SlantMeasurement>*>& meas,
    const std::vector<std::vector<bool>>& candidates, const std::vector<Vec2>& layers,
    const std::vector<Mat2>& layer_cov) {
    const auto& tp = config.tracker;
    const double gamma = chi_square_quantile(tp.track_assoc_probability, 2);
    std::vector<TentativeTrack> global;
    for (int s = 0; s < static_cast<int>(meas.size()); ++s) {
        std::vector<geometry::SlantMeasurement> pool;
        std::vector<int> index;
        for (std::size_t j = 0; j < meas[s]->size(); ++j) {
            if (!candidates[s][j]) continue;
            pool.push_back((*meas[s])[j]);
            index.push_back(static_cast<int>(j));
        }
        std::vector<TentativeTrack> local;
        for (const auto& cluster : cluster_measurements(pool, tp.cluster_threshold, config.n_paths())) {
            std::vector<geometry::SlantMeasurement> subset;
            for (int c : cluster) subset.push_back(pool[c]);
            try {
                const auto hyp = best_path_hypothesis(subset, config.sites[s], config.paths,
                                                      layers[s], config.meas_noise, layer_cov[s]);
                auto t = init_local_track(hyp, config.n_paths(), s, k, tp.initial_cov_diag(1));
                t.state.cov(3, 3) = tp.initial_cov_diag(3);
                for (int c : cluster) t.support.emplace_back(s, index[c]);
                local.push_back(std::move(t));
            } catch (const AllHypothesesInfeasible&) {
            }
        }
        global = s == 0 ? std::move(local) : associate_and_fuse(global, local, gamma);
    }
    for (auto& t : global) t.p_visible = std::clamp(t.p_visible, 0.05, 0.95);
    return global;
}

}  // namespace othr::init
