#include "othr/fusion.hpp"

#include "othr/visibility.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

namespace othr::fusion {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <typename T>
void erase_front(std::vector<T>& v) {
    v.erase(v.begin());
}

/// Largest absolute difference between two association tables, matching
/// target rows by track id. Rows without a counterpart count as a full change.
double belief_change(const ScanAssociation& prev, const ScanAssociation& next) {
    if (prev.belief.n_meas != next.belief.n_meas || prev.belief.n_paths != next.belief.n_paths)
        return kInf;
    const int m = next.belief.n_meas;
    const int p = next.belief.n_paths;
    double change = 0.0;
    for (int j = 0; j < m; ++j)
        change = std::max(change, std::abs(prev.belief.clutter[j] - next.belief.clutter[j]));
    for (std::size_t i = 0; i < next.track_ids.size(); ++i) {
        const auto it = std::find(prev.track_ids.begin(), prev.track_ids.end(), next.track_ids[i]);
        if (it == prev.track_ids.end()) return kInf;
        const int pi = static_cast<int>(it - prev.track_ids.begin());
        for (int tau = 0; tau < p; ++tau) {
            const int rn = static_cast<int>(i) * p + tau;
            const int rp = pi * p + tau;
            change = std::max(change, std::abs(prev.belief.miss[rp] - next.belief.miss[rn]));
            for (int j = 0; j < m; ++j)
                change = std::max(change, std::abs(prev.belief.a(rp, j) - next.belief.a(rn, j)));
        }
    }
    return change;
}

int target_index(const ScanAssociation& sa, int id) {
    const auto it = std::find(sa.track_ids.begin(), sa.track_ids.end(), id);
    return it == sa.track_ids.end() ? -1 : static_cast<int>(it - sa.track_ids.begin());
}

/// Synthetic measurements of a (scan, sensor) indexed by row (-1 when absent).
struct SyntheticTable {
    std::vector<assoc::Synthetic> items;
    std::vector<int> by_row;
};

SyntheticTable synthetic_table(const ScanAssociation& sa,
                               const std::vector<geometry::SlantMeasurement>& returns, double floor) {
    SyntheticTable t;
    t.items = assoc::synthetic_measurements(sa.belief, returns, floor);
    t.by_row.assign(static_cast<std::size_t>(sa.belief.n_targets) * sa.belief.n_paths, -1);
    for (std::size_t n = 0; n < t.items.size(); ++n) t.by_row[t.items[n].row] = static_cast<int>(n);
    return t;
}

double predicted_visibility(const Mat2& t, double p) { return (t * Vec2(1.0 - p, p))(1); }

}  // namespace

Tracker::Tracker(ScenarioConfig config) : config_(std::move(config)) {
    config_.validate();
    gate_ = chi_square_quantile(config_.tracker.gate_probability, 3);
    log_clutter_ = std::log(clutter_density(config_));
    heights_.resize(config_.n_sensors());
    window_.start = 1;
    window_.end = 0;
    window_.sensors.resize(config_.n_sensors());
}

assoc::SensorModel Tracker::sensor_model(int s) const {
    assoc::SensorModel m;
    m.site = config_.sites[s];
    m.paths = config_.paths;
    m.p_d = config_.p_d[s];
    m.epsilon = config_.epsilon;
    m.meas_noise = config_.meas_noise;
    m.log_clutter = log_clutter_;
    m.gate_threshold = gate_;
    return m;
}

std::vector<sim::ScanFrame> Tracker::normalize_frames(const std::vector<sim::ScanFrame>& frames,
                                                      int k) const {
    std::vector<sim::ScanFrame> out(config_.n_sensors());
    for (int s = 0; s < config_.n_sensors(); ++s) {
        out[s].k = k;
        out[s].sensor = s;
        out[s].has_ionosonde = false;
    }
    for (const auto& f : frames) {
        if (f.sensor < 0 || f.sensor >= config_.n_sensors()) continue;
        out[f.sensor] = f;
        out[f.sensor].k = k;
    }
    return out;
}

void Tracker::process(const std::vector<sim::ScanFrame>& frames) {
    if (finished_) throw std::logic_error("tracker already finished");
    const int k = window_.end + 1;
    const auto fr = normalize_frames(frames, k);
    if (window_.end >= window_.start && window_.length() >= config_.tracker.window) {
        slide(fr);
    } else {
        append_scan(fr);
    }
    const int ell = config_.tracker.window;
    if (k <= ell) forward_step();
    if (k >= ell) run_window();
    manage_tracks();
}

void Tracker::slide(const std::vector<sim::ScanFrame>& frames) {
    drop_oldest();
    append_scan(normalize_frames(frames, window_.end + 1));
}

void Tracker::append_scan(const std::vector<sim::ScanFrame>& frames) {
    const int k = window_.end + 1;
    window_.end = k;
    window_.frames.push_back(frames);
    window_.association.emplace_back(config_.n_sensors());
    const Mat4 f = config_.transition();
    const Mat2 tv = config_.visibility_transition();
    for (auto& t : window_.tracks) {
        const auto pred = kin::predict(t.filtered.back(), f, config_.process_noise);
        const double p = predicted_visibility(tv, t.p_filtered.back());
        t.filtered.push_back(pred);
        t.smoothed.push_back(pred);
        t.p_filtered.push_back(p);
        t.p_smoothed.push_back(p);
        t.has_estimate.push_back(false);
    }
    for (int s = 0; s < config_.n_sensors(); ++s) {
        auto& ws = window_.sensors[s];
        iono::IonoState st;
        if (k == 1) {
            ws.first_prior.mean = frames[s].has_ionosonde ? frames[s].ionosonde : config_.nominal_layers[s];
            ws.first_prior.cov = config_.iono_noise;
            st = ws.first_prior;
        } else {
            st = iono::predict_heights(ws.filtered.back(), config_.height_transition,
                                       config_.height_noise);
        }
        ws.filtered.push_back(st);
        ws.smoothed.push_back(st);
        ws.has_estimate.push_back(false);
    }
    spawn_from_unexplained();
}

void Tracker::drop_oldest() {
    const int t0 = window_.start;
    for (auto& t : window_.tracks) {
        if (t.birth <= t0) {
            persist(t, 0);
            t.anchor = t.filtered[0];
            t.anchor_p = t.p_filtered[0];
            t.anchored = true;
        }
        erase_front(t.filtered);
        erase_front(t.smoothed);
        erase_front(t.p_filtered);
        erase_front(t.p_smoothed);
        erase_front(t.has_estimate);
    }
    for (int s = 0; s < config_.n_sensors(); ++s) {
        auto& ws = window_.sensors[s];
        heights_[s].push_back(ws.smoothed[0].mean);
        ws.anchor = ws.filtered[0];
        ws.anchored = true;
        erase_front(ws.filtered);
        erase_front(ws.smoothed);
        erase_front(ws.has_estimate);
    }
    erase_front(window_.frames);
    erase_front(window_.association);
    window_.start = t0 + 1;
}

void Tracker::persist(const WindowTrack& t, int w) {
    auto& rec = store_[store_index_.at(t.id)];
    rec.states.push_back(t.smoothed[w]);
    rec.p_visible.push_back(t.p_smoothed[w]);
    rec.confirm_scan = t.confirm_scan;
    rec.frozen_events = t.frozen_events;
}

void Tracker::add_track(const init::TentativeTrack& tent) {
    const int k = window_.end;
    const int len = window_.length();
    WindowTrack t;
    t.id = next_id_++;
    t.birth = k;
    t.birth_prior = tent.state;
    t.birth_p = tent.p_visible;
    t.filtered.assign(len, tent.state);
    t.smoothed.assign(len, tent.state);
    t.p_filtered.assign(len, tent.p_visible);
    t.p_smoothed.assign(len, tent.p_visible);
    t.has_estimate.assign(len, false);
    window_.tracks.push_back(std::move(t));

    TargetTrack rec;
    rec.id = window_.tracks.back().id;
    rec.birth = k;
    store_index_[rec.id] = store_.size();
    store_.push_back(std::move(rec));
    ++summary_.tracks_created;
}

void Tracker::spawn_from_unexplained() {
    if (!config_.tracker.spawn_tracks) return;
    const int w = window_.length() - 1;
    const int n_s = config_.n_sensors();
    std::vector<assoc::TargetView> views;
    for (const auto& t : window_.tracks)
        views.push_back({t.smoothed[w].mean, t.smoothed[w].cov, t.p_smoothed[w]});
    std::vector<const std::vector<geometry::SlantMeasurement>*> meas(n_s);
    std::vector<std::vector<bool>> candidates(n_s);
    std::vector<Vec2> layers(n_s);
    std::vector<Mat2> layer_cov(n_s);
    for (int s = 0; s < n_s; ++s) {
        const auto& frame = window_.frames[w][s];
        const auto& hs = window_.sensors[s].smoothed[w];
        meas[s] = &frame.returns;
        const auto problem = assoc::build_problem(views, {hs.mean, hs.cov}, frame.returns, sensor_model(s));
        candidates[s] = assoc::unexplained(problem);
        layers[s] = hs.mean;
        layer_cov[s] = hs.cov;
    }
    const auto fresh = init::spawn_tracks(config_, window_.end, meas, candidates, layers, layer_cov);
    for (const auto& t : fresh) add_track(t);
}

double Tracker::association_pass(bool forward_only) {
    const int len = window_.length();
    const auto& tp = config_.tracker;
    assoc::LbpOptions opts{tp.lbp_max_iterations, tp.lbp_tolerance, tp.lbp_damping};
    double change = 0.0;
    for (int w = forward_only ? len - 1 : 0; w < len; ++w) {
        for (int s = 0; s < config_.n_sensors(); ++s) {
            ScanAssociation sa;
            std::vector<assoc::TargetView> views;
            for (const auto& t : window_.tracks) {
                if (!alive(t, w)) continue;
                sa.track_ids.push_back(t.id);
                views.push_back({t.smoothed[w].mean, t.smoothed[w].cov, t.p_smoothed[w]});
            }
            const auto& hs = window_.sensors[s].smoothed[w];
            const auto& frame = window_.frames[w][s];
            const auto problem =
                assoc::build_problem(views, {hs.mean, hs.cov}, frame.returns, sensor_model(s));
            sa.belief = assoc::run_lbp(problem, opts);
            auto& slot = window_.association[w][s];
            sa.computed = true;
            change = std::max(change, slot.computed ? belief_change(slot, sa) : kInf);
            slot = std::move(sa);
        }
    }
    return change;
}

double Tracker::heights_pass(int /*iteration*/, bool forward_only) {
    const int len = window_.length();
    const int n_p = config_.n_paths();
    const auto& tp = config_.tracker;
    for (int s = 0; s < config_.n_sensors(); ++s) {
        auto& ws = window_.sensors[s];
        if (forward_only) {
            const int w = len - 1;
            const auto& frame = window_.frames[w][s];
            if (frame.has_ionosonde) {
                // Warm start takes the ionosonde reading as the height estimate.
                ws.filtered[w].mean = frame.ionosonde;
                ws.filtered[w].cov = config_.iono_noise;
            }
            ws.smoothed[w] = ws.filtered[w];
            ws.has_estimate[w] = true;
            continue;
        }
        std::vector<iono::IonoState> filtered = ws.filtered;
        for (int w = 0; w < len; ++w) {
            const int t = window_.start + w;
            iono::IonoState prior;
            if (t == 1) {
                prior = ws.first_prior;
            } else if (w == 0) {
                prior = iono::predict_heights(ws.anchor, config_.height_transition, config_.height_noise);
            } else {
                prior = iono::predict_heights(filtered[w - 1], config_.height_transition,
                                              config_.height_noise);
            }
            const auto& frame = window_.frames[w][s];
            const Vec2* reading = (frame.has_ionosonde && t != 1) ? &frame.ionosonde : nullptr;
            const Vec2 lin = ws.has_estimate[w] ? ws.smoothed[w].mean : prior.mean;
            std::vector<iono::FeedbackBlock> feedback;
            if (tp.height_feedback) {
                const auto& sa = window_.association[w][s];
                const auto table = synthetic_table(sa, frame.returns, tp.synthetic_floor);
                for (const auto& syn : table.items) {
                    const int i = syn.row / n_p;
                    const int tau = syn.row % n_p;
                    const auto it = std::find_if(window_.tracks.begin(), window_.tracks.end(),
                                                 [&](const WindowTrack& wt) { return wt.id == sa.track_ids[i]; });
                    if (it == window_.tracks.end()) continue;
                    try {
                        feedback.push_back(iono::make_feedback(
                            it->smoothed[w].mean, it->smoothed[w].cov, syn.y, config_.meas_noise,
                            1.0 - syn.weight, config_.sites[s], config_.paths[tau], lin));
                    } catch (const DegenerateGeometry&) {
                    }
                }
            }
            iono::HeightUpdateOptions opt;
            opt.skip_miss = tp.feedback_skip_miss;
            opt.lin = &lin;
            try {
                filtered[w] = iono::update_heights(prior, reading, config_.iono_matrix,
                                                   config_.iono_noise, feedback, config_.sites[s], opt);
            } catch (const Error&) {
                // Fall back to the ionosonde-only update.
                filtered[w] = iono::update_heights(prior, reading, config_.iono_matrix,
                                                   config_.iono_noise, {}, config_.sites[s], opt);
            }
        }
        ws.filtered = filtered;
        ws.smoothed = iono::smooth_heights(filtered, config_.height_transition, config_.height_noise);
        std::fill(ws.has_estimate.begin(), ws.has_estimate.end(), true);
    }
    return 0.0;
}

double Tracker::visibility_pass(bool forward_only) {
    const int len = window_.length();
    const int n_p = config_.n_paths();
    const Mat2 tv = config_.visibility_transition();
    double change = 0.0;
    for (auto& t : window_.tracks) {
        const int w0 = std::max(0, t.birth - window_.start);
        std::vector<vis::PseudoLikelihood> xi;
        for (int w = w0; w < len; ++w) {
            std::vector<vis::MissTerm> terms;
            for (int s = 0; s < config_.n_sensors(); ++s) {
                const auto& sa = window_.association[w][s];
                const int i = target_index(sa, t.id);
                if (i < 0) continue;
                for (int tau = 0; tau < n_p; ++tau)
                    terms.push_back({sa.belief.miss[i * n_p + tau], config_.p_d[s][tau]});
            }
            xi.push_back(vis::pseudo_likelihood(terms, config_.epsilon));
        }
        if (forward_only) {
            const int w = len - 1;
            const int t_scan = window_.start + w;
            Vec2 prior;
            if (t_scan == t.birth) {
                prior = Vec2(1.0 - t.birth_p, t.birth_p);
            } else {
                const double prev = w > 0 ? t.p_filtered[w - 1] : t.anchor_p;
                prior = tv * Vec2(1.0 - prev, prev);
            }
            const auto fb = vis::forward_backward(prior(1), Mat2::Identity(), {xi.back()});
            change = std::max(change, std::abs(fb[0].smoothed - t.p_smoothed[w]));
            t.p_filtered[w] = fb[0].filtered;
            t.p_smoothed[w] = fb[0].smoothed;
            continue;
        }
        const bool born_inside = t.birth >= window_.start;
        const auto fb = born_inside ? vis::forward_backward(t.birth_p, tv, xi)
                                    : vis::forward_backward_anchored(t.anchor_p, tv, xi);
        for (int w = w0; w < len; ++w) {
            change = std::max(change, std::abs(fb[w - w0].smoothed - t.p_smoothed[w]));
            t.p_filtered[w] = fb[w - w0].filtered;
            t.p_smoothed[w] = fb[w - w0].smoothed;
        }
    }
    return change;
}

double Tracker::kinematics_pass(int /*iteration*/, bool forward_only) {
    const int len = window_.length();
    const int n_p = config_.n_paths();
    const auto& tp = config_.tracker;
    const Mat4 f = config_.transition();
    const Mat4& q = config_.process_noise;

    // Synthetic measurements per (scan, sensor).
    std::vector<std::vector<SyntheticTable>> tables(len);
    for (int w = forward_only ? len - 1 : 0; w < len; ++w)
        for (int s = 0; s < config_.n_sensors(); ++s)
            tables[w].push_back(synthetic_table(window_.association[w][s], window_.frames[w][s].returns,
                                                tp.synthetic_floor));

    double change = 0.0;
    for (auto& t : window_.tracks) {
        const int w0 = std::max(0, t.birth - window_.start);
        const int first = forward_only ? len - 1 : w0;
        if (first < w0) continue;
        std::vector<kin::GaussianState> filtered = t.filtered;
        try {
            for (int w = first; w < len; ++w) {
                const int scan = window_.start + w;
                kin::GaussianState prior;
                if (scan == t.birth) {
                    prior = t.birth_prior;
                } else if (w == 0) {
                    prior = kin::predict(t.anchor, f, q);
                } else {
                    prior = kin::predict(filtered[w - 1], f, q);
                }
                const Vec4 lin = t.has_estimate[w] ? t.smoothed[w].mean : prior.mean;
                const auto lin_state = geometry::UtmState::from(lin);
                kin::StackedObservation obs;
                for (int s = 0; s < config_.n_sensors(); ++s) {
                    const auto& sa = window_.association[w][s];
                    const int i = target_index(sa, t.id);
                    if (i < 0) continue;
                    const auto& hs = window_.sensors[s].smoothed[w];
                    for (int tau = 0; tau < n_p; ++tau) {
                        const int pos = tables[w][s].by_row[i * n_p + tau];
                        if (pos < 0) continue;
                        const auto& syn = tables[w][s].items[pos];
                        kin::ObservationBlock blk;
                        blk.sensor = s;
                        blk.path = tau;
                        blk.y = syn.y;
                        blk.site = config_.sites[s];
                        blk.heights = path_heights(hs.mean, config_.paths[tau]);
                        const Mat32 ju = geometry::jacobian_heights(lin_state, blk.site, blk.heights) *
                                         layer_selection(config_.paths[tau]);
                        blk.cov = (config_.meas_noise + ju * hs.cov * ju.transpose()) / syn.weight;
                        symmetrize(blk.cov);
                        obs.push_back(blk);
                    }
                }
                filtered[w] = kin::update(prior, obs, &lin);
            }
            std::vector<kin::GaussianState> smoothed;
            if (forward_only) {
                smoothed = t.smoothed;
                smoothed[len - 1] = filtered[len - 1];
            } else {
                smoothed = rts_smooth<4>(filtered, f, q, static_cast<std::size_t>(w0));
            }
            for (int w = first; w < len; ++w) {
                change = std::max(change, (smoothed[w].mean - t.smoothed[w].mean).cwiseAbs().maxCoeff());
                t.has_estimate[w] = true;
            }
            t.filtered = std::move(filtered);
            t.smoothed = std::move(smoothed);
            t.frozen = false;
        } catch (const Error&) {
            // Keep the last good belief of this target for the rest of the window.
            t.frozen = true;
            ++t.frozen_events;
            ++summary_.frozen_events;
        }
    }
    return change;
}

void Tracker::forward_step() {
    association_pass(true);
    heights_pass(1, true);
    visibility_pass(true);
    kinematics_pass(1, true);
}

void Tracker::run_window() {
    const auto& tp = config_.tracker;
    window_.converged = false;
    window_.iterations = 0;
    double change = kInf;
    for (int it = 1; it <= tp.max_outer_iterations; ++it) {
        const double ca = association_pass(false);
        heights_pass(it, false);
        const double cv = visibility_pass(false);
        const double ck = kinematics_pass(it, false);
        change = std::max({ca, cv, ck});
        window_.iterations = it;
        if (change < tp.outer_tolerance) {
            window_.converged = true;
            break;
        }
    }
    window_.last_change = change;
    summary_.windows.push_back({window_.end, window_.iterations, window_.converged, change,
                                static_cast<int>(window_.tracks.size())});
}

void Tracker::manage_tracks() {
    const auto& tp = config_.tracker;
    const int k = window_.end;
    std::vector<WindowTrack> keep;
    for (auto& t : window_.tracks) {
        const auto& rec = store_[store_index_.at(t.id)];
        std::vector<double> seq = rec.p_visible;
        const int w0 = std::max(0, t.birth - window_.start);
        for (int w = w0; w < window_.length(); ++w) seq.push_back(t.p_smoothed[w]);
        const auto st = vis::manage_track(seq, tp.confirm_threshold, tp.delete_streak);
        if (st.confirmed && t.confirm_scan < 0) {
            t.confirm_scan = k;
            ++summary_.tracks_confirmed;
        }
        if (st.deleted) {
            for (int w = w0; w < window_.length(); ++w) persist(t, w);
            auto& r = store_[store_index_.at(t.id)];
            r.delete_scan = k;
            r.confirm_scan = t.confirm_scan;
            r.confirmed_until = t.birth + st.streak_start - 1;
            continue;
        }
        keep.push_back(std::move(t));
    }
    window_.tracks = std::move(keep);
}

void Tracker::finish() {
    if (finished_) return;
    finished_ = true;
    for (auto& t : window_.tracks) {
        const int w0 = std::max(0, t.birth - window_.start);
        for (int w = w0; w < window_.length(); ++w) persist(t, w);
        auto& r = store_[store_index_.at(t.id)];
        r.confirm_scan = t.confirm_scan;
        r.confirmed_until = r.last_scan();
    }
    for (int s = 0; s < config_.n_sensors(); ++s)
        for (int w = 0; w < window_.length(); ++w)
            heights_[s].push_back(window_.sensors[s].smoothed[w].mean);
    window_.tracks.clear();
}

TrackerResult run_tracker(const ScenarioConfig& config, const std::vector<sim::ScanFrame>& frames,
                          int n_scans) {
    const auto t0 = std::chrono::steady_clock::now();
    Tracker tracker(config);
    std::vector<std::vector<sim::ScanFrame>> by_scan(std::max(n_scans, 0));
    for (const auto& f : frames)
        if (f.k >= 1 && f.k <= n_scans) by_scan[f.k - 1].push_back(f);
    for (const auto& scan : by_scan) tracker.process(scan);
    tracker.finish();
    TrackerResult out;
    out.tracks = tracker.track_store();
    out.heights = tracker.height_store();
    out.summary = tracker.summary();
    out.summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<TargetTrack> confirmed_tracks(const std::vector<TargetTrack>& tracks) {
    std::vector<TargetTrack> out;
    for (const auto& t : tracks)
        if (t.ever_confirmed()) out.push_back(t);
    return out;
}

}  // namespace othr::fusion
