#pragma once

// Sliding-window multisensor tracker. Each window alternates association,
// height identification, visibility detection and kinematic smoothing until
// the beliefs stop changing, then slides by one scan.

#include "othr/association.hpp"
#include "othr/initialization.hpp"
#include "othr/ionosphere.hpp"
#include "othr/kinematics.hpp"
#include "othr/scenario.hpp"
#include "othr/simulator.hpp"

#include <map>
#include <vector>

namespace othr::fusion {

/// Finalized history of one track.
struct TargetTrack {
    int id = 0;
    int birth = 1;                              ///< scan of the first estimate
    std::vector<kin::GaussianState> states;     ///< scans birth..last_scan()
    std::vector<double> p_visible;
    int confirm_scan = -1;     ///< scan at which the track was confirmed, -1 if never
    int delete_scan = -1;      ///< scan at which it was deleted, -1 if alive at the end
    int confirmed_until = -1;  ///< last scan flagged confirmed
    int frozen_events = 0;     ///< windows in which the kinematic update failed

    [[nodiscard]] int last_scan() const { return birth + static_cast<int>(states.size()) - 1; }
    [[nodiscard]] bool ever_confirmed() const {
        return confirm_scan > 0 && confirmed_until >= confirm_scan;
    }
    [[nodiscard]] bool confirmed_at(int k) const {
        return ever_confirmed() && k >= confirm_scan && k <= confirmed_until;
    }
};

/// Per-window bookkeeping of a live track.
struct WindowTrack {
    int id = 0;
    int birth = 1;
    bool anchored = false;          ///< true when the track predates the window
    kin::GaussianState anchor;      ///< filtered estimate just before the window
    double anchor_p = 0.5;
    kin::GaussianState birth_prior; ///< initiation estimate at the birth scan
    double birth_p = 0.5;
    std::vector<kin::GaussianState> filtered, smoothed;  ///< one per window scan
    std::vector<double> p_filtered, p_smoothed;
    std::vector<bool> has_estimate;  ///< scan already processed at least once
    bool frozen = false;
    int frozen_events = 0;
    int confirm_scan = -1;
};

struct WindowSensor {
    bool anchored = false;
    iono::IonoState anchor;
    iono::IonoState first_prior;  ///< prior at scan 1 taken from the first reading
    std::vector<iono::IonoState> filtered, smoothed;
    std::vector<bool> has_estimate;
};

/// Association marginals of one (scan, sensor) with the track id of each
/// target row.
struct ScanAssociation {
    std::vector<int> track_ids;
    assoc::AssociationBelief belief;
    bool computed = false;
};

struct WindowState {
    int start = 1;  ///< first scan in the window
    int end = 0;    ///< last scan in the window (inclusive)
    std::vector<WindowTrack> tracks;
    std::vector<WindowSensor> sensors;
    std::vector<std::vector<sim::ScanFrame>> frames;        ///< [scan - start][sensor]
    std::vector<std::vector<ScanAssociation>> association;  ///< [scan - start][sensor]
    int iterations = 0;
    bool converged = false;
    double last_change = 0.0;

    [[nodiscard]] int length() const { return end - start + 1; }
};

struct WindowSummary {
    int k = 0;
    int iterations = 0;
    bool converged = false;
    double change = 0.0;
    int n_tracks = 0;
};

struct RunSummary {
    std::vector<WindowSummary> windows;
    double wall_seconds = 0.0;
    int tracks_created = 0;
    int tracks_confirmed = 0;
    int frozen_events = 0;
};

class Tracker {
public:
    explicit Tracker(ScenarioConfig config);

    /// Consumes the frames of the next scan (one per sensor; missing sensors
    /// are treated as empty frames without an ionosonde reading).
    void process(const std::vector<sim::ScanFrame>& frames);

    /// Persists every remaining window estimate. Further process() calls are
    /// not allowed afterwards.
    void finish();

    /// Runs the outer loop on the current window.
    void run_window();

    /// Drops the oldest scan (persisting its estimates) and appends `frames`
    /// with predicted beliefs, spawning tracks from unexplained returns.
    void slide(const std::vector<sim::ScanFrame>& frames);

    [[nodiscard]] const WindowState& window() const { return window_; }
    [[nodiscard]] const std::vector<TargetTrack>& track_store() const { return store_; }
    /// Smoothed layer heights per sensor per scan, [s][k - 1].
    [[nodiscard]] const std::vector<std::vector<Vec2>>& height_store() const { return heights_; }
    [[nodiscard]] const RunSummary& summary() const { return summary_; }
    [[nodiscard]] const ScenarioConfig& config() const { return config_; }
    [[nodiscard]] int current_scan() const { return window_.end; }

    /// Turns track spawning on or off for subsequent scans.
    void set_spawning(bool enabled) { config_.tracker.spawn_tracks = enabled; }

    /// Adds a tentative track born at the window's last scan.
    void add_track(const init::TentativeTrack& t);

private:
    void append_scan(const std::vector<sim::ScanFrame>& frames);
    void drop_oldest();
    void spawn_from_unexplained();
    void forward_step();
    void manage_tracks();
    void persist(const WindowTrack& t, int w);

    double association_pass(bool forward_only);
    double heights_pass(int iteration, bool forward_only);
    double visibility_pass(bool forward_only);
    double kinematics_pass(int iteration, bool forward_only);

    assoc::SensorModel sensor_model(int s) const;
    std::vector<sim::ScanFrame> normalize_frames(const std::vector<sim::ScanFrame>& frames, int k) const;
    bool alive(const WindowTrack& t, int w) const { return window_.start + w >= t.birth; }

    ScenarioConfig config_;
    WindowState window_;
    std::vector<TargetTrack> store_;
    std::map<int, std::size_t> store_index_;
    std::vector<std::vector<Vec2>> heights_;
    RunSummary summary_;
    int next_id_ = 1;
    double gate_;
    double log_clutter_;
    bool finished_ = false;
};

struct TrackerResult {
    std::vector<TargetTrack> tracks;          ///< every track, confirmed or not
    std::vector<std::vector<Vec2>> heights;   ///< [s][k - 1]
    RunSummary summary;
};

/// Runs the tracker over frames grouped by scan (scans 1..n_scans).
[[nodiscard]] TrackerResult run_tracker(const ScenarioConfig& config,
                                        const std::vector<sim::ScanFrame>& frames, int n_scans);

/// Tracks that were confirmed at some scan.
[[nodiscard]] std::vector<TargetTrack> confirmed_tracks(const std::vector<TargetTrack>& tracks);

}  // namespace othr::fusion
