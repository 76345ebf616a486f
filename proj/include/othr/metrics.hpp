#pragma once

// Evaluation of a track store against ground truth: track-to-target
// assignment, the summary metrics, OSPA, and seeded Monte-Carlo batches.

#include "othr/fusion.hpp"
#include "othr/simulator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace othr::metrics {

struct AssignmentOptions {
    double max_mean_offset = 10.0;  ///< km, applied to x and y separately
    int min_length = 10;            ///< confirmed scans a track needs to be considered
};

/// Per-track outcome: the target index it covers, or one of the codes below.
struct Assignment {
    static constexpr int kFalse = -1;    ///< long enough but matches no target
    static constexpr int kIgnored = -2;  ///< shorter than min_length, or a shorter duplicate
    std::vector<int> target_of_track;    ///< parallel to the track list
    std::vector<int> track_of_target;    ///< -1 when the target has no track
};

/// Scans at which a track is flagged confirmed.
[[nodiscard]] std::vector<int> confirmed_scans(const fusion::TargetTrack& track);

[[nodiscard]] Assignment assign_tracks(const std::vector<fusion::TargetTrack>& tracks,
                                       const sim::GroundTruth& truth,
                                       const AssignmentOptions& options = {});

struct MetricReport {
    double ntt = 0.0;    ///< targets with a valid track
    double tpd = 0.0;    ///< mean covered fraction of target lifetimes
    double nft = 0.0;    ///< false tracks
    double ctl = 0.0;    ///< mean scans from target birth to confirmation; NaN without true tracks
    double aeep = 0.0;   ///< km; NaN without true tracks
    double aees = 0.0;   ///< km/s; NaN without true tracks
    double aeeh = 0.0;   ///< km
    double mospa = 0.0;  ///< km
    double tet = 0.0;    ///< s

    [[nodiscard]] static const std::vector<std::string>& names();
    [[nodiscard]] std::vector<double> values() const;
    [[nodiscard]] static MetricReport from_values(const std::vector<double>& v);
};

struct OspaOptions {
    double cutoff = 10.0;
    double order = 2.0;
};

/// OSPA distance between two finite point sets.
[[nodiscard]] double ospa(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                          const OspaOptions& options = {});

/// Computes every metric. `heights` is [s][k - 1] as returned by the tracker;
/// it is compared with truth.heights over the common scans.
[[nodiscard]] MetricReport compute_report(const Assignment& assignment,
                                          const std::vector<fusion::TargetTrack>& tracks,
                                          const sim::GroundTruth& truth,
                                          const std::vector<std::vector<Vec2>>& heights,
                                          double wall_seconds, int n_scans,
                                          const OspaOptions& ospa_options = {});

enum class Mode { Network, Sensor1, Sensor2 };

[[nodiscard]] std::string mode_name(Mode mode);

struct RunRecord {
    int run = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    MetricReport report;
};

struct Aggregate {
    MetricReport mean;
    MetricReport stddev;  ///< population standard deviation over successful runs
    /// Undefined (NaN) per-run values are left out of both statistics.
    int n_ok = 0;
    int n_failed = 0;
};

[[nodiscard]] Aggregate aggregate(const std::vector<RunRecord>& runs);

struct MonteCarloResult {
    std::vector<RunRecord> runs;
    Aggregate summary;
};

/// Simulates and tracks `n_runs` scenarios with seeds base_seed + i. Failures
/// of individual runs are recorded, not thrown. `threads` > 1 distributes runs
/// over worker threads; results do not depend on the thread count.
[[nodiscard]] MonteCarloResult monte_carlo(const ScenarioConfig& config, int n_runs,
                                           std::uint64_t base_seed, Mode mode = Mode::Network,
                                           int threads = 1);

/// Runs one seeded scenario in the given mode and evaluates it.
[[nodiscard]] MetricReport evaluate_run(const ScenarioConfig& config, Mode mode);

}  // namespace othr::metrics
