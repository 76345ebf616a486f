#pragma once

// Track initiation from multipath measurement clusters: per-sensor
// clustering, path-hypothesis search, coordinate inversion, and cross-sensor
// association and fusion of the resulting local tracks.

#include "othr/geometry.hpp"
#include "othr/kinematics.hpp"
#include "othr/scenario.hpp"

#include <vector>

namespace othr::init {

struct TentativeTrack {
    kin::GaussianState state;
    double p_visible = 0.5;
    std::vector<int> sensors;                      ///< contributing sensors
    std::vector<std::pair<int, int>> support;      ///< (sensor, measurement index)
    int birth = 1;
};

/// Greedy seed-and-grow clustering. Seeds are taken in increasing range
/// order; a candidate joins when it is within `rho` of every member in each
/// component. Clusters of size one are dropped and sizes are capped at
/// `max_size`. Returned indices refer to `meas`.
[[nodiscard]] std::vector<std::vector<int>> cluster_measurements(
    const std::vector<geometry::SlantMeasurement>& meas, const Vec3& rho, int max_size);

struct PathHypothesis {
    Vec2 position = Vec2::Zero();  ///< fused inverted position
    Mat2 cov = Mat2::Identity();   ///< covariance of the fused position
    std::vector<int> labels;       ///< path index per measurement
    double score = 0.0;            ///< mean pairwise squared Mahalanobis distance
    int n_hypotheses = 0;          ///< injective labelings enumerated
};

/// Number of injective measurement-to-path labelings, n_paths! / (n_paths - n)!.
[[nodiscard]] long long count_hypotheses(int n_paths, int n);

/// Enumerates every injective labeling, inverts each measurement under its
/// labelled heights and returns the most self-consistent labeling. Throws
/// AllHypothesesInfeasible when no labeling inverts.
[[nodiscard]] PathHypothesis best_path_hypothesis(
    const std::vector<geometry::SlantMeasurement>& subset, const geometry::SiteConfig& site,
    const std::vector<PathLayers>& paths, const Vec2& layers, const Mat3& meas_noise,
    const Mat2& layer_cov);

/// Position-only tentative track with zero velocity.
[[nodiscard]] TentativeTrack init_local_track(const PathHypothesis& hyp, int n_paths, int sensor,
                                              int k, double velocity_variance);

/// Two-sensor track-to-track association (optimal 2-D assignment on the
/// position Mahalanobis distance, pairs at or above gamma forbidden) and
/// covariance-weighted fusion of matched pairs.
[[nodiscard]] std::vector<TentativeTrack> associate_and_fuse(const std::vector<TentativeTrack>& a,
                                                             const std::vector<TentativeTrack>& b,
                                                             double gamma);

/// Full initiation pipeline for one scan. `candidates[s]` flags the
/// measurements of sensor s that may seed tracks.
[[nodiscard]] std::vector<TentativeTrack> spawn_tracks(
    const ScenarioConfig& config, int k,
    const std::vector<const std::vector<geometry::SlantMeasurement>*>& meas,
    const std::vector<std::vector<bool>>& candidates, const std::vector<Vec2>& layers,
    const std::vector<Mat2>& layer_cov);

}  // namespace othr::init
