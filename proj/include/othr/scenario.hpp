#pragma once

#include "othr/common.hpp"
#include "othr/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace othr {

/// Slant-coordinate validation region of one sensor.
struct RegionBounds {
    double r_min = 1000.0;   // km
    double r_max = 3000.0;   // km
    double a_min = -0.3;     // rad
    double a_max = 0.3;      // rad
    double rdot_min = -0.3;  // km/s
    double rdot_max = 0.3;   // km/s

    [[nodiscard]] bool contains(const geometry::SlantMeasurement& m) const {
        return m.r >= r_min && m.r <= r_max && m.a >= a_min && m.a <= a_max &&
               m.rdot >= rdot_min && m.rdot <= rdot_max;
    }
};

/// A propagation path as a (transmit layer, receive layer) pair; layer 0 is E,
/// layer 1 is F.
struct PathLayers {
    int transmit = 0;
    int receive = 0;
};

/// Path heights assembled from a per-sensor layer-height vector (hE, hF).
[[nodiscard]] inline geometry::PathHeights path_heights(const Vec2& layers, const PathLayers& p) {
    return {layers(p.transmit), layers(p.receive)};
}

/// Selection matrix mapping layer heights (hE, hF) to path heights (ht, hr).
[[nodiscard]] inline Mat2 layer_selection(const PathLayers& p) {
    Mat2 m = Mat2::Zero();
    m(0, p.transmit) = 1.0;
    m(1, p.receive) = 1.0;
    return m;
}

struct TargetSpec {
    geometry::UtmState initial;  // state at the birth scan
    int birth = 1;               // first scan alive (1-based, inclusive)
    int death = 1;               // last scan alive (inclusive)
};

/// Inference-side parameters of the message-passing tracker.
struct TrackerParams {
    int window = 3;                  // sliding window length (scans)
    int max_outer_iterations = 4;    // cap on outer iterations per window
    double outer_tolerance = 1e-5;   // belief-change threshold
    double lbp_tolerance = 1e-6;
    int lbp_max_iterations = 1000;
    double lbp_damping = 0.5;
    double gate_probability = 0.971;
    double confirm_threshold = 0.9;  // delta_c
    int delete_streak = 3;
    double visibility_stay_visible = 0.85;    // Pr(1|1)
    double visibility_stay_invisible = 0.85;  // Pr(0|0)
    Vec3 cluster_threshold{80.0, 0.01, 0.1};  // (km, km/s, rad)
    Vec4 initial_cov_diag{25.0, 0.04, 25.0, 0.04};
    double track_assoc_probability = 0.99;    // chi-square quantile for gamma (2 dof)
    double synthetic_floor = 1e-9;
    double feedback_skip_miss = 0.99;
    bool spawn_tracks = true;
    bool height_feedback = true;
};

struct ScenarioConfig {
    std::vector<geometry::SiteConfig> sites;
    std::vector<PathLayers> paths;
    std::vector<Vec2> nominal_layers;          // per sensor (hE, hF) km
    double period = 15.0;                      // s
    RegionBounds region;
    double expected_clutter = 21.0;            // per sensor per scan
    std::vector<std::vector<double>> p_d;      // [sensor][path]
    double epsilon = 0.1;                      // detection probability when invisible
    Mat3 meas_noise = Mat3::Identity();        // R_tau
    Mat2 iono_noise = Mat2::Identity();        // W
    Mat4 process_noise = Mat4::Identity();     // Q
    Mat2 height_noise = Mat2::Identity();      // per-scan height process noise
    Mat2 height_transition = Mat2::Identity(); // B
    Mat2 iono_matrix = Mat2::Identity();       // C
    std::vector<TargetSpec> targets;
    int n_scans = 100;
    std::uint64_t seed = 1;
    double max_speed = 1.0;                    // km/s
    TrackerParams tracker;

    [[nodiscard]] int n_sensors() const { return static_cast<int>(sites.size()); }
    [[nodiscard]] int n_paths() const { return static_cast<int>(paths.size()); }
    /// Constant-velocity transition for the configured period.
    [[nodiscard]] Mat4 transition() const;
    /// Visibility transition, column-stochastic: T(to, from).
    [[nodiscard]] Mat2 visibility_transition() const;
    /// Sets every per-path detection probability to `pd`.
    void set_detection_probability(double pd);
    /// Throws ConfigError on any violated invariant.
    void validate() const;
};

/// V = range extent * azimuth extent * range-rate extent.
[[nodiscard]] double region_volume(const RegionBounds& region);
[[nodiscard]] double region_volume(const ScenarioConfig& config);

/// Clutter spatial density used by the association prior.
[[nodiscard]] inline double clutter_density(const ScenarioConfig& config) {
    return config.expected_clutter / region_volume(config);
}

/// Two-site, four-path, ten-target default scenario.
[[nodiscard]] ScenarioConfig default_scenario();

/// Equirectangular projection of geodetic coordinates about an origin (km).
[[nodiscard]] Vec2 project_geodetic(double lon_deg, double lat_deg, double lon0_deg,
                                    double lat0_deg, double lat_ref_deg);

/// Parses a JSON scenario (comments allowed). Throws ConfigError.
[[nodiscard]] ScenarioConfig parse_scenario(const std::string& text);
[[nodiscard]] ScenarioConfig load_scenario(const std::string& path);
[[nodiscard]] std::string serialize_scenario(const ScenarioConfig& config);

/// Chi-square quantile used for gating.
[[nodiscard]] double chi_square_quantile(double probability, int dof);

}  // namespace othr
