#pragma once

// Multipath data association for one sensor and one scan: likelihood table
// construction with gating, loopy belief propagation over the one-to-one
// frame constraints, an exhaustive enumeration oracle, and synthetic
// measurements built from the association marginals.

#include "othr/geometry.hpp"
#include "othr/scenario.hpp"

#include <limits>
#include <vector>

namespace othr::assoc {

inline constexpr double kLogFloor = -700.0;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Rows are (target, path) pairs with index i * n_paths + tau; columns are
/// measurements.
struct AssociationProblem {
    int n_targets = 0;
    int n_meas = 0;
    int n_paths = 0;
    std::vector<double> loglik;      ///< [row * n_meas + j]; -inf marks a gated-out pair
    std::vector<double> log_detect;  ///< [row], expected ln P_d under the visibility belief
    std::vector<double> log_miss;    ///< [row], expected ln(1 - P_d)
    double log_clutter = 0.0;        ///< log weight of one clutter measurement

    [[nodiscard]] int n_rows() const { return n_targets * n_paths; }
    [[nodiscard]] double& ll(int row, int j) { return loglik[static_cast<std::size_t>(row) * n_meas + j]; }
    [[nodiscard]] double ll(int row, int j) const {
        return loglik[static_cast<std::size_t>(row) * n_meas + j];
    }
    /// Allocates an all-gated problem with neutral prior weights.
    static AssociationProblem empty(int n_targets, int n_meas, int n_paths);
    /// Throws std::invalid_argument on inconsistent sizes or NaN entries.
    void check() const;
};

struct AssociationBelief {
    int n_targets = 0;
    int n_meas = 0;
    int n_paths = 0;
    std::vector<double> assoc;    ///< [row * n_meas + j]
    std::vector<double> miss;     ///< [row]
    std::vector<double> clutter;  ///< [j]
    int iterations = 0;
    bool converged = true;

    [[nodiscard]] double a(int row, int j) const {
        return assoc[static_cast<std::size_t>(row) * n_meas + j];
    }
    [[nodiscard]] double& a(int row, int j) { return assoc[static_cast<std::size_t>(row) * n_meas + j]; }
};

/// Predicted target belief seen by the association step.
struct TargetView {
    Vec4 mean;
    Mat4 cov;
    double p_visible = 0.5;
};

/// Height belief of one sensor.
struct HeightView {
    Vec2 mean;
    Mat2 cov;
};

/// Sensor-level constants needed to build a problem.
struct SensorModel {
    geometry::SiteConfig site;
    std::vector<PathLayers> paths;
    std::vector<double> p_d;  ///< per path
    double epsilon = 0.1;
    Mat3 meas_noise = Mat3::Identity();
    double log_clutter = 0.0;
    double gate_threshold = 8.947;
};

/// Predicted measurement, its Jacobians and the gating covariance of one
/// (target, path) row.
struct RowPrediction {
    bool valid = false;
    Vec3 h = Vec3::Zero();
    Mat34 jx = Mat34::Zero();
    Mat32 ju = Mat32::Zero();  ///< with respect to the layer heights (hE, hF)
    Mat3 cov = Mat3::Identity();
};

[[nodiscard]] RowPrediction predict_row(const TargetView& target, const HeightView& heights,
                                        const SensorModel& sensor, int path);

/// Builds the likelihood table with R + Jx P Jx' + Ju Sigma Ju' and an
/// ellipsoidal gate.
[[nodiscard]] AssociationProblem build_problem(const std::vector<TargetView>& targets,
                                               const HeightView& heights,
                                               const std::vector<geometry::SlantMeasurement>& meas,
                                               const SensorModel& sensor);

/// Marks measurements outside every (target, path) gate of a problem.
[[nodiscard]] std::vector<bool> unexplained(const AssociationProblem& problem);

struct LbpOptions {
    int max_iterations = 1000;
    double tolerance = 1e-6;
    double damping = 0.5;
};

[[nodiscard]] AssociationBelief run_lbp(const AssociationProblem& problem,
                                        const LbpOptions& options = {});

/// Exact marginals by enumerating every feasible joint event. Throws TooLarge
/// when more than `max_events` events exist.
[[nodiscard]] AssociationBelief brute_force_marginals(const AssociationProblem& problem,
                                                      long long max_events = 1'000'000);

/// Synthetic measurement for one (target, path) row.
struct Synthetic {
    int row = 0;
    Vec3 y = Vec3::Zero();
    double weight = 0.0;  ///< 1 - miss probability
};

/// Builds synthetic measurements for every row whose detection weight
/// exceeds `floor`. Azimuths are averaged on the circle.
[[nodiscard]] std::vector<Synthetic> synthetic_measurements(
    const AssociationBelief& belief, const std::vector<geometry::SlantMeasurement>& meas,
    double floor = 1e-9);

/// Expected ln P_d and ln(1 - P_d) under a visibility probability.
[[nodiscard]] std::pair<double, double> expected_log_detection(double p_visible, double p_d,
                                                               double epsilon);

}  // namespace othr::assoc
