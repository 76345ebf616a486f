#pragma once

// Ground-truth and sensor-data generation for a scenario.

#include "othr/geometry.hpp"
#include "othr/scenario.hpp"

#include <cstdint>
#include <vector>

namespace othr::sim {

/// One sensor's data at one scan, as seen by the tracker.
struct ScanFrame {
    int k = 1;       // scan index, 1-based
    int sensor = 0;  // 0-based sensor index
    std::vector<geometry::SlantMeasurement> returns;
    Vec2 ionosonde = Vec2::Zero();  // (hE, hF) reading in km
    bool has_ionosonde = true;
};

/// Origin labels of a frame's returns, kept apart from ScanFrame.
/// target/path are -1 for clutter.
struct FrameTruth {
    std::vector<int> target;
    std::vector<int> path;
};

struct TargetTruth {
    TargetSpec spec;
    std::vector<geometry::UtmState> states;  // scans birth..death
    /// Detection indicators, index ((k - birth) * n_sensors + s) * n_paths + path.
    std::vector<std::uint8_t> detected;

    [[nodiscard]] bool alive(int k) const { return k >= spec.birth && k <= spec.death; }
    [[nodiscard]] const geometry::UtmState& at(int k) const { return states.at(k - spec.birth); }
};

struct GroundTruth {
    std::vector<TargetTruth> targets;
    /// Layer heights per sensor per scan, heights[s][k - 1].
    std::vector<std::vector<Vec2>> heights;
};

struct SimulationOutput {
    GroundTruth truth;
    std::vector<ScanFrame> frames;       // ordered by (k, sensor)
    std::vector<FrameTruth> labels;      // parallel to frames
};

/// Runs the scenario with its configured seed. Throws ConfigError on an
/// invalid configuration.
[[nodiscard]] SimulationOutput simulate(const ScenarioConfig& config);

/// Keeps only the frames of the listed sensors, re-indexing them from 0.
[[nodiscard]] std::vector<ScanFrame> select_sensors(const std::vector<ScanFrame>& frames,
                                                    const std::vector<int>& sensors);

/// Restricts a scenario to a subset of its sensors.
[[nodiscard]] ScenarioConfig select_sensors(const ScenarioConfig& config,
                                            const std::vector<int>& sensors);

/// Same for ground truth heights.
[[nodiscard]] GroundTruth select_sensors(const GroundTruth& truth, const std::vector<int>& sensors);

}  // namespace othr::sim
