#pragma once

// File formats: CSV for frames, truth, tracks, heights and reports; JSON for
// run summaries and aggregated reports.

#include "othr/fusion.hpp"
#include "othr/metrics.hpp"
#include "othr/simulator.hpp"

#include <string>
#include <vector>

namespace othr::io {

/// Unreadable or unwritable file.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed file content (wrong header, bad number, inconsistent ids).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Path of the ionosonde file that accompanies a frames file.
[[nodiscard]] std::string ionosonde_path(const std::string& frames_path);

/// Writes frames.csv (k,s,r_km,rdot_kmps,a_rad,truth_target,truth_path) and the
/// companion ionosonde file. Labels may be empty; truth ids are 1-based, 0 = clutter.
void write_frames(const std::string& path, const std::vector<sim::ScanFrame>& frames,
                  const std::vector<sim::FrameTruth>& labels);

struct FrameFile {
    std::vector<sim::ScanFrame> frames;
    int n_sensors = 0;
    int n_scans = 0;
};

/// Reads a frames file; truth columns are ignored. Scans and sensors without
/// returns still get a frame when the ionosonde file lists them.
[[nodiscard]] FrameFile read_frames(const std::string& path);

void write_truth(const std::string& targets_path, const std::string& heights_path,
                 const sim::GroundTruth& truth);
[[nodiscard]] sim::GroundTruth read_truth(const std::string& targets_path, const std::string& heights_path);

/// Track rows (track_id,k,x_km,vx_kmps,y_km,vy_kmps,p_visible,confirmed_flag).
void write_tracks(const std::string& path, const std::vector<fusion::TargetTrack>& tracks);
[[nodiscard]] std::vector<fusion::TargetTrack> read_tracks(const std::string& path);

/// Estimated heights (k,s,hE_km,hF_km); `heights` is [s][k - 1].
void write_heights(const std::string& path, const std::vector<std::vector<Vec2>>& heights);
[[nodiscard]] std::vector<std::vector<Vec2>> read_heights(const std::string& path);

void write_summary(const std::string& path, const fusion::RunSummary& summary, int n_tracks_exported);

void write_report_json(const std::string& path, const metrics::MetricReport& report);
void write_report_csv(const std::string& path, const metrics::MetricReport& report);

/// One row per run plus an aggregate mean and std row.
void write_runs_csv(const std::string& path, const std::vector<metrics::RunRecord>& runs,
                    const metrics::Aggregate& agg);

[[nodiscard]] std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace othr::io
