#include "othr/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace othr::io {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

void close_out(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write failed for " + path);
}

/// Splits a CSV file into rows of fields, checking the header.
std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> got;
    {
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) got.push_back(f);
    }
    if (got.size() < header.size() || !std::equal(header.begin(), header.end(), got.begin()))
        throw SchemaError(path + ": unexpected header '" + line + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() < header.size()) throw SchemaError(path + ": short row '" + line + "'");
        rows.push_back(std::move(fields));
    }
    return rows;
}

double to_double(const std::string& s, const std::string& path) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw SchemaError(path + ": not a number '" + s + "'");
    }
}

int to_int(const std::string& s, const std::string& path) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw SchemaError(path + ": not an integer '" + s + "'");
    }
}

const std::vector<std::string> kFrameHeader{"k", "s", "r_km", "rdot_kmps", "a_rad"};
const std::vector<std::string> kIonoHeader{"k", "s", "hE_km", "hF_km"};
const std::vector<std::string> kTruthHeader{"target_id", "k", "x_km", "vx_kmps", "y_km", "vy_kmps"};
const std::vector<std::string> kTrackHeader{"track_id", "k",        "x_km",      "vx_kmps",
                                            "y_km",     "vy_kmps",  "p_visible", "confirmed_flag"};

}  // namespace

std::string ionosonde_path(const std::string& frames_path) {
    return (fs::path(frames_path).parent_path() / "ionosonde.csv").string();
}

void write_frames(const std::string& path, const std::vector<sim::ScanFrame>& frames,
                  const std::vector<sim::FrameTruth>& labels) {
    auto out = open_out(path);
    out << "k,s,r_km,rdot_kmps,a_rad,truth_target,truth_path\n";
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto& fr = frames[f];
        for (std::size_t j = 0; j < fr.returns.size(); ++j) {
            int target = 0, path_id = 0;
            if (f < labels.size() && j < labels[f].target.size()) {
                target = labels[f].target[j] + 1;
                path_id = labels[f].path[j] + 1;
            }
            const auto& m = fr.returns[j];
            out << fr.k << ',' << fr.sensor + 1 << ',' << fmt(m.r) << ',' << fmt(m.rdot) << ','
                << fmt(m.a) << ',' << target << ',' << path_id << '\n';
        }
    }
    close_out(out, path);

    const std::string ipath = ionosonde_path(path);
    auto iout = open_out(ipath);
    iout << "k,s,hE_km,hF_km\n";
    for (const auto& fr : frames) {
        if (!fr.has_ionosonde) continue;
        iout << fr.k << ',' << fr.sensor + 1 << ',' << fmt(fr.ionosonde(0)) << ','
             << fmt(fr.ionosonde(1)) << '\n';
    }
    close_out(iout, ipath);
}

FrameFile read_frames(const std::string& path) {
    std::map<std::pair<int, int>, sim::ScanFrame> by_key;
    auto frame_at = [&](int k, int s) -> sim::ScanFrame& {
        auto [it, inserted] = by_key.try_emplace({k, s});
        if (inserted) {
            it->second.k = k;
            it->second.sensor = s;
            it->second.has_ionosonde = false;
        }
        return it->second;
    };
    for (const auto& row : read_csv(path, kFrameHeader)) {
        const int k = to_int(row[0], path);
        const int s = to_int(row[1], path);
        if (k < 1 || s < 1) throw SchemaError(path + ": scan and sensor ids start at 1");
        geometry::SlantMeasurement m;
        m.r = to_double(row[2], path);
        m.rdot = to_double(row[3], path);
        m.a = to_double(row[4], path);
        frame_at(k, s - 1).returns.push_back(m);
    }
    const std::string ipath = ionosonde_path(path);
    if (fs::exists(ipath)) {
        for (const auto& row : read_csv(ipath, kIonoHeader)) {
            const int k = to_int(row[0], ipath);
            const int s = to_int(row[1], ipath);
            if (k < 1 || s < 1) throw SchemaError(ipath + ": scan and sensor ids start at 1");
            auto& fr = frame_at(k, s - 1);
            fr.ionosonde = Vec2(to_double(row[2], ipath), to_double(row[3], ipath));
            fr.has_ionosonde = true;
        }
    }
    FrameFile out;
    for (auto& [key, fr] : by_key) {
        out.n_scans = std::max(out.n_scans, key.first);
        out.n_sensors = std::max(out.n_sensors, key.second + 1);
        out.frames.push_back(std::move(fr));
    }
    return out;
}

void write_truth(const std::string& targets_path, const std::string& heights_path,
                 const sim::GroundTruth& truth) {
    auto out = open_out(targets_path);
    out << "target_id,k,x_km,vx_kmps,y_km,vy_kmps\n";
    for (std::size_t g = 0; g < truth.targets.size(); ++g) {
        const auto& t = truth.targets[g];
        for (int k = t.spec.birth; k <= t.spec.death; ++k) {
            const auto& x = t.at(k);
            out << g + 1 << ',' << k << ',' << fmt(x.x) << ',' << fmt(x.vx) << ',' << fmt(x.y) << ','
                << fmt(x.vy) << '\n';
        }
    }
    close_out(out, targets_path);
    write_heights(heights_path, truth.heights);
}

sim::GroundTruth read_truth(const std::string& targets_path, const std::string& heights_path) {
    sim::GroundTruth truth;
    std::map<int, sim::TargetTruth> by_id;
    for (const auto& row : read_csv(targets_path, kTruthHeader)) {
        const int id = to_int(row[0], targets_path);
        const int k = to_int(row[1], targets_path);
        geometry::UtmState x{to_double(row[2], targets_path), to_double(row[3], targets_path),
                             to_double(row[4], targets_path), to_double(row[5], targets_path)};
        auto [it, inserted] = by_id.try_emplace(id);
        auto& t = it->second;
        if (inserted) {
            t.spec.birth = k;
            t.spec.initial = x;
        } else if (k != t.spec.birth + static_cast<int>(t.states.size())) {
            throw SchemaError(targets_path + ": target rows must be contiguous in k");
        }
        t.states.push_back(x);
        t.spec.death = k;
    }
    for (auto& [id, t] : by_id) truth.targets.push_back(std::move(t));
    if (!heights_path.empty() && fs::exists(heights_path)) truth.heights = read_heights(heights_path);
    return truth;
}

void write_tracks(const std::string& path, const std::vector<fusion::TargetTrack>& tracks) {
    auto out = open_out(path);
    out << "track_id,k,x_km,vx_kmps,y_km,vy_kmps,p_visible,confirmed_flag\n";
    for (const auto& t : tracks) {
        for (int k = t.birth; k <= t.last_scan(); ++k) {
            const Vec4& m = t.states[k - t.birth].mean;
            out << t.id << ',' << k << ',' << fmt(m(0)) << ',' << fmt(m(1)) << ',' << fmt(m(2)) << ','
                << fmt(m(3)) << ',' << fmt(t.p_visible[k - t.birth]) << ',' << (t.confirmed_at(k) ? 1 : 0)
                << '\n';
        }
    }
    close_out(out, path);
}

std::vector<fusion::TargetTrack> read_tracks(const std::string& path) {
    std::map<int, fusion::TargetTrack> by_id;
    for (const auto& row : read_csv(path, kTrackHeader)) {
        const int id = to_int(row[0], path);
        const int k = to_int(row[1], path);
        auto [it, inserted] = by_id.try_emplace(id);
        auto& t = it->second;
        if (inserted) {
            t.id = id;
            t.birth = k;
        } else if (k != t.last_scan() + 1) {
            throw SchemaError(path + ": track rows must be contiguous in k");
        }
        kin::GaussianState st;
        st.mean = Vec4(to_double(row[2], path), to_double(row[3], path), to_double(row[4], path),
                       to_double(row[5], path));
        t.states.push_back(st);
        t.p_visible.push_back(to_double(row[6], path));
        if (to_int(row[7], path) != 0) {
            if (t.confirm_scan < 0) t.confirm_scan = k;
            t.confirmed_until = k;
        }
    }
    std::vector<fusion::TargetTrack> out;
    for (auto& [id, t] : by_id) out.push_back(std::move(t));
    return out;
}

void write_heights(const std::string& path, const std::vector<std::vector<Vec2>>& heights) {
    auto out = open_out(path);
    out << "k,s,hE_km,hF_km\n";
    std::size_t n = 0;
    for (const auto& h : heights) n = std::max(n, h.size());
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t s = 0; s < heights.size(); ++s)
            if (k < heights[s].size())
                out << k + 1 << ',' << s + 1 << ',' << fmt(heights[s][k](0)) << ','
                    << fmt(heights[s][k](1)) << '\n';
    close_out(out, path);
}

std::vector<std::vector<Vec2>> read_heights(const std::string& path) {
    std::vector<std::vector<Vec2>> out;
    for (const auto& row : read_csv(path, kIonoHeader)) {
        const int k = to_int(row[0], path);
        const int s = to_int(row[1], path);
        if (k < 1 || s < 1) throw SchemaError(path + ": scan and sensor ids start at 1");
        if (static_cast<int>(out.size()) < s) out.resize(s);
        auto& seq = out[s - 1];
        if (static_cast<int>(seq.size()) != k - 1)
            throw SchemaError(path + ": height rows must be contiguous in k per sensor");
        seq.emplace_back(to_double(row[2], path), to_double(row[3], path));
    }
    return out;
}

void write_summary(const std::string& path, const fusion::RunSummary& summary, int n_tracks_exported) {
    nlohmann::ordered_json j;
    j["wall_seconds"] = summary.wall_seconds;
    j["tracks_created"] = summary.tracks_created;
    j["tracks_confirmed"] = summary.tracks_confirmed;
    j["tracks_exported"] = n_tracks_exported;
    j["frozen_events"] = summary.frozen_events;
    auto windows = nlohmann::ordered_json::array();
    for (const auto& w : summary.windows)
        windows.push_back({{"k", w.k},
                           {"iterations", w.iterations},
                           {"converged", w.converged},
                           {"change", std::isfinite(w.change) ? w.change : -1.0},
                           {"n_tracks", w.n_tracks}});
    j["windows"] = windows;
    write_text(path, j.dump(2) + "\n");
}

void write_report_json(const std::string& path, const metrics::MetricReport& report) {
    nlohmann::ordered_json j;
    const auto v = report.values();
    for (std::size_t i = 0; i < v.size(); ++i) j[metrics::MetricReport::names()[i]] = v[i];
    write_text(path, j.dump(2) + "\n");
}

void write_report_csv(const std::string& path, const metrics::MetricReport& report) {
    auto out = open_out(path);
    out << "metric,value\n";
    const auto v = report.values();
    for (std::size_t i = 0; i < v.size(); ++i) out << metrics::MetricReport::names()[i] << ',' << fmt(v[i]) << '\n';
    close_out(out, path);
}

void write_runs_csv(const std::string& path, const std::vector<metrics::RunRecord>& runs,
                    const metrics::Aggregate& agg) {
    auto out = open_out(path);
    out << "row,seed,ok";
    for (const auto& n : metrics::MetricReport::names()) out << ',' << n;
    out << '\n';
    for (const auto& r : runs) {
        out << "run" << r.run << ',' << r.seed << ',' << (r.ok ? 1 : 0);
        for (double v : r.report.values()) out << ',' << fmt(v);
        out << '\n';
    }
    out << "mean,," << agg.n_ok;
    for (double v : agg.mean.values()) out << ',' << fmt(v);
    out << "\nstd,," << agg.n_ok;
    for (double v : agg.stddev.values()) out << ',' << fmt(v);
    out << '\n';
    close_out(out, path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    close_out(out, path);
}

}  // namespace othr::io
