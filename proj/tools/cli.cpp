#include "cli.hpp"

#include "manifest.hpp"

#include "othr/io.hpp"
#include "othr/metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace othr::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;

struct Options {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out = ".";
    std::string sensors = "all";
    int window = 0;
    int threads = 1;
    std::string pd_list = "0.2,0.35,0.5,0.65,0.8";
    int runs = 1;
    std::string frames;
    std::string tracks;
    std::string truth;
    std::string heights;
};

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

ScenarioConfig load_config(const Options& o) {
    ScenarioConfig cfg = o.config.empty() ? default_scenario() : load_scenario(o.config);
    if (o.seed_given) cfg.seed = o.seed;
    if (o.window > 0) cfg.tracker.window = o.window;
    cfg.validate();
    return cfg;
}

std::vector<int> sensor_subset(const std::string& flag, int n_sensors) {
    if (flag == "all") {
        std::vector<int> all(n_sensors);
        for (int s = 0; s < n_sensors; ++s) all[s] = s;
        return all;
    }
    const int s = flag == "1" ? 0 : 1;
    if (s >= n_sensors) throw ConfigError("--sensors " + flag + " but the scenario has " +
                                          std::to_string(n_sensors) + " sensor(s)");
    return {s};
}

std::vector<double> parse_pd_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            const double v = std::stod(item);
            if (!(v > 0.0 && v <= 1.0)) throw std::out_of_range(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("bad detection probability '" + item + "' in --pd-list");
        }
    }
    if (out.empty()) throw ConfigError("--pd-list is empty");
    return out;
}

std::vector<std::string> config_inputs(const Options& o) {
    return o.config.empty() ? std::vector<std::string>{} : std::vector<std::string>{o.config};
}

int cmd_simulate(const Options& o) {
    const auto cfg = load_config(o);
    const auto out = sim::simulate(cfg);
    const std::string frames = join(o.out, "frames.csv");
    const std::string targets = join(o.out, "truth_targets.csv");
    const std::string heights = join(o.out, "truth_heights.csv");
    const std::string scenario = join(o.out, "scenario.json");
    io::write_frames(frames, out.frames, out.labels);
    io::write_truth(targets, heights, out.truth);
    io::write_text(scenario, serialize_scenario(cfg));
    write_manifest({"simulate", o.config.empty() ? "builtin" : o.config, cfg.seed, o.out, config_inputs(o),
                    {frames, io::ionosonde_path(frames), targets, heights, scenario}});
    return kExitOk;
}

int cmd_track(const Options& o) {
    auto cfg = load_config(o);
    const auto file = io::read_frames(o.frames);
    if (file.n_sensors > cfg.n_sensors())
        throw io::SchemaError("frames reference sensor " + std::to_string(file.n_sensors) +
                              " but the scenario has " + std::to_string(cfg.n_sensors()));
    const auto keep = sensor_subset(o.sensors, cfg.n_sensors());
    auto frames = file.frames;
    if (o.sensors != "all") {
        cfg = sim::select_sensors(cfg, keep);
        frames = sim::select_sensors(frames, keep);
    }
    const int n_scans = std::max(cfg.n_scans, file.n_scans);
    const auto result = fusion::run_tracker(cfg, frames, n_scans);
    const auto confirmed = fusion::confirmed_tracks(result.tracks);
    const std::string tracks = join(o.out, "tracks.csv");
    const std::string heights = join(o.out, "heights.csv");
    const std::string summary = join(o.out, "summary.json");
    io::write_tracks(tracks, confirmed);
    io::write_heights(heights, result.heights);
    io::write_summary(summary, result.summary, static_cast<int>(confirmed.size()));
    auto inputs = config_inputs(o);
    inputs.push_back(o.frames);
    if (fs::exists(io::ionosonde_path(o.frames))) inputs.push_back(io::ionosonde_path(o.frames));
    write_manifest({"track", o.config.empty() ? "builtin" : o.config, cfg.seed, o.out, inputs,
                    {tracks, heights, summary}});
    return kExitOk;
}

int cmd_evaluate(const Options& o) {
    const auto tracks = io::read_tracks(o.tracks);
    const std::string truth_heights = join(fs::path(o.truth).parent_path().string(), "truth_heights.csv");
    auto truth = io::read_truth(o.truth, truth_heights);
    std::vector<std::vector<Vec2>> heights;
    if (!o.heights.empty()) heights = io::read_heights(o.heights);
    if (o.sensors != "all") truth = sim::select_sensors(truth, sensor_subset(o.sensors, static_cast<int>(truth.heights.size())));
    if (!heights.empty() && heights.size() != truth.heights.size())
        throw io::SchemaError("estimated heights cover " + std::to_string(heights.size()) +
                              " sensor(s), truth covers " + std::to_string(truth.heights.size()));
    int n_scans = 0;
    for (const auto& t : truth.targets) n_scans = std::max(n_scans, t.spec.death);
    for (const auto& h : truth.heights) n_scans = std::max(n_scans, static_cast<int>(h.size()));
    for (const auto& t : tracks)
        if (t.last_scan() > n_scans && n_scans > 0)
            throw io::SchemaError("track " + std::to_string(t.id) + " extends past the truth scan range");
    double wall = 0.0;
    const std::string summary = join(fs::path(o.tracks).parent_path().string(), "summary.json");
    if (fs::exists(summary)) {
        const auto j = nlohmann::json::parse(io::read_text(summary), nullptr, false);
        if (j.is_object() && j.contains("wall_seconds")) wall = j["wall_seconds"].get<double>();
    }
    const auto assignment = metrics::assign_tracks(tracks, truth);
    const auto report = metrics::compute_report(assignment, tracks, truth, heights, wall, n_scans);
    const std::string json_path = join(o.out, "report.json");
    const std::string csv_path = join(o.out, "report.csv");
    io::write_report_json(json_path, report);
    io::write_report_csv(csv_path, report);
    std::vector<std::string> inputs{o.tracks, o.truth};
    if (fs::exists(truth_heights)) inputs.push_back(truth_heights);
    if (!o.heights.empty()) inputs.push_back(o.heights);
    write_manifest({"evaluate", "", 0, o.out, inputs, {json_path, csv_path}});
    return kExitOk;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(10);
    ss << v;
    return ss.str();
}

int cmd_sweep(const Options& o) {
    const auto base = load_config(o);
    const auto levels = parse_pd_list(o.pd_list);
    if (o.runs < 1) throw ConfigError("--runs must be at least 1");
    std::vector<metrics::Mode> modes{metrics::Mode::Network};
    if (base.n_sensors() >= 1) modes.push_back(metrics::Mode::Sensor1);
    if (base.n_sensors() >= 2) modes.push_back(metrics::Mode::Sensor2);

    const std::string sweep_path = join(o.out, "sweep.csv");
    std::vector<std::string> outputs{sweep_path};
    std::string table = "mode,pd,metric,mean,std\n";
    io::write_text(sweep_path, table);
    for (const auto mode : modes) {
        for (double pd : levels) {
            ScenarioConfig cfg = base;
            cfg.set_detection_probability(pd);
            const auto mc = metrics::monte_carlo(cfg, o.runs, base.seed, mode, o.threads);
            const auto mean = mc.summary.mean.values();
            const auto sd = mc.summary.stddev.values();
            for (std::size_t i = 0; i < mean.size(); ++i)
                table += metrics::mode_name(mode) + "," + fmt(pd) + "," + metrics::MetricReport::names()[i] +
                         "," + fmt(mean[i]) + "," + fmt(sd[i]) + "\n";
            // Flush after every level so an interrupted sweep keeps its results.
            io::write_text(sweep_path, table);
            const std::string runs_path =
                join(o.out, "runs_" + metrics::mode_name(mode) + "_pd" + fmt(pd) + ".csv");
            io::write_runs_csv(runs_path, mc.runs, mc.summary);
            outputs.push_back(runs_path);
            for (const auto& r : mc.runs)
                if (!r.ok) std::cerr << "run " << r.run << " (seed " << r.seed << ") failed: " << r.error << "\n";
        }
    }
    write_manifest({"sweep", o.config.empty() ? "builtin" : o.config, base.seed, o.out, config_inputs(o), outputs});
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Multipath OTHR network tracker: simulate, track, evaluate, sweep"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "scenario JSON (default: built-in two-site scenario)");
        sub->add_option("--out", o.out, "output directory");
    };
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& s) { o.seed = s; o.seed_given = true; }, "random seed");
    };

    auto* simulate = app.add_subcommand("simulate", "simulate frames and ground truth");
    add_common(simulate);
    add_seed(simulate);

    auto* track = app.add_subcommand("track", "run the tracker on a frames file");
    add_common(track);
    add_seed(track);
    track->add_option("--frames", o.frames, "frames CSV")->required();
    track->add_option("--sensors", o.sensors, "sensors to use")->check(CLI::IsMember({"all", "1", "2"}));
    track->add_option("--window", o.window, "sliding window length")->check(CLI::PositiveNumber);

    auto* evaluate = app.add_subcommand("evaluate", "score a track file against ground truth");
    evaluate->add_option("--out", o.out, "output directory");
    evaluate->add_option("--tracks", o.tracks, "tracks CSV")->required();
    evaluate->add_option("--truth", o.truth, "truth_targets CSV")->required();
    evaluate->add_option("--heights", o.heights, "estimated heights CSV");
    evaluate->add_option("--sensors", o.sensors, "sensors the tracks were produced with")
        ->check(CLI::IsMember({"all", "1", "2"}));

    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over detection probabilities");
    add_common(sweep);
    add_seed(sweep);
    sweep->add_option("--pd-list", o.pd_list, "comma-separated detection probabilities");
    sweep->add_option("--runs", o.runs, "runs per level")->check(CLI::PositiveNumber);
    sweep->add_option("--threads", o.threads, "worker threads (1 = deterministic serial path)")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--window", o.window, "sliding window length")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*simulate) return cmd_simulate(o);
        if (*track) return cmd_track(o);
        if (*evaluate) return cmd_evaluate(o);
        if (*sweep) return cmd_sweep(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const io::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const io::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitConfig;
}

}  // namespace othr::cli
