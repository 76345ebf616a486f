#include "othr/scenario.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace othr {

using nlohmann::json;

Mat4 ScenarioConfig::transition() const {
    Mat4 f = Mat4::Identity();
    f(0, 1) = period;
    f(2, 3) = period;
    return f;
}

Mat2 ScenarioConfig::visibility_transition() const {
    const double p11 = tracker.visibility_stay_visible;
    const double p00 = tracker.visibility_stay_invisible;
    Mat2 t;
    // Column = previous state, row = next state; index 0 is invisible.
    t << p00, 1.0 - p11,
        1.0 - p00, p11;
    return t;
}

void ScenarioConfig::set_detection_probability(double pd) {
    p_d.assign(sites.size(), std::vector<double>(paths.size(), pd));
}

namespace {

bool is_pd(const Eigen::MatrixXd& m) {
    if (!m.isApprox(m.transpose(), 1e-12)) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    return llt.info() == Eigen::Success;
}

void check(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

void ScenarioConfig::validate() const {
    check(!sites.empty(), "at least one sensor site is required");
    check(paths.size() == 4, "two ionospheric layers require exactly four propagation paths");
    std::set<std::pair<int, int>> seen;
    for (const auto& p : paths) {
        check(p.transmit >= 0 && p.transmit <= 1 && p.receive >= 0 && p.receive <= 1,
              "path layer index out of range");
        check(seen.insert({p.transmit, p.receive}).second, "duplicate propagation path");
    }
    check(nominal_layers.size() == sites.size(), "nominal layer heights needed per sensor");
    for (const auto& h : nominal_layers) {
        for (int l = 0; l < 2; ++l) {
            check(h(l) >= geometry::kMinHeight && h(l) <= geometry::kMaxHeight,
                  "nominal layer height outside [50, 400] km");
        }
    }
    for (const auto& s : sites) check(s.d0 >= 0.0, "transmitter distance d0 must be >= 0");
    check(period > 0.0, "sampling period must be positive");
    check(region.r_max > region.r_min && region.a_max > region.a_min &&
              region.rdot_max > region.rdot_min,
          "region bounds must be strictly ordered");
    check(expected_clutter >= 0.0, "expected clutter must be non-negative");
    check(p_d.size() == sites.size(), "detection probabilities needed per sensor");
    for (const auto& row : p_d) {
        check(row.size() == paths.size(), "detection probabilities needed per path");
        for (double pd : row) {
            check(pd > 0.0 && pd <= 1.0, "detection probability must lie in (0, 1]");
            check(epsilon > 0.0 && epsilon < pd, "epsilon must lie in (0, p_d)");
        }
    }
    check(is_pd(meas_noise), "measurement noise covariance must be positive definite");
    check(is_pd(iono_noise), "ionosonde noise covariance must be positive definite");
    check(is_pd(process_noise), "process noise covariance must be positive definite");
    check(is_pd(height_noise), "height process noise covariance must be positive definite");
    check(n_scans >= 1, "n_scans must be >= 1");
    for (const auto& t : targets) {
        check(t.birth >= 1 && t.birth < t.death && t.death <= n_scans,
              "target lifetime must satisfy 1 <= birth < death <= n_scans");
        check(std::isfinite(t.initial.x) && std::isfinite(t.initial.y) &&
                  std::isfinite(t.initial.vx) && std::isfinite(t.initial.vy),
              "target state must be finite");
        check(t.initial.speed() <= max_speed, "target speed exceeds the configured maximum");
    }
    const auto& tp = tracker;
    check(tp.window >= 1, "window length must be >= 1");
    check(tp.max_outer_iterations >= 1, "outer iteration cap must be >= 1");
    check(tp.gate_probability > 0.0 && tp.gate_probability < 1.0, "gate probability in (0,1)");
    check(tp.lbp_damping >= 0.0 && tp.lbp_damping < 1.0, "damping must lie in [0, 1)");
    check(tp.confirm_threshold > 0.0 && tp.confirm_threshold < 1.0, "delta_c in (0,1)");
    check(tp.visibility_stay_visible > 0.0 && tp.visibility_stay_visible < 1.0 &&
              tp.visibility_stay_invisible > 0.0 && tp.visibility_stay_invisible < 1.0,
          "visibility transition probabilities in (0,1)");
    check((tp.initial_cov_diag.array() > 0.0).all(), "initial covariance must be positive");
}

double region_volume(const RegionBounds& region) {
    const double dr = region.r_max - region.r_min;
    const double da = region.a_max - region.a_min;
    const double drd = region.rdot_max - region.rdot_min;
    if (!(dr > 0.0 && da > 0.0 && drd > 0.0)) {
        throw ConfigError("region bounds must be strictly ordered");
    }
    return dr * da * drd;
}

double region_volume(const ScenarioConfig& config) { return region_volume(config.region); }

Vec2 project_geodetic(double lon_deg, double lat_deg, double lon0_deg, double lat0_deg,
                      double lat_ref_deg) {
    constexpr double kEarthRadius = 6371.0;
    constexpr double kDeg = kPi / 180.0;
    return {kEarthRadius * std::cos(lat_ref_deg * kDeg) * (lon_deg - lon0_deg) * kDeg,
            kEarthRadius * (lat_deg - lat0_deg) * kDeg};
}

ScenarioConfig default_scenario() {
    ScenarioConfig c;
    constexpr double kDeg = kPi / 180.0;
    // Receivers at (143.20E, 24.29S) and (122.01E, 28.33S), projected about the first.
    const double lat_ref = (-24.29 + -28.33) / 2.0;
    const Vec2 p1 = project_geodetic(143.20, -24.29, 143.20, -24.29, lat_ref);
    const Vec2 p2 = project_geodetic(122.01, -28.33, 143.20, -24.29, lat_ref);
    c.sites = {{p1(0), p1(1), wrap_angle(325.0 * kDeg), 100.0},
               {p2(0), p2(1), wrap_angle(350.0 * kDeg), 100.0}};
    c.paths = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    c.nominal_layers = {Vec2(100.0, 260.0), Vec2(100.0, 260.0)};
    c.period = 15.0;
    c.region = RegionBounds{};
    c.expected_clutter = 21.0;
    c.epsilon = 0.1;
    c.set_detection_probability(0.4);
    c.meas_noise = Vec3(25.0, 1e-6, 9e-6).asDiagonal();
    c.iono_noise = Vec2(100.0, 100.0).asDiagonal();
    c.process_noise = Vec4(1e-6, 1e-8, 1e-6, 1e-8).asDiagonal();
    c.height_noise = Vec2(1.0, 1.0).asDiagonal();
    c.height_transition = Mat2::Identity();
    c.iono_matrix = Mat2::Identity();
    c.n_scans = 100;
    c.seed = 1;
    // Ten targets inside the two-radar overlap, staggered lifetimes.
    c.targets = {
        {{-1931.2, -0.0180, 1877.6, 0.0996}, 1, 60},
        {{-2148.1, -0.1089, 1861.6, -0.0380}, 1, 75},
        {{-2008.0, 0.0743, 1996.6, 0.1034}, 5, 100},
        {{-2073.9, 0.0888, 1717.7, 0.0618}, 10, 70},
        {{-1862.9, -0.0396, 1700.5, 0.1207}, 15, 90},
        {{-2062.9, 0.0009, 1933.3, -0.1025}, 20, 100},
        {{-1925.8, 0.0436, 1645.7, -0.1003}, 30, 100},
        {{-1903.1, 0.0900, 2175.1, 0.0152}, 40, 100},
        {{-2124.5, -0.1252, 1768.6, 0.0364}, 45, 95},
        {{-2068.9, 0.1059, 1991.8, 0.0533}, 55, 100},
    };
    c.tracker = TrackerParams{};
    return c;
}

// ---------------------------------------------------------------------------
// JSON scenario files

namespace {

Eigen::MatrixXd read_matrix(const json& j, int n, const std::string& key) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    if (!j.is_array()) throw ConfigError(key + ": expected an array");
    if (static_cast<int>(j.size()) != n) throw ConfigError(key + ": wrong dimension");
    if (j[0].is_array()) {
        for (int r = 0; r < n; ++r) {
            if (static_cast<int>(j[r].size()) != n) throw ConfigError(key + ": wrong dimension");
            for (int col = 0; col < n; ++col) m(r, col) = j[r][col].get<double>();
        }
    } else {
        for (int r = 0; r < n; ++r) m(r, r) = j[r].get<double>();
    }
    return m;
}

json write_matrix(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int col = 0; col < m.cols(); ++col) row.push_back(m(r, col));
        out.push_back(row);
    }
    return out;
}

std::pair<double, double> read_interval(const json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(key + ": expected [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

PathLayers parse_path(const std::string& name) {
    auto layer = [&](char ch) {
        if (ch == 'E' || ch == 'e') return 0;
        if (ch == 'F' || ch == 'f') return 1;
        throw ConfigError("unknown layer in path name '" + name + "'");
    };
    if (name.size() != 2) throw ConfigError("path names are two letters, e.g. EF");
    return {layer(name[0]), layer(name[1])};
}

std::string path_name(const PathLayers& p) {
    const char names[2] = {'E', 'F'};
    return std::string{names[p.transmit], names[p.receive]};
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    constexpr double kDeg = kPi / 180.0;
    ScenarioConfig c;
    try {
        double lon0 = 0.0, lat0 = 0.0;
        bool geodetic = false;
        if (j.contains("projection_origin")) {
            lon0 = j["projection_origin"].at("lon_deg").get<double>();
            lat0 = j["projection_origin"].at("lat_deg").get<double>();
            geodetic = true;
        }
        const auto& sites = j.at("sites");
        double lat_sum = 0.0;
        int n_geo = 0;
        for (const auto& s : sites) {
            if (s.contains("lat_deg")) {
                lat_sum += s["lat_deg"].get<double>();
                ++n_geo;
            }
        }
        const double lat_ref = n_geo > 0 ? lat_sum / n_geo : lat0;
        c.paths.clear();
        for (const auto& p : j.at("paths")) c.paths.push_back(parse_path(p.get<std::string>()));
        for (const auto& s : sites) {
            geometry::SiteConfig site;
            if (s.contains("lon_deg")) {
                if (!geodetic) throw ConfigError("geodetic sites need a projection_origin");
                const Vec2 p = project_geodetic(s["lon_deg"].get<double>(),
                                                s["lat_deg"].get<double>(), lon0, lat0, lat_ref);
                site.x0 = p(0);
                site.y0 = p(1);
            } else {
                site.x0 = s.at("x_km").get<double>();
                site.y0 = s.at("y_km").get<double>();
            }
            site.beta0 = s.contains("boresight_deg") ? s["boresight_deg"].get<double>() * kDeg
                                                     : s.at("boresight_rad").get<double>();
            site.beta0 = wrap_angle(site.beta0);
            site.d0 = s.at("d0_km").get<double>();
            c.sites.push_back(site);
            const auto& nl = s.at("nominal_layers_km");
            c.nominal_layers.emplace_back(nl.at(0).get<double>(), nl.at(1).get<double>());
            const auto& pd = s.at("p_d");
            if (pd.is_array()) {
                c.p_d.push_back(pd.get<std::vector<double>>());
            } else {
                c.p_d.emplace_back(c.paths.size(), pd.get<double>());
            }
        }
        c.period = j.at("period_s").get<double>();
        const auto& reg = j.at("region");
        std::tie(c.region.r_min, c.region.r_max) = read_interval(reg.at("range_km"), "range_km");
        std::tie(c.region.a_min, c.region.a_max) =
            read_interval(reg.at("azimuth_rad"), "azimuth_rad");
        std::tie(c.region.rdot_min, c.region.rdot_max) =
            read_interval(reg.at("range_rate_kmps"), "range_rate_kmps");
        c.expected_clutter = j.at("expected_clutter_per_scan").get<double>();
        c.epsilon = j.at("epsilon").get<double>();
        c.meas_noise = read_matrix(j.at("meas_noise"), 3, "meas_noise");
        c.iono_noise = read_matrix(j.at("iono_noise"), 2, "iono_noise");
        c.process_noise = read_matrix(j.at("process_noise"), 4, "process_noise");
        c.height_noise = read_matrix(j.at("height_noise"), 2, "height_noise");
        if (j.contains("height_transition"))
            c.height_transition = read_matrix(j["height_transition"], 2, "height_transition");
        if (j.contains("iono_matrix"))
            c.iono_matrix = read_matrix(j["iono_matrix"], 2, "iono_matrix");
        c.n_scans = j.at("n_scans").get<int>();
        c.seed = j.value("seed", std::uint64_t{1});
        c.max_speed = j.value("max_speed_kmps", 1.0);
        for (const auto& t : j.at("targets")) {
            TargetSpec spec;
            spec.initial = {t.at("x_km").get<double>(), t.at("vx_kmps").get<double>(),
                            t.at("y_km").get<double>(), t.at("vy_kmps").get<double>()};
            spec.birth = t.at("birth").get<int>();
            spec.death = t.at("death").get<int>();
            c.targets.push_back(spec);
        }
        if (j.contains("tracker")) {
            const auto& t = j["tracker"];
            auto& p = c.tracker;
            p.window = t.value("window", p.window);
            p.max_outer_iterations = t.value("max_outer_iterations", p.max_outer_iterations);
            p.outer_tolerance = t.value("outer_tolerance", p.outer_tolerance);
            p.lbp_tolerance = t.value("lbp_tolerance", p.lbp_tolerance);
            p.lbp_max_iterations = t.value("lbp_max_iterations", p.lbp_max_iterations);
            p.lbp_damping = t.value("lbp_damping", p.lbp_damping);
            p.gate_probability = t.value("gate_probability", p.gate_probability);
            p.confirm_threshold = t.value("confirm_threshold", p.confirm_threshold);
            p.delete_streak = t.value("delete_streak", p.delete_streak);
            p.visibility_stay_visible = t.value("visibility_stay_visible", p.visibility_stay_visible);
            p.visibility_stay_invisible =
                t.value("visibility_stay_invisible", p.visibility_stay_invisible);
            if (t.contains("cluster_threshold")) {
                const auto& ct = t["cluster_threshold"];
                p.cluster_threshold = {ct.at(0).get<double>(), ct.at(1).get<double>(),
                                       ct.at(2).get<double>()};
            }
            if (t.contains("initial_cov_diag")) {
                const auto& ic = t["initial_cov_diag"];
                p.initial_cov_diag = {ic.at(0).get<double>(), ic.at(1).get<double>(),
                                      ic.at(2).get<double>(), ic.at(3).get<double>()};
            }
            p.track_assoc_probability =
                t.value("track_assoc_probability", p.track_assoc_probability);
            p.synthetic_floor = t.value("synthetic_floor", p.synthetic_floor);
            p.feedback_skip_miss = t.value("feedback_skip_miss", p.feedback_skip_miss);
            p.spawn_tracks = t.value("spawn_tracks", p.spawn_tracks);
            p.height_feedback = t.value("height_feedback", p.height_feedback);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario schema error: ") + e.what());
    }
    c.validate();
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string serialize_scenario(const ScenarioConfig& c) {
    json j;
    j["sites"] = json::array();
    for (int s = 0; s < c.n_sensors(); ++s) {
        const auto& site = c.sites[s];
        j["sites"].push_back({{"x_km", site.x0},
                              {"y_km", site.y0},
                              {"boresight_rad", site.beta0},
                              {"d0_km", site.d0},
                              {"nominal_layers_km", {c.nominal_layers[s](0), c.nominal_layers[s](1)}},
                              {"p_d", c.p_d[s]}});
    }
    j["paths"] = json::array();
    for (const auto& p : c.paths) j["paths"].push_back(path_name(p));
    j["period_s"] = c.period;
    j["region"] = {{"range_km", {c.region.r_min, c.region.r_max}},
                   {"azimuth_rad", {c.region.a_min, c.region.a_max}},
                   {"range_rate_kmps", {c.region.rdot_min, c.region.rdot_max}}};
    j["expected_clutter_per_scan"] = c.expected_clutter;
    j["epsilon"] = c.epsilon;
    j["meas_noise"] = write_matrix(c.meas_noise);
    j["iono_noise"] = write_matrix(c.iono_noise);
    j["process_noise"] = write_matrix(c.process_noise);
    j["height_noise"] = write_matrix(c.height_noise);
    j["height_transition"] = write_matrix(c.height_transition);
    j["iono_matrix"] = write_matrix(c.iono_matrix);
    j["n_scans"] = c.n_scans;
    j["seed"] = c.seed;
    j["max_speed_kmps"] = c.max_speed;
    j["targets"] = json::array();
    for (const auto& t : c.targets) {
        j["targets"].push_back({{"x_km", t.initial.x},
                                {"vx_kmps", t.initial.vx},
                                {"y_km", t.initial.y},
                                {"vy_kmps", t.initial.vy},
                                {"birth", t.birth},
                                {"death", t.death}});
    }
    const auto& p = c.tracker;
    j["tracker"] = {{"window", p.window},
                    {"max_outer_iterations", p.max_outer_iterations},
                    {"outer_tolerance", p.outer_tolerance},
                    {"lbp_tolerance", p.lbp_tolerance},
                    {"lbp_max_iterations", p.lbp_max_iterations},
                    {"lbp_damping", p.lbp_damping},
                    {"gate_probability", p.gate_probability},
                    {"confirm_threshold", p.confirm_threshold},
                    {"delete_streak", p.delete_streak},
                    {"visibility_stay_visible", p.visibility_stay_visible},
                    {"visibility_stay_invisible", p.visibility_stay_invisible},
                    {"cluster_threshold",
                     {p.cluster_threshold(0), p.cluster_threshold(1), p.cluster_threshold(2)}},
                    {"initial_cov_diag",
                     {p.initial_cov_diag(0), p.initial_cov_diag(1), p.initial_cov_diag(2),
                      p.initial_cov_diag(3)}},
                    {"track_assoc_probability", p.track_assoc_probability},
                    {"spawn_tracks", p.spawn_tracks},
                    {"height_feedback", p.height_feedback}};
    return j.dump(2);
}

double chi_square_quantile(double probability, int dof) {
    if (!(probability > 0.0 && probability < 1.0) || dof < 1) {
        throw ConfigError("chi-square quantile needs probability in (0,1) and dof >= 1");
    }
    boost::math::chi_squared dist(dof);
    return boost::math::quantile(dist, probability);
}

}  // namespace othr
