#include "othr/association.hpp"

#include <algorithm>
#include <stdexcept>

namespace othr::assoc {

namespace {

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

double floored(double x) { return std::max(x, kLogFloor); }

/// For base b and terms t, fills out[k] = log(exp(b) + sum_{m != k} exp(t[m])).
void exclusive_lse(double base, const std::vector<double>& t, std::vector<double>& out) {
    const std::size_t n = t.size();
    out.resize(n);
    std::vector<double> suffix(n + 1, kNegInf);
    for (std::size_t k = n; k-- > 0;) suffix[k] = log_add(suffix[k + 1], t[k]);
    double prefix = base;
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = log_add(prefix, suffix[k + 1]);
        prefix = log_add(prefix, t[k]);
    }
}

double sigmoid_log(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Alternating row/column rescaling until both frame constraints hold.
void normalize(AssociationBelief& b, int max_passes = 1000, double tol = 1e-13) {
    const int rows = b.n_targets * b.n_paths;
    for (int pass = 0; pass < max_passes; ++pass) {
        double worst = 0.0;
        for (int r = 0; r < rows; ++r) {
            double s = b.miss[r];
            for (int j = 0; j < b.n_meas; ++j) s += b.a(r, j);
            worst = std::max(worst, std::abs(s - 1.0));
            if (s > 0.0) {
                b.miss[r] /= s;
                for (int j = 0; j < b.n_meas; ++j) b.a(r, j) /= s;
            }
        }
        for (int j = 0; j < b.n_meas; ++j) {
            double s = b.clutter[j];
            for (int r = 0; r < rows; ++r) s += b.a(r, j);
            worst = std::max(worst, std::abs(s - 1.0));
            if (s > 0.0) {
                b.clutter[j] /= s;
                for (int r = 0; r < rows; ++r) b.a(r, j) /= s;
            }
        }
        if (worst < tol) return;
    }
}

AssociationBelief blank_belief(const AssociationProblem& p) {
    AssociationBelief b;
    b.n_targets = p.n_targets;
    b.n_meas = p.n_meas;
    b.n_paths = p.n_paths;
    b.assoc.assign(static_cast<std::size_t>(p.n_rows()) * p.n_meas, 0.0);
    b.miss.assign(p.n_rows(), 1.0);
    b.clutter.assign(p.n_meas, 1.0);
    return b;
}

}  // namespace

AssociationProblem AssociationProblem::empty(int n_targets, int n_meas, int n_paths) {
    AssociationProblem p;
    p.n_targets = n_targets;
    p.n_meas = n_meas;
    p.n_paths = n_paths;
    p.loglik.assign(static_cast<std::size_t>(n_targets) * n_paths * n_meas, kNegInf);
    p.log_detect.assign(static_cast<std::size_t>(n_targets) * n_paths, 0.0);
    p.log_miss.assign(static_cast<std::size_t>(n_targets) * n_paths, 0.0);
    return p;
}

void AssociationProblem::check() const {
    if (n_targets < 0 || n_meas < 0 || n_paths < 0)
        throw std::invalid_argument("negative association problem dimension");
    const auto rows = static_cast<std::size_t>(n_rows());
    if (loglik.size() != rows * n_meas || log_detect.size() != rows || log_miss.size() != rows)
        throw std::invalid_argument("association problem tables have inconsistent sizes");
    auto nan = [](double x) { return std::isnan(x); };
    if (std::any_of(loglik.begin(), loglik.end(), nan) ||
        std::any_of(log_detect.begin(), log_detect.end(), nan) ||
        std::any_of(log_miss.begin(), log_miss.end(), nan) || std::isnan(log_clutter))
        throw std::invalid_argument("association problem contains NaN");
}

std::pair<double, double> expected_log_detection(double p_visible, double p_d, double epsilon) {
    auto term = [](double weight, double prob) {
        if (weight <= 0.0) return 0.0;
        return prob > 0.0 ? weight * std::log(prob) : kNegInf;
    };
    const double ld = term(p_visible, p_d) + term(1.0 - p_visible, epsilon);
    const double lm = term(p_visible, 1.0 - p_d) + term(1.0 - p_visible, 1.0 - epsilon);
    return {ld, lm};
}

RowPrediction predict_row(const TargetView& target, const HeightView& heights,
                          const SensorModel& sensor, int path) {
    RowPrediction out;
    const PathLayers& layers = sensor.paths[path];
    const auto ph = path_heights(heights.mean, layers);
    const auto state = geometry::UtmState::from(target.mean);
    try {
        out.h = geometry::forward_map(state, sensor.site, ph).vec();
        out.jx = geometry::jacobian_state(state, sensor.site, ph);
        out.ju = geometry::jacobian_heights(state, sensor.site, ph) * layer_selection(layers);
    } catch (const DegenerateGeometry&) {
        return out;
    }
    out.cov = sensor.meas_noise + out.jx * target.cov * out.jx.transpose() +
              out.ju * heights.cov * out.ju.transpose();
    symmetrize(out.cov);
    out.valid = true;
    return out;
}

AssociationProblem build_problem(const std::vector<TargetView>& targets, const HeightView& heights,
                                 const std::vector<geometry::SlantMeasurement>& meas,
                                 const SensorModel& sensor) {
    const int n_paths = static_cast<int>(sensor.paths.size());
    auto problem = AssociationProblem::empty(static_cast<int>(targets.size()),
                                             static_cast<int>(meas.size()), n_paths);
    problem.log_clutter = sensor.log_clutter;
    const double log_2pi = std::log(2.0 * kPi);
    for (int i = 0; i < problem.n_targets; ++i) {
        for (int tau = 0; tau < n_paths; ++tau) {
            const int row = i * n_paths + tau;
            const auto [ld, lm] =
                expected_log_detection(targets[i].p_visible, sensor.p_d[tau], sensor.epsilon);
            problem.log_detect[row] = ld;
            problem.log_miss[row] = lm;
            const RowPrediction pred = predict_row(targets[i], heights, sensor, tau);
            if (!pred.valid) continue;
            Eigen::LDLT<Mat3> ldlt(pred.cov);
            if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) continue;
            const double logdet = ldlt.vectorD().array().log().sum();
            for (int j = 0; j < problem.n_meas; ++j) {
                const Vec3 d = geometry::slant_residual(meas[j].vec(), pred.h);
                const double m2 = d.dot(ldlt.solve(d));
                if (m2 > sensor.gate_threshold) continue;
                problem.ll(row, j) = -0.5 * m2 - 1.5 * log_2pi - 0.5 * logdet;
            }
        }
    }
    return problem;
}

std::vector<bool> unexplained(const AssociationProblem& problem) {
    std::vector<bool> out(problem.n_meas, true);
    for (int r = 0; r < problem.n_rows(); ++r)
        for (int j = 0; j < problem.n_meas; ++j)
            if (problem.ll(r, j) != kNegInf) out[j] = false;
    return out;
}

AssociationBelief run_lbp(const AssociationProblem& problem, const LbpOptions& options) {
    problem.check();
    AssociationBelief belief = blank_belief(problem);
    const int rows = problem.n_rows();
    const int m = problem.n_meas;
    if (rows == 0 || m == 0) return belief;

    // Sparse edge list over gated-in pairs.
    std::vector<int> edge_row, edge_col;
    std::vector<double> w;
    std::vector<std::vector<int>> row_edges(rows), col_edges(m);
    for (int r = 0; r < rows; ++r) {
        for (int j = 0; j < m; ++j) {
            const double l = problem.ll(r, j);
            if (l == kNegInf) continue;
            const int e = static_cast<int>(w.size());
            edge_row.push_back(r);
            edge_col.push_back(j);
            w.push_back(floored(floored(problem.log_detect[r]) + l));
            row_edges[r].push_back(e);
            col_edges[j].push_back(e);
        }
    }
    std::vector<double> w0(rows);
    for (int r = 0; r < rows; ++r) w0[r] = floored(problem.log_miss[r]);
    const double wc = floored(problem.log_clutter);

    const std::size_t n_edges = w.size();
    std::vector<double> log_row(n_edges, 0.0), log_col(n_edges, 0.0);
    std::vector<double> terms, excl;
    const double keep = options.damping;
    belief.converged = false;
    int it = 0;
    while (it < options.max_iterations) {
        ++it;
        double change = 0.0;
        for (int r = 0; r < rows; ++r) {
            const auto& es = row_edges[r];
            terms.resize(es.size());
            for (std::size_t k = 0; k < es.size(); ++k) terms[k] = w[es[k]] + log_col[es[k]];
            exclusive_lse(w0[r], terms, excl);
            for (std::size_t k = 0; k < es.size(); ++k) {
                const double fresh = -excl[k];
                const double next = (1.0 - keep) * fresh + keep * log_row[es[k]];
                change = std::max(change, std::abs(next - log_row[es[k]]));
                log_row[es[k]] = next;
            }
        }
        for (int j = 0; j < m; ++j) {
            const auto& es = col_edges[j];
            terms.resize(es.size());
            for (std::size_t k = 0; k < es.size(); ++k) terms[k] = w[es[k]] + log_row[es[k]];
            exclusive_lse(wc, terms, excl);
            for (std::size_t k = 0; k < es.size(); ++k) {
                const double fresh = -excl[k];
                const double next = (1.0 - keep) * fresh + keep * log_col[es[k]];
                change = std::max(change, std::abs(next - log_col[es[k]]));
                log_col[es[k]] = next;
            }
        }
        if (change < options.tolerance) {
            belief.converged = true;
            break;
        }
    }
    belief.iterations = it;

    for (std::size_t e = 0; e < n_edges; ++e)
        belief.a(edge_row[e], edge_col[e]) = sigmoid_log(w[e] + log_row[e] + log_col[e]);
    for (int r = 0; r < rows; ++r) {
        double z = w0[r];
        for (int e : row_edges[r]) z = log_add(z, w[e] + log_col[e]);
        belief.miss[r] = std::exp(w0[r] - z);
    }
    for (int j = 0; j < m; ++j) {
        double z = wc;
        for (int e : col_edges[j]) z = log_add(z, w[e] + log_row[e]);
        belief.clutter[j] = std::exp(wc - z);
    }
    normalize(belief);
    return belief;
}

AssociationBelief brute_force_marginals(const AssociationProblem& problem, long long max_events) {
    problem.check();
    AssociationBelief belief = blank_belief(problem);
    const int rows = problem.n_rows();
    const int m = problem.n_meas;
    if (rows == 0 || m == 0) return belief;
    if (m > 63) throw TooLarge("brute force supports at most 63 measurements");

    std::vector<double> w0(rows);
    for (int r = 0; r < rows; ++r) w0[r] = floored(problem.log_miss[r]);
    const double wc = floored(problem.log_clutter);
    auto weight = [&](int r, int j) { return floored(floored(problem.log_detect[r]) + problem.ll(r, j)); };

    // Pass 1: count events and find the maximum log weight.
    long long count = 0;
    double best = kNegInf;
    std::vector<int> choice(rows, -1);
    auto visit = [&](auto&& self, int r, unsigned long long used, double acc, auto&& leaf) -> void {
        if (r == rows) {
            const int n_det = __builtin_popcountll(used);
            leaf(acc + wc * (m - n_det));
            return;
        }
        choice[r] = -1;
        self(self, r + 1, used, acc + w0[r], leaf);
        for (int j = 0; j < m; ++j) {
            if ((used >> j) & 1ULL) continue;
            if (problem.ll(r, j) == kNegInf) continue;
            choice[r] = j;
            self(self, r + 1, used | (1ULL << j), acc + weight(r, j), leaf);
        }
        choice[r] = -1;
    };
    visit(visit, 0, 0ULL, 0.0, [&](double lw) {
        if (++count > max_events) throw TooLarge("feasible association events exceed the budget");
        best = std::max(best, lw);
    });

    // Pass 2: accumulate normalized weights.
    std::fill(belief.miss.begin(), belief.miss.end(), 0.0);
    std::fill(belief.clutter.begin(), belief.clutter.end(), 0.0);
    double total = 0.0;
    visit(visit, 0, 0ULL, 0.0, [&](double lw) {
        const double p = std::exp(lw - best);
        total += p;
        std::vector<bool> taken(m, false);
        for (int r = 0; r < rows; ++r) {
            if (choice[r] < 0) {
                belief.miss[r] += p;
            } else {
                belief.a(r, choice[r]) += p;
                taken[choice[r]] = true;
            }
        }
        for (int j = 0; j < m; ++j)
            if (!taken[j]) belief.clutter[j] += p;
    });
    for (double& x : belief.assoc) x /= total;
    for (double& x : belief.miss) x /= total;
    for (double& x : belief.clutter) x /= total;
    belief.iterations = 0;
    belief.converged = true;
    return belief;
}

std::vector<Synthetic> synthetic_measurements(const AssociationBelief& belief,
                                              const std::vector<geometry::SlantMeasurement>& meas,
                                              double floor) {
    std::vector<Synthetic> out;
    const int rows = belief.n_targets * belief.n_paths;
    for (int r = 0; r < rows; ++r) {
        const double weight = 1.0 - belief.miss[r];
        if (!(weight > floor)) continue;
        double sr = 0.0, srd = 0.0, ss = 0.0, sc = 0.0;
        for (int j = 0; j < belief.n_meas; ++j) {
            const double p = belief.a(r, j);
            if (p == 0.0) continue;
            sr += p * meas[j].r;
            srd += p * meas[j].rdot;
            ss += p * std::sin(meas[j].a);
            sc += p * std::cos(meas[j].a);
        }
        Synthetic syn;
        syn.row = r;
        syn.weight = weight;
        syn.y = Vec3(sr / weight, srd / weight, std::atan2(ss, sc));
        out.push_back(syn);
    }
    return out;
}

}  // namespace othr::assoc
