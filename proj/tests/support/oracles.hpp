#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these share code with the library implementations they check.

#include "othr/association.hpp"
#include "othr/common.hpp"
#include "othr/geometry.hpp"

#include <functional>
#include <random>
#include <vector>

namespace othr::oracle {

/// Central finite differences of a vector function.
inline MatX finite_jacobian(const std::function<VecX(const VecX&)>& f, const VecX& x, const VecX& steps);

/// Central differences with the usual cube-root-of-epsilon step per coordinate.
inline MatX finite_jacobian(const std::function<VecX(const VecX&)>& f, const VecX& x) {
    VecX steps(x.size());
    for (int i = 0; i < x.size(); ++i) steps(i) = std::cbrt(2.2e-16) * std::max(std::abs(x(i)), 1.0);
    return finite_jacobian(f, x, steps);
}

inline MatX finite_jacobian(const std::function<VecX(const VecX&)>& f, const VecX& x, const VecX& steps) {
    const VecX f0 = f(x);
    MatX j(f0.size(), x.size());
    for (int c = 0; c < x.size(); ++c) {
        VecX xp = x, xm = x;
        xp(c) += steps(c);
        xm(c) -= steps(c);
        VecX d = f(xp) - f(xm);
        j.col(c) = d / (2.0 * steps(c));
    }
    return j;
}

/// Exact association marginals by enumerating, measurement by measurement,
/// every owner (a free (target, path) row or clutter). Weights are taken
/// straight from the problem fields without any flooring.
struct ExactMarginals {
    std::vector<double> assoc, miss, clutter;
    long long events = 0;
};

inline ExactMarginals enumerate_association(const assoc::AssociationProblem& p) {
    const int rows = p.n_rows();
    const int m = p.n_meas;
    ExactMarginals out;
    out.assoc.assign(static_cast<std::size_t>(rows) * m, 0.0);
    out.miss.assign(rows, 0.0);
    out.clutter.assign(m, 0.0);
    std::vector<int> owner(m, -1);
    std::vector<bool> row_used(rows, false);
    double total = 0.0;
    std::function<void(int)> rec = [&](int j) {
        if (j == m) {
            double w = 1.0;
            for (int jj = 0; jj < m; ++jj) {
                if (owner[jj] < 0) {
                    w *= std::exp(p.log_clutter);
                } else {
                    w *= std::exp(p.log_detect[owner[jj]] + p.ll(owner[jj], jj));
                }
            }
            for (int r = 0; r < rows; ++r)
                if (!row_used[r]) w *= std::exp(p.log_miss[r]);
            ++out.events;
            total += w;
            for (int jj = 0; jj < m; ++jj) {
                if (owner[jj] < 0) {
                    out.clutter[jj] += w;
                } else {
                    out.assoc[static_cast<std::size_t>(owner[jj]) * m + jj] += w;
                }
            }
            for (int r = 0; r < rows; ++r)
                if (!row_used[r]) out.miss[r] += w;
            return;
        }
        owner[j] = -1;
        rec(j + 1);
        for (int r = 0; r < rows; ++r) {
            if (row_used[r] || std::isinf(p.ll(r, j))) continue;
            row_used[r] = true;
            owner[j] = r;
            rec(j + 1);
            row_used[r] = false;
        }
        owner[j] = -1;
    };
    rec(0);
    for (double& x : out.assoc) x /= total;
    for (double& x : out.miss) x /= total;
    for (double& x : out.clutter) x /= total;
    return out;
}

/// Undamped sum-product on the bipartite matching graph, written in the
/// classic row/column ratio form: mu = w / (1 + sum of the other row terms),
/// nu = 1 / (1 + sum of the other column terms). Returns association marginals
/// [row * n_meas + j] after `iterations` sweeps.
inline std::vector<double> textbook_bp(const assoc::AssociationProblem& p, int iterations = 5000) {
    const int rows = p.n_rows();
    const int m = p.n_meas;
    MatX w = MatX::Zero(rows, m), nu = MatX::Ones(rows, m), mu = MatX::Zero(rows, m);
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < m; ++j)
            if (!std::isinf(p.ll(r, j)))
                w(r, j) = std::exp(p.log_detect[r] + p.ll(r, j) - p.log_miss[r] - p.log_clutter);
    for (int it = 0; it < iterations; ++it) {
        for (int r = 0; r < rows; ++r) {
            double s = 1.0;
            for (int j = 0; j < m; ++j) s += w(r, j) * nu(r, j);
            for (int j = 0; j < m; ++j) mu(r, j) = w(r, j) / (s - w(r, j) * nu(r, j));
        }
        for (int j = 0; j < m; ++j) {
            double s = 1.0;
            for (int r = 0; r < rows; ++r) s += mu(r, j);
            for (int r = 0; r < rows; ++r) nu(r, j) = 1.0 / (s - mu(r, j));
        }
    }
    std::vector<double> out(static_cast<std::size_t>(rows) * m, 0.0);
    for (int r = 0; r < rows; ++r) {
        double s = 1.0;
        for (int j = 0; j < m; ++j) s += w(r, j) * nu(r, j);
        for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(r) * m + j] = w(r, j) * nu(r, j) / s;
    }
    return out;
}

/// Random loopy instance: sizes drawn up to the given bounds (at least two
/// rows and two measurements), detection probabilities, likelihoods and the
/// clutter weight uniform on (0, 1).
inline assoc::AssociationProblem random_loopy_problem(std::mt19937_64& rng, int max_targets, int max_meas,
                                                      int max_paths) {
    std::uniform_real_distribution<double> u(1e-3, 1.0);
    for (;;) {
        const int nx = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_targets));
        const int ne = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_meas));
        const int nm = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_paths));
        if (nx * nm < 2 || ne < 2) continue;
        auto p = assoc::AssociationProblem::empty(nx, ne, nm);
        for (int r = 0; r < p.n_rows(); ++r) {
            const double d = u(rng);
            p.log_detect[r] = std::log(d);
            p.log_miss[r] = std::log(1.0 - d + 1e-12);
            for (int j = 0; j < ne; ++j) p.ll(r, j) = std::log(u(rng));
        }
        p.log_clutter = std::log(u(rng));
        return p;
    }
}

/// Random association problem with every pair inside the gate unless
/// `gate_fraction` < 1.
inline assoc::AssociationProblem random_problem(std::mt19937_64& rng, int n_targets, int n_meas, int n_paths,
                                                double gate_fraction = 1.0) {
    std::uniform_real_distribution<double> ll(-6.0, 2.0), pd(0.05, 0.95), u(0.0, 1.0), lc(-3.0, 0.0);
    auto p = assoc::AssociationProblem::empty(n_targets, n_meas, n_paths);
    for (int r = 0; r < p.n_rows(); ++r) {
        const double d = pd(rng);
        p.log_detect[r] = std::log(d);
        p.log_miss[r] = std::log(1.0 - d);
        for (int j = 0; j < n_meas; ++j) p.ll(r, j) = u(rng) < gate_fraction ? ll(rng) : assoc::kNegInf;
    }
    p.log_clutter = lc(rng);
    return p;
}

/// Two-state HMM marginals by summing over all 2^n state paths.
/// T(to, from), state 0 invisible; `anchor` >= 0 adds one transition before
/// the first scan, otherwise `pi` is the first-scan prior.
inline std::vector<double> enumerate_hmm(double pi, const Mat2& t, const std::vector<Vec2>& xi,
                                         double anchor = -1.0) {
    const int n = static_cast<int>(xi.size());
    std::vector<double> marg(n, 0.0);
    double total = 0.0;
    Vec2 first = anchor >= 0.0 ? Vec2(t * Vec2(1.0 - anchor, anchor)) : Vec2(1.0 - pi, pi);
    for (long long mask = 0; mask < (1LL << n); ++mask) {
        double w = 1.0;
        int prev = -1;
        for (int k = 0; k < n; ++k) {
            const int s = static_cast<int>((mask >> k) & 1);
            w *= (k == 0 ? first(s) : t(s, prev)) * xi[k](s);
            prev = s;
        }
        total += w;
        for (int k = 0; k < n; ++k)
            if ((mask >> k) & 1) marg[k] += w;
    }
    for (double& m : marg) m /= total;
    return marg;
}

/// Fixed-interval smoothing of a linear-Gaussian model by one dense solve:
/// minimises the prior, dynamics and measurement quadratic forms jointly.
/// Returns the posterior means and marginal covariances.
struct BatchResult {
    std::vector<VecX> mean;
    std::vector<MatX> cov;
};

inline BatchResult batch_smoother(const VecX& m0, const MatX& p0, const MatX& f, const MatX& q, const MatX& h,
                                  const MatX& r, const std::vector<VecX>& ys) {
    // Solved in extended precision.
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const int n = static_cast<int>(m0.size());
    const int len = static_cast<int>(ys.size());
    const int dim = n * len;
    const MatL fl = f.cast<long double>(), hl = h.cast<long double>();
    const MatL p0i = p0.cast<long double>().inverse();
    const MatL qi = q.cast<long double>().inverse();
    const MatL ri = r.cast<long double>().inverse();
    MatL info = MatL::Zero(dim, dim);
    VecL vec = VecL::Zero(dim);
    info.block(0, 0, n, n) += p0i;
    vec.segment(0, n) += p0i * m0.cast<long double>();
    for (int k = 0; k + 1 < len; ++k) {
        // (x_{k+1} - F x_k)' Q^-1 (x_{k+1} - F x_k)
        info.block(k * n, k * n, n, n) += fl.transpose() * qi * fl;
        info.block(k * n, (k + 1) * n, n, n) -= fl.transpose() * qi;
        info.block((k + 1) * n, k * n, n, n) -= qi * fl;
        info.block((k + 1) * n, (k + 1) * n, n, n) += qi;
    }
    for (int k = 0; k < len; ++k) {
        info.block(k * n, k * n, n, n) += hl.transpose() * ri * hl;
        vec.segment(k * n, n) += hl.transpose() * ri * ys[k].cast<long double>();
    }
    const Eigen::LDLT<MatL> ldlt(info);
    const MatL cov = ldlt.solve(MatL::Identity(dim, dim));
    const VecL mean = ldlt.solve(vec);
    BatchResult out;
    for (int k = 0; k < len; ++k) {
        out.mean.push_back(mean.segment(k * n, n).cast<double>());
        out.cov.push_back(cov.block(k * n, k * n, n, n).cast<double>());
    }
    return out;
}

}  // namespace othr::oracle
