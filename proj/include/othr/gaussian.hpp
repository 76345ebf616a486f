#pragma once

// Small fixed-size Gaussian helpers shared by the kinematic and height filters.

#include "othr/common.hpp"

#include <vector>

namespace othr {

template <int N>
struct Gaussian {
    Eigen::Matrix<double, N, 1> mean = Eigen::Matrix<double, N, 1>::Zero();
    Eigen::Matrix<double, N, N> cov = Eigen::Matrix<double, N, N>::Identity();
};

/// Linear prediction: mean F m, covariance F P F' + Q.
template <int N>
[[nodiscard]] Gaussian<N> linear_predict(const Gaussian<N>& prior,
                                         const Eigen::Matrix<double, N, N>& f,
                                         const Eigen::Matrix<double, N, N>& q) {
    Gaussian<N> out;
    out.mean = f * prior.mean;
    out.cov = f * prior.cov * f.transpose() + q;
    symmetrize(out.cov);
    return out;
}

/// Rauch-Tung-Striebel backward pass over filtered estimates. Entries before
/// `first` are left untouched (used when a sequence starts mid-window).
template <int N>
[[nodiscard]] std::vector<Gaussian<N>> rts_smooth(const std::vector<Gaussian<N>>& filtered,
                                                  const Eigen::Matrix<double, N, N>& f,
                                                  const Eigen::Matrix<double, N, N>& q,
                                                  std::size_t first = 0) {
    using MatN = Eigen::Matrix<double, N, N>;
    std::vector<Gaussian<N>> out = filtered;
    if (filtered.size() <= first + 1) return out;
    for (std::size_t t = filtered.size() - 1; t-- > first;) {
        const auto& cur = filtered[t];
        const Gaussian<N> pred = linear_predict<N>(cur, f, q);
        Eigen::LDLT<MatN> ldlt(pred.cov);
        if (ldlt.info() != Eigen::Success)
            throw NumericalFailure("singular predicted covariance in smoother");
        // Gain G = P_f F' P_pred^{-1}, formed through a solve.
        const MatN gain = ldlt.solve(f * cur.cov).transpose();
        out[t].mean = cur.mean + gain * (out[t + 1].mean - pred.mean);
        out[t].cov = cur.cov + gain * (out[t + 1].cov - pred.cov) * gain.transpose();
        symmetrize(out[t].cov);
    }
    return out;
}

}  // namespace othr
