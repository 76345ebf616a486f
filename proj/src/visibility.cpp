#include "othr/visibility.hpp"

#include <algorithm>

namespace othr::vis {

namespace {

double weighted_log(double weight, double prob) {
    if (weight <= 0.0) return 0.0;
    return weight * std::log(prob);
}

Vec2 emission(const PseudoLikelihood& xi) {
    // Rescale by the larger log weight before exponentiating.
    const double m = std::max(xi.log_xi0, xi.log_xi1);
    return {std::exp(xi.log_xi0 - m), std::exp(xi.log_xi1 - m)};
}

std::vector<VisibilityStep> run(const Vec2& first_prior, const Mat2& t,
                                const std::vector<PseudoLikelihood>& xi) {
    const std::size_t n = xi.size();
    std::vector<VisibilityStep> out(n);
    if (n == 0) return out;
    std::vector<Vec2> alpha(n);
    Vec2 prior = first_prior;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) prior = t * alpha[k - 1];
        Vec2 a = prior.cwiseProduct(emission(xi[k]));
        a /= a.sum();
        alpha[k] = a;
        out[k].filtered = a(1);
    }
    Vec2 beta(1.0, 1.0);
    out[n - 1].smoothed = alpha[n - 1](1);
    for (std::size_t k = n - 1; k-- > 0;) {
        // beta_k(e) = sum_e' T(e', e) xi_{k+1}(e') beta_{k+1}(e')
        beta = t.transpose() * emission(xi[k + 1]).cwiseProduct(beta);
        beta /= beta.sum();
        const Vec2 g = alpha[k].cwiseProduct(beta);
        out[k].smoothed = g(1) / g.sum();
    }
    return out;
}

}  // namespace

PseudoLikelihood pseudo_likelihood(const std::vector<MissTerm>& terms, double epsilon) {
    PseudoLikelihood xi;
    for (const auto& term : terms) {
        const double det = 1.0 - term.miss;
        xi.log_xi1 += weighted_log(det, term.p_d) + weighted_log(term.miss, 1.0 - term.p_d);
        xi.log_xi0 += weighted_log(det, epsilon) + weighted_log(term.miss, 1.0 - epsilon);
    }
    return xi;
}

std::vector<VisibilityStep> forward_backward(double pi, const Mat2& transition,
                                             const std::vector<PseudoLikelihood>& xi) {
    return run(Vec2(1.0 - pi, pi), transition, xi);
}

std::vector<VisibilityStep> forward_backward_anchored(double anchor, const Mat2& transition,
                                                      const std::vector<PseudoLikelihood>& xi) {
    return run(transition * Vec2(1.0 - anchor, anchor), transition, xi);
}

LifecycleState manage_track(const std::vector<double>& p_visible, double threshold, int streak) {
    LifecycleState st;
    int run = 0;
    for (std::size_t k = 0; k < p_visible.size(); ++k) {
        const double p = p_visible[k];
        if (!st.confirmed && p > threshold) {
            st.confirmed = true;
            st.confirm_index = static_cast<int>(k);
        }
        run = p < threshold ? run + 1 : 0;
        if (run >= streak) {
            st.deleted = true;
            st.streak_start = static_cast<int>(k) - streak + 1;
            return st;
        }
    }
    return st;
}

Decision decision_at_end(const std::vector<double>& p_visible, double threshold, int streak) {
    if (p_visible.empty()) return Decision::Keep;
    const auto st = manage_track(p_visible, threshold, streak);
    if (st.deleted) return Decision::Delete;
    if (st.confirmed && st.confirm_index == static_cast<int>(p_visible.size()) - 1)
        return Decision::Confirm;
    return Decision::Keep;
}

}  // namespace othr::vis
