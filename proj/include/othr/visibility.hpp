#pragma once

// Visibility (existence) belief of a target: pseudo-likelihoods from the
// association miss probabilities, two-state HMM smoothing, and the
// confirmation / deletion rule.

#include "othr/common.hpp"

#include <vector>

namespace othr::vis {

/// Emission weights of one scan, kept as logs: (ln xi(0), ln xi(1)).
struct PseudoLikelihood {
    double log_xi0 = 0.0;
    double log_xi1 = 0.0;

    [[nodiscard]] double xi0() const { return std::exp(log_xi0); }
    [[nodiscard]] double xi1() const { return std::exp(log_xi1); }
};

/// One term of the pseudo-likelihood: a (sensor, path) miss probability and
/// the detection probability of that path.
struct MissTerm {
    double miss = 1.0;
    double p_d = 0.5;
};

[[nodiscard]] PseudoLikelihood pseudo_likelihood(const std::vector<MissTerm>& terms, double epsilon);

/// Forward-backward output for one scan.
struct VisibilityStep {
    double filtered = 0.5;  ///< p(e = 1) given data up to this scan
    double smoothed = 0.5;  ///< p(e = 1) given the whole sequence
};

/// HMM smoothing with prior pi = p(e_1 = 1) and column-stochastic transition
/// T(to, from), state 0 = invisible. The first scan uses pi directly.
[[nodiscard]] std::vector<VisibilityStep> forward_backward(double pi, const Mat2& transition,
                                                           const std::vector<PseudoLikelihood>& xi);

/// Like forward_backward but the first scan is preceded by one transition
/// from the given anchor probability.
[[nodiscard]] std::vector<VisibilityStep> forward_backward_anchored(
    double anchor, const Mat2& transition, const std::vector<PseudoLikelihood>& xi);

enum class Decision { Keep, Confirm, Delete };

struct LifecycleState {
    bool confirmed = false;
    int confirm_index = -1;      ///< index of the first probability above the threshold
    bool deleted = false;
    int streak_start = -1;       ///< first index of the low streak that deleted the track
};

/// Applies the confirmation and deletion rule to a probability sequence:
/// confirm at the first value above `threshold`; delete at the end of the
/// first run of `streak` successive values below it.
[[nodiscard]] LifecycleState manage_track(const std::vector<double>& p_visible, double threshold,
                                          int streak = 3);

/// Decision at the final element of a sequence.
[[nodiscard]] Decision decision_at_end(const std::vector<double>& p_visible, double threshold,
                                       int streak = 3);

}  // namespace othr::vis
