#pragma once

#include <vector>

#include "caplearn/belief.hpp"
#include "caplearn/tilted.hpp"
#include "caplearn/topology.hpp"

namespace caplearn {

/// Outer-loop decision parameters: the fraction alpha of exploratory class-A
/// links, their target congestion probability p_A1, and the conservative
/// class-B target p_B1, optimized for a representative mean-field link.
struct MeanFieldPolicy {
    double alpha = 0.25;
    double p_A1 = 0.6;
    double p_B1 = 0.01;
    double gamma = 0.99;
    double L_R = 4.0;
    double L_C = 20.0;
    double kappa = 100.0;
    double rho = 0.95;
    double objective = 0.0;
    // Representative link belief the policy was optimized for (unit-mean
    // normalized), stored as log-space parameters.
    double belief_log_mean = 0.0;
    double belief_log_var = 1.0;
    // gamma = 0 leaves only the immediate risk: the policy degenerates to the
    // greedy rule b_hat = mu and the class machinery is bypassed.
    bool degenerate_greedy = false;

    LognormalBelief belief() const { return LognormalBelief(belief_log_mean, belief_log_var); }
};

struct RiskReport {
    double immediate = 0.0;        // sum over links of (b_hat - mu)^2 + sigma^2
    std::vector<double> per_link;
};

/// Immediate risk of an estimate under the current beliefs, with
/// natural-space moments.
RiskReport risk(const std::vector<double>& b_hat, const std::vector<LognormalBelief>& beliefs);

/// Probability that operating the link at y = b_hat triggers a congestion
/// event: integral of sigma(kappa (b_hat - rho b)) against the belief.
double class_probability(double b_hat, const LognormalBelief& belief, double kappa, double rho,
                         const QuadCfg& cfg = {});

/// Inverse of class_probability by bisection on an auto-expanding bracket;
/// the returned estimate maps back to the target within 1e-6.
double invert_class_probability(double target, const LognormalBelief& belief, double kappa,
                                double rho, const QuadCfg& cfg = {});

/// Variance (natural space) of the posterior belief after the mean-field link
/// triggers a congestion at rate y_A, with the other L_R - 1 route links in
/// class B: density [(1 - p_B0^(L_R-1)) (1 - sigma) + sigma] q.
double posterior_variance_A1(const LognormalBelief& belief, double kappa, double rho, double y_A,
                             double p_B0, double L_R, const QuadCfg& cfg = {});

/// Variance after a clean no-congestion observation at rate y_A:
/// density (1 - sigma) q.
double posterior_variance_A0(const LognormalBelief& belief, double kappa, double rho, double y_A,
                             const QuadCfg& cfg = {});

/// Expected posterior variance of the mean-field link for a candidate
/// (alpha, p_A1, p_B1): the two-class worst-case combination.
double expected_future_variance(double alpha, double p_A1, double p_B1,
                                const LognormalBelief& belief, double kappa, double rho,
                                const GraphStats& stats, const QuadCfg& cfg = {});

/// Grid search over (p_A1, p_B1, alpha) minimizing
///   alpha (b_A - mu)^2 + (1 - alpha) (b_B - mu)^2 + sigma^2
///   + gamma / (1 - gamma) * E[sigma^2'].
/// alpha_grid_den sets the alpha grid {k / alpha_grid_den}, thinned to at
/// most 41 points. Ties break toward the lowest p_B1, then p_A1, then alpha.
MeanFieldPolicy optimize_policy(const LognormalBelief& representative, double kappa, double rho,
                                const GraphStats& stats, double gamma, int alpha_grid_den = 42,
                                const QuadCfg& cfg = {});

/// Unit-mean representative belief: log-variance is the average of the
/// per-link log-variances. One policy then serves heterogeneous links via the
/// scale equivariance of the objective.
LognormalBelief representative_belief(const std::vector<LognormalBelief>& beliefs);

/// Kappa for the representative link: per-link kappas rescaled by their
/// belief means (kappa is inverse-capacity scaled), then averaged.
double representative_kappa(const std::vector<LognormalBelief>& beliefs,
                            const std::vector<double>& kappa);

}  // namespace caplearn
