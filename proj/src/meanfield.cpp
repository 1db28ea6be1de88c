#include "caplearn/meanfield.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace caplearn {

RiskReport risk(const std::vector<double>& b_hat, const std::vector<LognormalBelief>& beliefs) {
    if (b_hat.size() != beliefs.size()) {
        throw std::invalid_argument("risk: dimension mismatch");
    }
    RiskReport report;
    report.per_link.reserve(beliefs.size());
    for (std::size_t m = 0; m < beliefs.size(); ++m) {
        const double dev = b_hat[m] - beliefs[m].natural_mean();
        const double term = dev * dev + beliefs[m].natural_var();
        report.per_link.push_back(term);
        report.immediate += term;
    }
    return report;
}

double class_probability(double b_hat, const LognormalBelief& belief, double kappa, double rho,
                         const QuadCfg& cfg) {
    const BranchMoments bm = branch_log_moments(belief, SigmoidTilt{kappa, rho, b_hat}, cfg);
    const double total = bm.z0 + bm.z1;
    if (!(total > 0.0) || !std::isfinite(total)) {
        std::ostringstream oss;
        oss << "class_probability: quadrature failure (log_mean=" << belief.log_mean()
            << ", log_var=" << belief.log_var() << ", b_hat=" << b_hat << ")";
        throw std::runtime_error(oss.str());
    }
    return bm.z1 / total;
}

double invert_class_probability(double target, const LognormalBelief& belief, double kappa,
                                double rho, const QuadCfg& cfg) {
    if (!(target > 0.0) || !(target < 1.0)) {
        throw std::invalid_argument("invert_class_probability: target must be in (0,1)");
    }
    double lo = belief.natural_mean();
    double hi = lo;
    int budget = 0;
    while (class_probability(lo, belief, kappa, rho, cfg) > target) {
        lo *= 0.5;
        if (++budget > 60) {
            throw std::runtime_error("invert_class_probability: lower bracket expansion failed");
        }
    }
    budget = 0;
    while (class_probability(hi, belief, kappa, rho, cfg) < target) {
        hi *= 2.0;
        if (++budget > 60) {
            throw std::runtime_error("invert_class_probability: upper bracket expansion failed");
        }
    }
    double mid = 0.5 * (lo + hi);
    for (int i = 0; i < 200; ++i) {
        mid = 0.5 * (lo + hi);
        const double p = class_probability(mid, belief, kappa, rho, cfg);
        if (std::abs(p - target) <= 1e-6) break;
        if (p < target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-15 * (std::abs(lo) + std::abs(hi))) break;
    }
    return mid;
}

double posterior_variance_A1(const LognormalBelief& belief, double kappa, double rho, double y_A,
                             double p_B0, double L_R, const QuadCfg& cfg) {
    const BranchMoments bm =
        branch_natural_moments(belief, SigmoidTilt{kappa, rho, y_A}, cfg);
    const double w0 = 1.0 - std::pow(p_B0, L_R - 1.0);
    double z = 0.0, mean = 0.0, var = 0.0;
    if (!combine_moments(bm, w0, 1.0, z, mean, var)) {
        throw std::runtime_error("posterior_variance_A1: quadrature failure");
    }
    return var;
}

double posterior_variance_A0(const LognormalBelief& belief, double kappa, double rho, double y_A,
                             const QuadCfg& cfg) {
    const BranchMoments bm =
        branch_natural_moments(belief, SigmoidTilt{kappa, rho, y_A}, cfg);
    double z = 0.0, mean = 0.0, var = 0.0;
    if (!combine_moments(bm, 1.0, 0.0, z, mean, var)) {
        throw std::runtime_error("posterior_variance_A0: quadrature failure");
    }
    return var;
}

namespace {

double future_variance_terms(double alpha, double p_A1, double p_B1, double sigma2,
                             double var_A1, double var_A0, const GraphStats& stats) {
    const double p_A0 = 1.0 - p_A1;
    const double p_B0 = 1.0 - p_B1;
    const double single_feedback = std::pow(1.0 - alpha, stats.mean_route_length - 1.0);
    const double clean_route = std::pow(p_A0, alpha * (stats.mean_coupled_links - 1.0)) *
                               std::pow(p_B0, (1.0 - alpha) * (stats.mean_coupled_links - 1.0));
    const double class_a = p_A1 * (single_feedback * (var_A1 - sigma2) + sigma2) +
                           p_A0 * (clean_route * (var_A0 - sigma2) + sigma2);
    return (1.0 - alpha) * sigma2 + alpha * class_a;
}

}  // namespace

double expected_future_variance(double alpha, double p_A1, double p_B1,
                                const LognormalBelief& belief, double kappa, double rho,
                                const GraphStats& stats, const QuadCfg& cfg) {
    const double y_A = invert_class_probability(p_A1, belief, kappa, rho, cfg);
    const double var_A1 = posterior_variance_A1(belief, kappa, rho, y_A, 1.0 - p_B1,
                                                stats.mean_route_length, cfg);
    const double var_A0 = posterior_variance_A0(belief, kappa, rho, y_A, cfg);
    return future_variance_terms(alpha, p_A1, p_B1, belief.natural_var(), var_A1, var_A0, stats);
}

MeanFieldPolicy optimize_policy(const LognormalBelief& representative, double kappa, double rho,
                                const GraphStats& stats, double gamma, int alpha_grid_den,
                                const QuadCfg& cfg) {
    if (!(gamma >= 0.0) || !(gamma < 1.0)) {
        throw std::invalid_argument("optimize_policy: gamma must be in [0,1)");
    }
    MeanFieldPolicy policy;
    policy.gamma = gamma;
    policy.L_R = stats.mean_route_length;
    policy.L_C = stats.mean_coupled_links;
    policy.kappa = kappa;
    policy.rho = rho;
    policy.belief_log_mean = representative.log_mean();
    policy.belief_log_var = representative.log_var();

    const double mu = representative.natural_mean();
    const double sigma2 = representative.natural_var();

    if (gamma == 0.0) {
        // Only the immediate risk remains; the minimizer is b_hat = mu for
        // every link, i.e. exactly the greedy rule.
        const double p_star = class_probability(mu, representative, kappa, rho, cfg);
        policy.degenerate_greedy = true;
        policy.alpha = 0.5;
        policy.p_A1 = p_star;
        policy.p_B1 = p_star;
        policy.objective = sigma2;
        return policy;
    }

    std::vector<double> p_a_grid;
    for (int i = 1; i <= 19; ++i) p_a_grid.push_back(0.05 * i);
    const std::vector<double> p_b_grid = {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2};

    std::vector<double> alpha_grid;
    if (alpha_grid_den < 2) throw std::invalid_argument("optimize_policy: bad alpha grid");
    const int points = alpha_grid_den - 1;
    const int stride = points <= 41 ? 1 : (points + 40) / 41;
    for (int k = 1; k <= points; k += stride) {
        alpha_grid.push_back(static_cast<double>(k) / alpha_grid_den);
    }

    // Per-p_A1 pieces reused across the grid.
    std::vector<double> b_a(p_a_grid.size()), var_a0(p_a_grid.size());
    for (std::size_t i = 0; i < p_a_grid.size(); ++i) {
        b_a[i] = invert_class_probability(p_a_grid[i], representative, kappa, rho, cfg);
        var_a0[i] = posterior_variance_A0(representative, kappa, rho, b_a[i], cfg);
    }

    const double horizon = gamma / (1.0 - gamma);
    bool have_best = false;
    double best = 0.0;
    // p_B1 outer, then p_A1, then alpha: with strict improvement this breaks
    // objective ties toward the lowest p_B1, then p_A1, then alpha.
    for (double p_b : p_b_grid) {
        const double b_b = invert_class_probability(p_b, representative, kappa, rho, cfg);
        for (std::size_t i = 0; i < p_a_grid.size(); ++i) {
            const double p_a = p_a_grid[i];
            if (!(p_b < p_a)) continue;
            const double var_a1 = posterior_variance_A1(representative, kappa, rho, b_a[i],
                                                        1.0 - p_b, stats.mean_route_length, cfg);
            for (double alpha : alpha_grid) {
                const double future = future_variance_terms(alpha, p_a, p_b, sigma2, var_a1,
                                                            var_a0[i], stats);
                const double dev_a = b_a[i] - mu;
                const double dev_b = b_b - mu;
                const double objective = alpha * dev_a * dev_a +
                                         (1.0 - alpha) * dev_b * dev_b + sigma2 +
                                         horizon * future;
                if (!have_best || objective < best) {
                    have_best = true;
                    best = objective;
                    policy.alpha = alpha;
                    policy.p_A1 = p_a;
                    policy.p_B1 = p_b;
                    policy.objective = objective;
                }
            }
        }
    }
    if (!have_best) throw std::runtime_error("optimize_policy: empty candidate grid");
    return policy;
}

LognormalBelief representative_belief(const std::vector<LognormalBelief>& beliefs) {
    if (beliefs.empty()) throw std::invalid_argument("representative_belief: no links");
    double mean_log_var = 0.0;
    for (const LognormalBelief& b : beliefs) mean_log_var += b.log_var();
    mean_log_var /= static_cast<double>(beliefs.size());
    return LognormalBelief(-0.5 * mean_log_var, mean_log_var);
}

double representative_kappa(const std::vector<LognormalBelief>& beliefs,
                            const std::vector<double>& kappa) {
    if (beliefs.size() != kappa.size() || beliefs.empty()) {
        throw std::invalid_argument("representative_kappa: dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t m = 0; m < beliefs.size(); ++m) {
        acc += kappa[m] * beliefs[m].natural_mean();
    }
    return acc / static_cast<double>(beliefs.size());
}

}  // namespace caplearn
