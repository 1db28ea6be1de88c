#pragma once

#include <vector>

#include "caplearn/topology.hpp"

namespace caplearn {

/// State of the primal-dual rate allocation iteration for a fixed capacity
/// estimate b_hat. The per-link step size is eps_scale / b_hat_m and the
/// per-user rate is capped at x_cap to keep the first iterations bounded
/// while prices are still zero.
struct InnerState {
    std::vector<double> lambda;  // per-link price, >= 0
    std::vector<double> x;       // per-user rate
    std::vector<double> y;       // per-link aggregate rate, y = A x
    std::vector<double> eps;     // per-link dual step size
    std::vector<double> b_hat;   // per-link capacity estimate
    std::vector<double> x_cap;   // per-user rate cap
    double eps_scale = 0.5;
};

/// Best response of one user: argmax of w log x - x q, clamped to the cap.
double primal_update(double w, double route_price, double x_cap);

/// Price update of one link: projection of lambda + eps (y - b_hat) onto the
/// nonnegative half-line.
double dual_update(double lambda, double eps, double y, double b_hat);

/// Fresh state with warm-started prices lambda_m = sum of attached weights
/// over b_hat_m (an overestimate, so the transient approaches equilibrium
/// from above); x and y are filled by an initial primal pass so y = A x holds
/// from the start. x_cap_n = 2 * sum of prior means on n's route.
InnerState make_inner_state(const NetworkInstance& inst, std::vector<double> b_hat,
                            double eps_scale = 0.5);

/// Swap in a new capacity estimate and recompute the per-link step sizes.
void set_b_hat(InnerState& state, const std::vector<double>& b_hat);

/// Recompute x from the current prices and refresh y = A x (no price change).
void refresh_primal(InnerState& state, const NetworkInstance& inst);

/// One synchronous iteration: all primal updates with prices from this step,
/// y refresh, then all dual updates.
void step(InnerState& state, const NetworkInstance& inst);

/// Max-norm price-change test, inclusive threshold.
bool has_converged(const std::vector<double>& lambda, const std::vector<double>& prev_lambda,
                   double v_lambda);

struct SolveResult {
    InnerState state;
    bool converged = false;
    int iters = 0;
};

/// Iterate until the price change stays within v_lambda (or max_iters), then
/// refresh the primal once so the returned x is the best response to the
/// final prices.
SolveResult solve_rates(const NetworkInstance& inst, const std::vector<double>& b_hat,
                        double v_lambda, int max_iters, double eps_scale = 0.5);

}  // namespace caplearn
