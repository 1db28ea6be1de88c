#include "caplearn/inner_loop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace caplearn {

double primal_update(double w, double route_price, double x_cap) {
    if (route_price <= 0.0) return x_cap;
    return std::min(w / route_price, x_cap);
}

double dual_update(double lambda, double eps, double y, double b_hat) {
    return std::max(0.0, lambda + eps * (y - b_hat));
}

InnerState make_inner_state(const NetworkInstance& inst, std::vector<double> b_hat,
                            double eps_scale) {
    const Topology& topo = inst.topology;
    InnerState s;
    s.eps_scale = eps_scale;
    s.x.assign(topo.user_count, 0.0);
    s.y.assign(topo.link_count, 0.0);
    s.x_cap.resize(topo.user_count);
    for (int n = 0; n < topo.user_count; ++n) {
        double prior_sum = 0.0;
        for (int m : topo.routes[n]) prior_sum += inst.prior[m].natural_mean();
        s.x_cap[n] = 2.0 * prior_sum;
    }
    // Warm-started prices: the single-bottleneck value sum(w_n)/b_hat_m
    // overestimates shared-route prices, so the iteration approaches the
    // fixed point from above instead of spiking through lambda = 0 (where the
    // capped rates would drive an enormous first correction).
    s.lambda.resize(topo.link_count);
    for (int m = 0; m < topo.link_count; ++m) {
        double weight_sum = 0.0;
        for (int n : topo.users_of_link[m]) weight_sum += inst.w[n];
        s.lambda[m] = weight_sum / b_hat[m];
    }
    set_b_hat(s, b_hat);
    refresh_primal(s, inst);
    return s;
}

void set_b_hat(InnerState& state, const std::vector<double>& b_hat) {
    state.b_hat = b_hat;
    state.eps.resize(b_hat.size());
    for (std::size_t m = 0; m < b_hat.size(); ++m) {
        if (!(b_hat[m] > 0.0)) throw std::invalid_argument("set_b_hat: b_hat must be > 0");
        state.eps[m] = state.eps_scale / b_hat[m];
    }
}

void refresh_primal(InnerState& state, const NetworkInstance& inst) {
    const Topology& topo = inst.topology;
    for (int n = 0; n < topo.user_count; ++n) {
        double price = 0.0;
        for (int m : topo.routes[n]) price += state.lambda[m];
        state.x[n] = primal_update(inst.w[n], price, state.x_cap[n]);
    }
    std::fill(state.y.begin(), state.y.end(), 0.0);
    for (int n = 0; n < topo.user_count; ++n) {
        for (int m : topo.routes[n]) state.y[m] += state.x[n];
    }
}

void step(InnerState& state, const NetworkInstance& inst) {
    refresh_primal(state, inst);
    for (int m = 0; m < inst.topology.link_count; ++m) {
        state.lambda[m] = dual_update(state.lambda[m], state.eps[m], state.y[m], state.b_hat[m]);
    }
}

bool has_converged(const std::vector<double>& lambda, const std::vector<double>& prev_lambda,
                   double v_lambda) {
    for (std::size_t m = 0; m < lambda.size(); ++m) {
        if (std::abs(lambda[m] - prev_lambda[m]) > v_lambda) return false;
    }
    return true;
}

SolveResult solve_rates(const NetworkInstance& inst, const std::vector<double>& b_hat,
                        double v_lambda, int max_iters, double eps_scale) {
    SolveResult res;
    res.state = make_inner_state(inst, b_hat, eps_scale);
    std::vector<double> prev = res.state.lambda;
    for (int i = 0; i < max_iters; ++i) {
        prev = res.state.lambda;
        step(res.state, inst);
        ++res.iters;
        if (has_converged(res.state.lambda, prev, v_lambda)) {
            res.converged = true;
            break;
        }
    }
    // Align x and y with the final prices so KKT conditions can be checked
    // directly on the returned state.
    refresh_primal(res.state, inst);
    return res;
}

}  // namespace caplearn
