#include <cmath>
#include <vector>

#include "doctest.h"

#include "caplearn/inner_loop.hpp"
#include "oracles.hpp"

using namespace caplearn;

TEST_CASE("primal_update is the capped best response") {
    CHECK(primal_update(2.0, 0.5, 1e6) == doctest::Approx(4.0));
    CHECK(primal_update(1.0, 0.0, 500.0) == doctest::Approx(500.0));
    CHECK(primal_update(3.0, 1.5, 1.0) == doctest::Approx(1.0));  // cap binds, 3/1.5 = 2 > 1
}

TEST_CASE("dual_update is the projected price step") {
    CHECK(dual_update(1.0, 0.1, 12.0, 10.0) == doctest::Approx(1.2));
    CHECK(dual_update(0.05, 0.1, 9.0, 10.0) == doctest::Approx(0.0));
    CHECK(dual_update(0.0, 0.5, 10.0, 10.0) == doctest::Approx(0.0));
    CHECK(dual_update(0.3, 0.2, 0.0, 10.0) >= 0.0);
}

TEST_CASE("has_converged uses an inclusive max-norm test") {
    const std::vector<double> a = {1.0, 2.0, 3.0};
    CHECK(has_converged(a, a, 1e-3));
    std::vector<double> b = a;
    b[1] += 0.01;
    CHECK_FALSE(has_converged(b, a, 1e-3));
    b = a;
    b[2] += 1e-3;  // difference exactly at the threshold
    CHECK(has_converged(b, a, 1e-3));
}

namespace {

NetworkInstance single_link_instance(double w, double b) {
    return oracle::make_instance(1, {{0}}, {b}, {w}, {b}, {0.1 * b});
}

}  // namespace

TEST_CASE("make_inner_state wires caps, warm prices and y = A x") {
    const NetworkInstance inst =
        oracle::make_instance(2, {{0, 1}, {1}}, {10.0, 20.0}, {1.0, 2.0}, {8.0, 16.0},
                              {0.8, 1.6});
    const InnerState state = make_inner_state(inst, {10.0, 20.0});
    CHECK(state.x_cap[0] == doctest::Approx(2.0 * (8.0 + 16.0)));
    CHECK(state.x_cap[1] == doctest::Approx(2.0 * 16.0));
    CHECK(state.lambda[0] == doctest::Approx(1.0 / 10.0));
    CHECK(state.lambda[1] == doctest::Approx((1.0 + 2.0) / 20.0));
    CHECK(state.eps[0] == doctest::Approx(0.5 / 10.0));
    CHECK(state.eps[1] == doctest::Approx(0.5 / 20.0));
    CHECK(state.y[0] == doctest::Approx(state.x[0]));
    CHECK(state.y[1] == doctest::Approx(state.x[0] + state.x[1]));
}

TEST_CASE("a KKT point is a fixed point of the iteration") {
    const NetworkInstance inst = single_link_instance(1.0, 1.0);
    InnerState state = make_inner_state(inst, {1.0});
    // Closed form: x = 1, lambda = w / b = 1.
    state.lambda = {1.0};
    state.x = {1.0};
    state.y = {1.0};
    const InnerState before = state;
    step(state, inst);
    CHECK(state.x[0] == doctest::Approx(before.x[0]).epsilon(1e-12));
    CHECK(state.lambda[0] == doctest::Approx(before.lambda[0]).epsilon(1e-12));
    CHECK(state.y[0] == doctest::Approx(before.y[0]).epsilon(1e-12));
}

TEST_CASE("single user on a single link solves in closed form") {
    const NetworkInstance inst = single_link_instance(1.0, 1.0);
    const SolveResult res = solve_rates(inst, {1.0}, 1e-9, 100000);
    CHECK(res.converged);
    CHECK(res.state.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.state.lambda[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("two users share one link by weight") {
    const NetworkInstance inst =
        oracle::make_instance(1, {{0}, {0}}, {8.0}, {1.0, 3.0}, {8.0}, {0.8});
    const SolveResult res = solve_rates(inst, {8.0}, 1e-10, 200000);
    CHECK(res.converged);
    // Water filling: x_n = w_n / lambda with x_1 + x_2 = 8 gives lambda = 1/2.
    CHECK(res.state.x[0] == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(res.state.x[1] == doctest::Approx(6.0).epsilon(1e-5));
    CHECK(res.state.lambda[0] == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("set_b_hat rescales the step sizes") {
    const NetworkInstance inst = single_link_instance(1.0, 4.0);
    InnerState state = make_inner_state(inst, {4.0});
    set_b_hat(state, {8.0});
    CHECK(state.b_hat[0] == doctest::Approx(8.0));
    CHECK(state.eps[0] == doctest::Approx(0.5 / 8.0));
}

TEST_CASE("declared convergence satisfies the KKT conditions") {
    for (std::uint64_t seed : {2u, 5u, 9u}) {
        const NetworkInstance inst = generate_network(seed, 8, 60, 3);
        const SolveResult res = solve_rates(inst, inst.b_true, 1e-3, 200000);
        REQUIRE(res.converged);
        const InnerState& s = res.state;
        for (int m = 0; m < inst.topology.link_count; ++m) {
            CHECK(s.y[m] <= inst.b_true[m] * (1.0 + 1e-2));
            CHECK(std::abs(s.lambda[m] * (s.y[m] - inst.b_true[m])) <=
                  1e-2 * std::max(1.0, inst.b_true[m]));
        }
        for (int n = 0; n < inst.topology.user_count; ++n) {
            if (s.x[n] >= s.x_cap[n] * (1.0 - 1e-9)) continue;
            double price = 0.0;
            for (int m : inst.topology.routes[n]) price += s.lambda[m];
            CHECK(std::abs(inst.w[n] / s.x[n] - price) <= 1e-3);
        }
    }
}

TEST_CASE("solved rates match an independent dual method") {
    for (std::uint64_t seed : {3u, 7u}) {
        const NetworkInstance inst = generate_network(seed, 6, 40, 3);
        const SolveResult res = solve_rates(inst, inst.b_true, 1e-6, 200000);
        REQUIRE(res.converged);
        std::vector<double> caps(inst.topology.user_count);
        for (int n = 0; n < inst.topology.user_count; ++n) {
            double acc = 0.0;
            for (int m : inst.topology.routes[n]) acc += inst.prior[m].natural_mean();
            caps[n] = 2.0 * acc;
        }
        const std::vector<double> reference =
            oracle::num_rates(inst.topology, inst.w, inst.b_true, caps, 60000);
        for (int n = 0; n < inst.topology.user_count; ++n) {
            CHECK(std::abs(res.state.x[n] - reference[n]) <= 0.01 * reference[n]);
        }
    }
}

TEST_CASE("prices stay nonnegative along the trajectory") {
    const NetworkInstance inst = generate_network(13, 6, 40, 3);
    InnerState state = make_inner_state(inst, inst.b_true);
    for (int i = 0; i < 500; ++i) {
        step(state, inst);
        for (double l : state.lambda) CHECK(l >= 0.0);
        for (double x : state.x) CHECK(x > 0.0);
    }
}
