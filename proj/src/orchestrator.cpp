#include "caplearn/orchestrator.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "caplearn/feedback.hpp"
#include "caplearn/metrics.hpp"
#include "json.hpp"

namespace caplearn {

namespace {

constexpr std::uint64_t kFeedbackTag = 0x66656564ULL;  // "feed"
constexpr std::uint64_t kCommTag = 0x636f6d6dULL;      // "comm"

void append_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

void append_int(std::string& out, int v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%d", v);
    out += buf;
}

void validate(const SystemParams& p) {
    if (p.sample_period < 1 || p.dataset_cap < 1 || p.outer_step_cap < 1 ||
        !(p.eps_scale > 0.0) || !(p.v_lambda > 0.0)) {
        throw std::invalid_argument("SystemParams: bad values");
    }
}

LognormalBelief policy_belief(const std::vector<LognormalBelief>& beliefs,
                              const SystemParams& params) {
    if (params.policy_belief_var > 0.0) {
        return LognormalBelief::from_natural(1.0, std::sqrt(params.policy_belief_var));
    }
    return representative_belief(beliefs);
}

}  // namespace

std::string SystemParams::to_json() const {
    nlohmann::json j;
    j["eps_scale"] = eps_scale;
    j["sample_period"] = sample_period;
    j["v_lambda"] = v_lambda;
    j["v_h"] = v_h;
    j["delta_h_scale"] = delta_h_scale;
    j["ep_max_iters"] = ep_max_iters;
    j["ep_damping"] = ep_damping;
    j["dataset_cap"] = dataset_cap;
    j["quad"] = {{"flat_nodes", quad.flat_nodes}, {"mid_nodes", quad.mid_nodes}};
    j["lambda_zero_tol"] = lambda_zero_tol;
    j["outer_step_cap"] = outer_step_cap;
    j["consensus_max_iters"] = consensus_max_iters;
    j["consensus_min_iters"] = consensus_min_iters;
    j["comm_avg_degree"] = comm_avg_degree;
    j["reoptimize_policy"] = reoptimize_policy;
    j["policy_belief_var"] = policy_belief_var;
    j["oracle_max_iters"] = oracle_max_iters;
    j["oracle_v_lambda"] = oracle_v_lambda;
    return j.dump(2);
}

SystemParams SystemParams::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    SystemParams p;
    p.eps_scale = j.value("eps_scale", p.eps_scale);
    p.sample_period = j.value("sample_period", p.sample_period);
    p.v_lambda = j.value("v_lambda", p.v_lambda);
    p.v_h = j.value("v_h", p.v_h);
    p.delta_h_scale = j.value("delta_h_scale", p.delta_h_scale);
    p.ep_max_iters = j.value("ep_max_iters", p.ep_max_iters);
    p.ep_damping = j.value("ep_damping", p.ep_damping);
    p.dataset_cap = j.value("dataset_cap", p.dataset_cap);
    if (j.contains("quad")) {
        p.quad.flat_nodes = j["quad"].value("flat_nodes", p.quad.flat_nodes);
        p.quad.mid_nodes = j["quad"].value("mid_nodes", p.quad.mid_nodes);
    }
    p.lambda_zero_tol = j.value("lambda_zero_tol", p.lambda_zero_tol);
    p.outer_step_cap = j.value("outer_step_cap", p.outer_step_cap);
    p.consensus_max_iters = j.value("consensus_max_iters", p.consensus_max_iters);
    p.consensus_min_iters = j.value("consensus_min_iters", p.consensus_min_iters);
    p.comm_avg_degree = j.value("comm_avg_degree", p.comm_avg_degree);
    p.reoptimize_policy = j.value("reoptimize_policy", p.reoptimize_policy);
    p.policy_belief_var = j.value("policy_belief_var", p.policy_belief_var);
    p.oracle_max_iters = j.value("oracle_max_iters", p.oracle_max_iters);
    p.oracle_v_lambda = j.value("oracle_v_lambda", p.oracle_v_lambda);
    return p;
}

std::string Trace::csv() const {
    std::string out = "t,outer_updates,e_links,e_users";
    const char* groups[] = {"mu", "sigma2", "b_hat", "y", "lambda"};
    for (const char* g : groups) {
        for (int m = 0; m < link_count; ++m) {
            out += ',';
            out += g;
            out += '_';
            append_int(out, m);
        }
    }
    out += '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
        append_int(out, t[i]);
        out += ',';
        append_int(out, outer_updates[i]);
        out += ',';
        append_double(out, e_links[i]);
        out += ',';
        append_double(out, e_users[i]);
        for (const auto* series : {&mu, &sigma2, &b_hat, &y, &lambda}) {
            for (double v : (*series)[i]) {
                out += ',';
                append_double(out, v);
            }
        }
        out += '\n';
    }
    return out;
}

void Trace::write_csv(const std::string& path) const {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("Trace::write_csv: cannot open " + path);
    const std::string text = csv();
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!file) throw std::runtime_error("Trace::write_csv: write failed for " + path);
}

RunState init_run(const NetworkInstance& inst, const RunConfig& cfg, const SystemParams& params) {
    validate(params);
    const int link_count = inst.topology.link_count;
    RunState state;
    state.base_priors = inst.prior;
    state.beliefs = inst.prior;
    state.b_hat.reserve(link_count);
    for (const LognormalBelief& b : inst.prior) state.b_hat.push_back(b.natural_mean());
    state.inner = make_inner_state(inst, state.b_hat, params.eps_scale);
    Rng comm_rng(mix_seed(cfg.seed, kCommTag));
    state.comm = random_comm_graph(link_count, params.comm_avg_degree, comm_rng);
    state.policy = cfg.policy;
    if (cfg.policy == PolicyKind::Foresighted) {
        state.mf = optimize_policy(policy_belief(state.beliefs, params),
                                   representative_kappa(state.beliefs, inst.congestion.kappa),
                                   inst.congestion.rho, graph_stats(inst.topology), cfg.gamma,
                                   link_count, params.quad);
    }
    return state;
}

void record_observation(RunState& state, const FeedbackSample& fb, const NetworkInstance& inst,
                        const SystemParams& params) {
    state.dataset.push_back(Episode::from_feedback(state.inner.y, fb, inst.topology));
    state.episodes_since_outer += 1;
    if (static_cast<int>(state.dataset.size()) > params.dataset_cap) {
        evict_episode(state.dataset.front(), state.base_priors, &state.ep_diag);
        state.dataset.erase(state.dataset.begin());
    }
}

void outer_update(RunState& state, const NetworkInstance& inst, const SystemParams& params) {
    state.beliefs = run_ep(state.dataset, state.base_priors, inst.congestion, params.ep(),
                           &state.ep_diag);
    const int link_count = inst.topology.link_count;

    std::vector<double> sigma2(link_count);
    for (int m = 0; m < link_count; ++m) {
        // A link priced at zero is not a bottleneck: its capacity does not
        // affect the allocation, so it never competes for class A.
        sigma2[m] = state.inner.lambda[m] < params.lambda_zero_tol
                        ? 0.0
                        : state.beliefs[m].natural_var();
    }

    const bool greedy_rule =
        state.policy == PolicyKind::Greedy || state.mf.degenerate_greedy;
    std::vector<double> b_hat(link_count);
    if (greedy_rule) {
        for (int m = 0; m < link_count; ++m) b_hat[m] = state.beliefs[m].natural_mean();
    } else {
        if (params.reoptimize_policy) {
            state.mf = optimize_policy(
                policy_belief(state.beliefs, params),
                representative_kappa(state.beliefs, inst.congestion.kappa),
                inst.congestion.rho, graph_stats(inst.topology), state.mf.gamma, link_count,
                params.quad);
        }
        const AssignResult classes =
            assign_classes(sigma2, state.mf.alpha, state.comm, params.consensus());
        for (int m = 0; m < link_count; ++m) {
            const double target = classes.labels[m] == 1 ? state.mf.p_A1 : state.mf.p_B1;
            try {
                b_hat[m] = invert_class_probability(target, state.beliefs[m],
                                                    inst.congestion.kappa[m],
                                                    inst.congestion.rho, params.quad);
            } catch (const std::exception& e) {
                throw std::runtime_error("outer_update: link " + std::to_string(m) + ": " +
                                         e.what());
            }
        }
    }
    set_b_hat(state.inner, b_hat);
    state.b_hat = std::move(b_hat);
    state.outer_updates += 1;
    state.steps_since_outer = 0;
    state.episodes_since_outer = 0;
}

std::vector<double> oracle_rates(const NetworkInstance& inst, const SystemParams& params) {
    SolveResult result = solve_rates(inst, inst.b_true, params.oracle_v_lambda,
                                     params.oracle_max_iters, params.eps_scale);
    if (!result.converged) {
        throw std::runtime_error("oracle_rates: inner loop did not converge in " +
                                 std::to_string(params.oracle_max_iters) + " iterations");
    }
    return result.state.x;
}

Trace run(const NetworkInstance& inst, const RunConfig& cfg, const SystemParams& params) {
    if (cfg.total_steps < 1) throw std::invalid_argument("run: total_steps must be >= 1");
    RunState state = init_run(inst, cfg, params);
    Rng fb_rng(mix_seed(cfg.seed, kFeedbackTag));
    const std::vector<double> x_star = oracle_rates(inst, params);

    const int link_count = inst.topology.link_count;
    Trace trace;
    trace.link_count = link_count;
    trace.user_count = inst.topology.user_count;
    trace.t.reserve(cfg.total_steps);
    trace.outer_updates.reserve(cfg.total_steps);
    trace.e_links.reserve(cfg.total_steps);
    trace.e_users.reserve(cfg.total_steps);
    trace.mu.reserve(cfg.total_steps);
    trace.sigma2.reserve(cfg.total_steps);
    trace.b_hat.reserve(cfg.total_steps);
    trace.y.reserve(cfg.total_steps);
    trace.lambda.reserve(cfg.total_steps);

    std::vector<double> prev_lambda;
    for (int t = 1; t <= cfg.total_steps; ++t) {
        try {
            prev_lambda = state.inner.lambda;
            step(state.inner, inst);
            state.t = t;
            state.steps_since_outer += 1;
            if (t % params.sample_period == 0) {
                const FeedbackSample fb = sample_feedback(state.inner.y, inst, fb_rng);
                record_observation(state, fb, inst, params);
                if (has_converged(state.inner.lambda, prev_lambda, params.v_lambda) ||
                    state.steps_since_outer >= params.outer_step_cap) {
                    outer_update(state, inst, params);
                }
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("run: failed at t=" + std::to_string(t) + " after " +
                                     std::to_string(state.outer_updates) +
                                     " outer updates: " + e.what());
        }
        trace.t.push_back(t);
        trace.outer_updates.push_back(state.outer_updates);
        std::vector<double> mu(link_count), s2(link_count);
        for (int m = 0; m < link_count; ++m) {
            mu[m] = state.beliefs[m].natural_mean();
            s2[m] = state.beliefs[m].natural_var();
        }
        trace.e_links.push_back(e_links(mu, inst.b_true));
        trace.e_users.push_back(e_users(state.inner.x, x_star));
        trace.mu.push_back(std::move(mu));
        trace.sigma2.push_back(std::move(s2));
        trace.b_hat.push_back(state.b_hat);
        trace.y.push_back(state.inner.y);
        trace.lambda.push_back(state.inner.lambda);
    }
    return trace;
}

}  // namespace caplearn
