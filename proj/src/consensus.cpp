#include "caplearn/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace caplearn {

CommGraph random_comm_graph(int node_count, double target_avg_degree, Rng& rng) {
    if (node_count < 1) throw std::invalid_argument("random_comm_graph: need at least one node");
    CommGraph graph;
    graph.node_count = node_count;
    if (node_count == 1) return graph;

    std::vector<int> order(node_count);
    std::iota(order.begin(), order.end(), 0);
    for (int i = node_count - 1; i > 0; --i) {
        std::swap(order[i], order[rng.uniform_int(0, i)]);
    }

    std::set<std::pair<int, int>> present;
    auto add_edge = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        if (a == b || present.count({a, b})) return false;
        present.insert({a, b});
        graph.edges.emplace_back(a, b);
        return true;
    };
    for (int i = 1; i < node_count; ++i) {
        add_edge(order[i], order[rng.uniform_int(0, i - 1)]);
    }

    const long long complete = 1LL * node_count * (node_count - 1) / 2;
    long long want = std::llround(target_avg_degree * node_count / 2.0);
    want = std::min(std::max<long long>(want, node_count - 1), complete);
    int guard = 0;
    while (static_cast<long long>(graph.edges.size()) < want && guard < 100000) {
        const int a = rng.uniform_int(0, node_count - 1);
        const int b = rng.uniform_int(0, node_count - 1);
        if (!add_edge(a, b)) ++guard;
    }
    return graph;
}

std::vector<std::vector<double>> mixing_matrix(const CommGraph& graph) {
    const int n = graph.node_count;
    std::vector<int> degree(n, 0);
    for (const auto& [a, b] : graph.edges) {
        degree[a] += 1;
        degree[b] += 1;
    }
    const int max_degree = n == 0 ? 0 : *std::max_element(degree.begin(), degree.end());
    const double w = 1.0 / (max_degree + 1.0);
    std::vector<std::vector<double>> mix(n, std::vector<double>(n, 0.0));
    for (const auto& [a, b] : graph.edges) {
        mix[a][b] = w;
        mix[b][a] = w;
    }
    for (int i = 0; i < n; ++i) {
        mix[i][i] = 1.0 - degree[i] * w;
    }
    return mix;
}

int local_class_choice(double sigma2, double h) { return sigma2 > h ? 1 : 0; }

ConsensusState make_consensus_state(int link_count) {
    ConsensusState state;
    state.r.assign(link_count, 0);
    state.r_prev.assign(link_count, 0);
    state.r_hat.assign(link_count, 0.0);
    state.h.assign(link_count, 0.0);
    state.h_prev.assign(link_count, 0.0);
    return state;
}

void consensus_step(ConsensusState& state, const std::vector<double>& sigma2, double alpha,
                    double delta_h, const std::vector<std::vector<double>>& mix) {
    const std::size_t n = sigma2.size();
    if (state.h.size() != n || mix.size() != n) {
        throw std::invalid_argument("consensus_step: dimension mismatch");
    }
    for (std::size_t m = 0; m < n; ++m) {
        state.r[m] = local_class_choice(sigma2[m], state.h[m]);
    }
    std::vector<double> r_hat_next(n, 0.0), h_next(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        double mixed_r = 0.0, mixed_h = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            mixed_r += mix[m][j] * state.r_hat[j];
            mixed_h += mix[m][j] * state.h[j];
        }
        r_hat_next[m] = mixed_r + (state.r[m] - state.r_prev[m]);
        // The dual ascent direction uses the estimate from before this
        // round's tracking update.
        h_next[m] = std::max(0.0, mixed_h + delta_h * (state.r_hat[m] - alpha));
    }
    state.h_prev = state.h;
    state.h = std::move(h_next);
    state.r_hat = std::move(r_hat_next);
    state.r_prev = state.r;
    state.iter += 1;
}

AssignResult assign_classes(const std::vector<double>& sigma2, double alpha,
                            const CommGraph& graph, const ConsensusParams& params) {
    const int n = static_cast<int>(sigma2.size());
    if (graph.node_count != n) {
        throw std::invalid_argument("assign_classes: graph size mismatch");
    }
    AssignResult result;
    const auto mix = mixing_matrix(graph);
    ConsensusState state = make_consensus_state(n);
    for (int i = 1; i <= params.max_iters; ++i) {
        consensus_step(state, sigma2, alpha, params.delta_scale / std::sqrt(i), mix);
        if (i < params.min_iters) continue;
        double change = 0.0;
        for (int m = 0; m < n; ++m) {
            change = std::max(change, std::abs(state.h[m] - state.h_prev[m]));
        }
        if (change <= params.v_h) {
            result.converged = true;
            break;
        }
    }
    result.iters = state.iter;
    result.labels.resize(n);
    int selected = 0;
    for (int m = 0; m < n; ++m) {
        result.labels[m] = local_class_choice(sigma2[m], state.h[m]);
        selected += result.labels[m];
    }
    int positive = 0;
    for (double s : sigma2) positive += s > 0.0 ? 1 : 0;
    const int want = std::min(std::max(1L, std::lround(alpha * n)), static_cast<long>(positive));
    if (!result.converged || selected != want) {
        result.labels = centralized_classes(sigma2, alpha);
        result.used_fallback = true;
    }
    return result;
}

std::vector<int> centralized_classes(const std::vector<double>& sigma2, double alpha) {
    const int n = static_cast<int>(sigma2.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return sigma2[a] > sigma2[b]; });
    int positive = 0;
    for (double s : sigma2) positive += s > 0.0 ? 1 : 0;
    const long want = std::min(std::max(1L, std::lround(alpha * n)), static_cast<long>(positive));
    std::vector<int> labels(n, 0);
    for (long k = 0; k < want; ++k) labels[idx[k]] = 1;
    return labels;
}

}  // namespace caplearn
