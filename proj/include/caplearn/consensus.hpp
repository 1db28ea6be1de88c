#pragma once

#include <utility>
#include <vector>

#include "caplearn/rng.hpp"

namespace caplearn {

/// Undirected communication graph over the M link processes.
struct CommGraph {
    int node_count = 0;
    std::vector<std::pair<int, int>> edges;
};

/// Random connected graph (spanning tree plus random extra edges) with the
/// requested average degree, capped at the complete graph.
CommGraph random_comm_graph(int node_count, double target_avg_degree, Rng& rng);

/// Dense I - L for the normalized Laplacian with uniform edge weights
/// 1 / (max_degree + 1): symmetric, rows summing to one, nonnegative.
std::vector<std::vector<double>> mixing_matrix(const CommGraph& graph);

/// Local selection given the link's dual variable copy: class A iff the
/// variance strictly exceeds h (ties stay in class B).
int local_class_choice(double sigma2, double h);

struct ConsensusState {
    std::vector<int> r;         // current class indicator
    std::vector<int> r_prev;    // previous indicator, for the delta input
    std::vector<double> r_hat;  // local estimates of mean(r)
    std::vector<double> h;      // local dual variable copies
    std::vector<double> h_prev; // previous h, for the stopping test
    int iter = 0;
};

ConsensusState make_consensus_state(int link_count);

/// One synchronous round: r from the old h, then
///   r_hat <- (I - L) r_hat + (r - r_prev)
///   h     <- ((I - L) h + delta_h (r_hat_old - alpha 1))^+
void consensus_step(ConsensusState& state, const std::vector<double>& sigma2, double alpha,
                    double delta_h, const std::vector<std::vector<double>>& mix);

struct ConsensusParams {
    double v_h = 1e-3;          // stopping threshold on the h change
    double delta_scale = 0.1;   // delta_h^i = delta_scale / sqrt(i)
    int min_iters = 10;
    int max_iters = 5000;
};

struct AssignResult {
    std::vector<int> labels;  // 1 = class A
    bool converged = false;
    bool used_fallback = false;
    int iters = 0;
};

/// Runs the consensus iteration until every |h_m^i - h_m^(i-1)| <= V_h (past
/// the burn-in) or max_iters. Falls back to the centralized sort when the
/// iteration does not converge or the selected cardinality is off.
AssignResult assign_classes(const std::vector<double>& sigma2, double alpha,
                            const CommGraph& graph, const ConsensusParams& params = {});

/// Reference selection: the min(round(alpha M) max 1, #positive) links with
/// the largest variances, ties broken by index.
std::vector<int> centralized_classes(const std::vector<double>& sigma2, double alpha);

}  // namespace caplearn
