#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "caplearn/belief.hpp"
#include "caplearn/congestion.hpp"

namespace caplearn {

/// Routing structure: M links, N users, each user with an ordered route of
/// distinct links. The M x N incidence matrix A is implied by the routes
/// (a_mn = 1 iff link m is on user n's route).
struct Topology {
    int link_count = 0;
    int user_count = 0;
    std::vector<std::vector<int>> routes;         // per user
    std::vector<std::vector<int>> users_of_link;  // per link, derived

    static Topology from_routes(int link_count, std::vector<std::vector<int>> routes);

    bool uses(int link, int user) const;

    /// Number of users on link m (a_m^T 1).
    int users_on(int link) const { return static_cast<int>(users_of_link[link].size()); }
};

struct GraphStats {
    double mean_route_length = 0.0;   // L_R
    double mean_coupled_links = 0.0;  // L_C: mean nonzero count over rows of A A^T
};

GraphStats graph_stats(const Topology& topo);

/// A generated network: topology plus true capacities, utility weights,
/// per-link priors and the congestion likelihood parameters.
struct NetworkInstance {
    Topology topology;
    std::vector<double> b_true;
    std::vector<double> w;
    std::vector<LognormalBelief> prior;
    SigmoidCongestionModel congestion;
    std::uint64_t seed = 0;

    std::string to_json() const;
    static NetworkInstance from_json(const std::string& text);

    void save(const std::string& path) const;
    static NetworkInstance load(const std::string& path);
};

/// Generate a random connected network with `link_count` links, assign each
/// of `user_count` users a shortest-path route between two random non-adjacent
/// nodes, targeting a mean route length of `target_route_length` (within
/// +/- 0.5). Priors follow mu0 = 2.7 N_m, sigma0 = 0.27 N_m; b_true is drawn
/// from the prior; kappa_m = 5 / ((1 - rho) b_true_m) with rho = 0.95.
/// Deterministic for a fixed seed. Throws if routes of the requested length
/// cannot be placed.
NetworkInstance generate_network(std::uint64_t seed, int link_count, int user_count,
                                 int target_route_length);

}  // namespace caplearn
