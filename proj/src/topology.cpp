#include "caplearn/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "caplearn/rng.hpp"

namespace caplearn {

Topology Topology::from_routes(int link_count, std::vector<std::vector<int>> routes) {
    Topology topo;
    topo.link_count = link_count;
    topo.user_count = static_cast<int>(routes.size());
    topo.routes = std::move(routes);
    topo.users_of_link.assign(link_count, {});
    for (int n = 0; n < topo.user_count; ++n) {
        const auto& route = topo.routes[n];
        if (route.empty()) {
            throw std::invalid_argument("Topology: user route must be non-empty");
        }
        std::set<int> seen;
        for (int m : route) {
            if (m < 0 || m >= link_count) {
                throw std::invalid_argument("Topology: route references unknown link");
            }
            if (!seen.insert(m).second) {
                throw std::invalid_argument("Topology: route links must be distinct");
            }
            topo.users_of_link[m].push_back(n);
        }
    }
    for (int m = 0; m < link_count; ++m) {
        if (topo.users_of_link[m].empty()) {
            throw std::invalid_argument("Topology: link without users");
        }
    }
    return topo;
}

bool Topology::uses(int link, int user) const {
    const auto& route = routes[user];
    return std::find(route.begin(), route.end(), link) != route.end();
}

GraphStats graph_stats(const Topology& topo) {
    GraphStats stats;
    std::size_t total_len = 0;
    for (const auto& route : topo.routes) total_len += route.size();
    stats.mean_route_length =
        static_cast<double>(total_len) / static_cast<double>(topo.user_count);

    // Row m of A A^T is nonzero at column l iff links m and l share a user.
    std::size_t total_coupled = 0;
    std::vector<char> coupled(topo.link_count);
    for (int m = 0; m < topo.link_count; ++m) {
        std::fill(coupled.begin(), coupled.end(), 0);
        for (int n : topo.users_of_link[m]) {
            for (int l : topo.routes[n]) coupled[l] = 1;
        }
        total_coupled += static_cast<std::size_t>(
            std::count(coupled.begin(), coupled.end(), 1));
    }
    stats.mean_coupled_links =
        static_cast<double>(total_coupled) / static_cast<double>(topo.link_count);
    return stats;
}

namespace {

struct NodeGraph {
    int node_count = 0;
    std::vector<std::pair<int, int>> edges;          // edge index == link index
    std::vector<std::vector<std::pair<int, int>>> adj;  // node -> (neighbor, edge)

    bool adjacent(int a, int b) const {
        for (const auto& [nb, e] : adj[a]) {
            if (nb == b) return true;
        }
        return false;
    }
};

NodeGraph random_link_graph(int link_count, int nodes, Rng& rng) {
    NodeGraph g;
    g.node_count = nodes;
    g.adj.assign(nodes, {});
    std::set<std::pair<int, int>> present;
    auto add_edge = [&](int a, int b) {
        const int e = static_cast<int>(g.edges.size());
        g.edges.emplace_back(a, b);
        g.adj[a].emplace_back(b, e);
        g.adj[b].emplace_back(a, e);
        present.insert({std::min(a, b), std::max(a, b)});
    };

    // Random spanning tree, then extra edges up to the requested link count.
    std::vector<int> order(nodes);
    for (int i = 0; i < nodes; ++i) order[i] = i;
    for (int i = nodes - 1; i > 0; --i) {
        std::swap(order[i], order[rng.uniform_int(0, i)]);
    }
    for (int i = 1; i < nodes && static_cast<int>(g.edges.size()) < link_count; ++i) {
        add_edge(order[i], order[rng.uniform_int(0, i - 1)]);
    }
    while (static_cast<int>(g.edges.size()) < link_count) {
        const int a = rng.uniform_int(0, nodes - 1);
        const int b = rng.uniform_int(0, nodes - 1);
        if (a == b) continue;
        if (present.count({std::min(a, b), std::max(a, b)})) continue;
        add_edge(a, b);
    }
    return g;
}

// Shortest path between s and t as a list of edge (= link) indices; empty if
// unreachable.
std::vector<int> shortest_route(const NodeGraph& g, int s, int t) {
    std::vector<int> dist(g.node_count, -1);
    std::vector<int> prev_node(g.node_count, -1);
    std::vector<int> prev_edge(g.node_count, -1);
    std::deque<int> queue;
    dist[s] = 0;
    queue.push_back(s);
    while (!queue.empty()) {
        const int a = queue.front();
        queue.pop_front();
        if (a == t) break;
        for (const auto& [b, e] : g.adj[a]) {
            if (dist[b] < 0) {
                dist[b] = dist[a] + 1;
                prev_node[b] = a;
                prev_edge[b] = e;
                queue.push_back(b);
            }
        }
    }
    std::vector<int> route;
    if (dist[t] < 0) return route;
    for (int a = t; a != s; a = prev_node[a]) route.push_back(prev_edge[a]);
    std::reverse(route.begin(), route.end());
    return route;
}

}  // namespace

NetworkInstance generate_network(std::uint64_t seed, int link_count, int user_count,
                                 int target_route_length) {
    if (link_count < 2 || user_count < 1 || target_route_length < 2) {
        throw std::invalid_argument("generate_network: need M >= 2, N >= 1, target >= 2");
    }
    Rng rng(mix_seed(seed, 0x746f706fULL));
    const double rho = 0.95;

    const int graph_attempts = 40;
    std::vector<std::vector<int>> best_routes;
    bool have_fallback = false;
    std::vector<std::vector<int>> fallback_routes;
    int kept_links = link_count;

    // Edge density controls path lengths: start moderately dense and move
    // toward a spanning tree (nodes = M + 1) until routes of the requested
    // length exist.
    int node_floor = 2;
    while (node_floor * (node_floor - 1) / 2 < link_count) ++node_floor;
    const int node_cap = link_count + 1;
    const int node_start = std::clamp(
        static_cast<int>(std::lround(link_count * (1.0 - 1.0 / target_route_length))) + 1,
        node_floor, node_cap);

    for (int attempt = 0; attempt < graph_attempts; ++attempt) {
        const int nodes = std::min(node_start + attempt, node_cap);
        const NodeGraph g = random_link_graph(link_count, nodes, rng);
        std::vector<std::vector<int>> routes;
        routes.reserve(user_count);
        std::size_t total_len = 0;
        bool failed = false;
        auto draw_route = [&](int exact_len) -> std::vector<int> {
            // exact_len < 0 accepts any length within +/-1 of the target.
            for (int tries = 0; tries < 4000; ++tries) {
                const int s = rng.uniform_int(0, g.node_count - 1);
                const int t = rng.uniform_int(0, g.node_count - 1);
                if (s == t || g.adjacent(s, t)) continue;
                std::vector<int> route = shortest_route(g, s, t);
                if (route.empty()) continue;
                const int len = static_cast<int>(route.size());
                if (exact_len >= 0 ? len == exact_len
                                   : std::abs(len - target_route_length) <= 1) {
                    return route;
                }
            }
            return {};
        };
        for (int n = 0; n < user_count; ++n) {
            std::vector<int> route = draw_route(-1);
            if (route.empty()) {
                failed = true;
                break;
            }
            total_len += route.size();
            routes.push_back(std::move(route));
        }
        if (failed) continue;

        // Nudge the realized mean toward the target by replacing users on the
        // heavy side with exact-length routes; accept within +/-0.5.
        const double band = 0.5;
        for (int fix = 0; fix < 10 * user_count; ++fix) {
            const double mean = static_cast<double>(total_len) / user_count;
            if (std::abs(mean - target_route_length) <= 0.15) break;
            const bool too_long = mean > target_route_length;
            int idx = -1;
            for (int n = 0; n < user_count; ++n) {
                const int len = static_cast<int>(routes[n].size());
                if ((too_long && len > target_route_length) ||
                    (!too_long && len < target_route_length)) {
                    idx = n;
                    break;
                }
            }
            if (idx < 0) break;
            std::vector<int> route = draw_route(target_route_length);
            if (route.empty()) break;
            total_len -= routes[idx].size();
            total_len += route.size();
            routes[idx] = std::move(route);
        }
        const double mean = static_cast<double>(total_len) / user_count;
        if (std::abs(mean - target_route_length) > band) continue;

        std::vector<char> used(link_count, 0);
        for (const auto& route : routes) {
            for (int m : route) used[m] = 1;
        }
        const int used_count =
            static_cast<int>(std::count(used.begin(), used.end(), 1));
        if (used_count == link_count) {
            best_routes = std::move(routes);
            break;
        }
        if (!have_fallback) {
            // Remember a valid attempt with unused links; those links get
            // removed if no fully-covered attempt shows up.
            have_fallback = true;
            std::vector<int> remap(link_count, -1);
            int next = 0;
            for (int m = 0; m < link_count; ++m) {
                if (used[m]) remap[m] = next++;
            }
            for (auto& route : routes) {
                for (int& m : route) m = remap[m];
            }
            fallback_routes = std::move(routes);
            kept_links = used_count;
        }
    }

    if (best_routes.empty()) {
        if (!have_fallback) {
            std::ostringstream oss;
            oss << "generate_network: could not place routes of target length "
                << target_route_length << " (seed=" << seed << ", M=" << link_count
                << ", N=" << user_count << ")";
            throw std::runtime_error(oss.str());
        }
        best_routes = std::move(fallback_routes);
    } else {
        kept_links = link_count;
    }

    NetworkInstance inst;
    inst.seed = seed;
    inst.topology = Topology::from_routes(kept_links, std::move(best_routes));
    inst.congestion.rho = rho;
    inst.congestion.kappa.resize(kept_links);
    inst.b_true.resize(kept_links);
    inst.prior.reserve(kept_links);
    for (int m = 0; m < kept_links; ++m) {
        const double users = static_cast<double>(inst.topology.users_on(m));
        const LognormalBelief prior =
            LognormalBelief::from_natural(2.7 * users, 0.27 * users);
        inst.prior.push_back(prior);
        inst.b_true[m] = std::exp(prior.log_mean() + prior.log_std() * rng.normal());
        inst.congestion.kappa[m] = 5.0 / ((1.0 - rho) * inst.b_true[m]);
    }
    // Weight scale keeps the dual iteration stable: with the 2.7 N_m prior
    // recipe the mean per-user rate is ~2.7, and the synchronous dual step
    // eps = 0.5/b needs mean weights above ~0.675 L_R (Gershgorin bound on
    // the dual Jacobian). Factor 2 of margin, 3x per-user spread.
    const double w_scale = 1.35 * target_route_length;
    inst.w.resize(inst.topology.user_count);
    for (int n = 0; n < inst.topology.user_count; ++n) {
        inst.w[n] = w_scale * rng.uniform(0.5, 1.5);
    }
    return inst;
}

std::string NetworkInstance::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["links"] = topology.link_count;
    j["users"] = topology.user_count;
    j["routes"] = topology.routes;
    j["b_true"] = b_true;
    j["w"] = w;
    std::vector<double> log_means, log_vars;
    for (const auto& p : prior) {
        log_means.push_back(p.log_mean());
        log_vars.push_back(p.log_var());
    }
    j["prior_log_mean"] = log_means;
    j["prior_log_var"] = log_vars;
    j["kappa"] = congestion.kappa;
    j["rho"] = congestion.rho;
    return j.dump(2);
}

NetworkInstance NetworkInstance::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    NetworkInstance inst;
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.topology = Topology::from_routes(
        j.at("links").get<int>(), j.at("routes").get<std::vector<std::vector<int>>>());
    inst.b_true = j.at("b_true").get<std::vector<double>>();
    inst.w = j.at("w").get<std::vector<double>>();
    const auto log_means = j.at("prior_log_mean").get<std::vector<double>>();
    const auto log_vars = j.at("prior_log_var").get<std::vector<double>>();
    for (std::size_t m = 0; m < log_means.size(); ++m) {
        inst.prior.emplace_back(log_means[m], log_vars[m]);
    }
    inst.congestion.kappa = j.at("kappa").get<std::vector<double>>();
    inst.congestion.rho = j.at("rho").get<double>();
    return inst;
}

void NetworkInstance::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << to_json() << "\n";
}

NetworkInstance NetworkInstance::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream oss;
    oss << in.rdbuf();
    return from_json(oss.str());
}

}  // namespace caplearn
