#include "caplearn/feedback.hpp"

#include <stdexcept>

namespace caplearn {

bool check_consistency(const std::vector<int>& z, const std::vector<int>& v,
                       const Topology& topo) {
    if (static_cast<int>(z.size()) != topo.link_count ||
        static_cast<int>(v.size()) != topo.user_count) {
        throw std::invalid_argument("check_consistency: dimension mismatch");
    }
    // psi^1_n: a reporting user must have a congested link on its route.
    for (int n = 0; n < topo.user_count; ++n) {
        if (v[n] != 1) continue;
        bool any = false;
        for (int m : topo.routes[n]) {
            if (z[m] == 1) {
                any = true;
                break;
            }
        }
        if (!any) return false;
    }
    // psi^0_m: a link with no reporting user must be uncongested.
    for (int m = 0; m < topo.link_count; ++m) {
        if (z[m] != 1) continue;
        bool reported = false;
        for (int n : topo.users_of_link[m]) {
            if (v[n] == 1) {
                reported = true;
                break;
            }
        }
        if (!reported) return false;
    }
    return true;
}

FeedbackSample sample_feedback(const std::vector<double>& y, const NetworkInstance& inst,
                               Rng& rng) {
    const Topology& topo = inst.topology;
    FeedbackSample fb;
    fb.z.resize(topo.link_count);
    for (int m = 0; m < topo.link_count; ++m) {
        const double p = inst.congestion.probability(m, y[m], inst.b_true[m]);
        fb.z[m] = rng.bernoulli(p) ? 1 : 0;
    }
    fb.v.assign(topo.user_count, 0);
    for (int n = 0; n < topo.user_count; ++n) {
        bool congested_route = false;
        for (int m : topo.routes[n]) {
            if (fb.z[m] == 1) {
                congested_route = true;
                break;
            }
        }
        if (congested_route) fb.v[n] = rng.bernoulli(0.5) ? 1 : 0;
    }
    // Cover condition (b): every congested link needs at least one reporter.
    for (int m = 0; m < topo.link_count; ++m) {
        if (fb.z[m] != 1) continue;
        bool reported = false;
        for (int n : topo.users_of_link[m]) {
            if (fb.v[n] == 1) {
                reported = true;
                break;
            }
        }
        if (!reported) {
            const auto& users = topo.users_of_link[m];
            fb.v[users[rng.uniform_int(0, static_cast<int>(users.size()) - 1)]] = 1;
        }
    }
    return fb;
}

}  // namespace caplearn
