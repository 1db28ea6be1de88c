#pragma once

#include <vector>

#include "caplearn/rng.hpp"
#include "caplearn/topology.hpp"

namespace caplearn {

/// One environment observation: per-link congestion events z and the user
/// feedback vector v, always mutually consistent:
///   (a) v_n = 1 only if some link on n's route has z_m = 1;
///   (b) z_m = 1 only if some user of m has v_n = 1.
struct FeedbackSample {
    std::vector<int> z;
    std::vector<int> v;
};

/// Evaluates the consistency indicator Psi_v(z): the product of
/// psi1_n(z) = 1 - prod_{m in route(n)} (1 - z_m) over users with v_n = 1 and
/// psi0_m(z_m) = 1 - z_m over links whose users all have v_n = 0.
bool check_consistency(const std::vector<int>& z, const std::vector<int>& v,
                       const Topology& topo);

/// Draws z_m ~ Bernoulli(sigma(kappa_m (y_m - rho b_true_m))) and a feedback
/// vector from the consistent set: users with a congested link report with
/// probability 1/2, then every congested link lacking a reporter flips one of
/// its users. The result always passes check_consistency.
FeedbackSample sample_feedback(const std::vector<double>& y, const NetworkInstance& inst,
                               Rng& rng);

}  // namespace caplearn
