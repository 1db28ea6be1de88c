#pragma once

#include <string>
#include <utility>
#include <vector>

#include "caplearn/belief.hpp"
#include "caplearn/feedback.hpp"
#include "caplearn/tilted.hpp"
#include "caplearn/topology.hpp"

namespace caplearn {

/// Unnormalized Bernoulli message over a latent congestion variable z.
/// Stored max-normalized: max(p0, p1) = 1 after normalize().
struct BernoulliMessage {
    double p0 = 1.0;
    double p1 = 1.0;

    void normalize() {
        const double top = p0 > p1 ? p0 : p1;
        if (top > 0.0) {
            p0 /= top;
            p1 /= top;
        } else {
            p0 = p1 = 1.0;
        }
    }
};

/// One stored observation D^t = (y, v) plus its EP working state. Feedback is
/// kept sparsely: only the reporting users (v_n = 1) and their routes, which
/// is exactly the neighborhood of the psi^1 factors this episode contributes.
/// Links with no reporting user are constrained by psi^0 instead.
struct Episode {
    std::vector<double> y;                         // per-link rate at sample time
    std::vector<int> reporters;                    // users with v_n = 1
    std::vector<std::vector<int>> reporter_routes; // their routes

    // Per link: (reporter index, position on that reporter's route).
    std::vector<std::vector<std::pair<int, int>>> z_factors;

    // Message state, refreshed by run_ep.
    std::vector<std::vector<BernoulliMessage>> psi_to_z;  // [reporter][position]
    std::vector<BernoulliMessage> lik_to_z;               // per link
    std::vector<GaussianSite> site;                       // per link

    static Episode from_feedback(const std::vector<double>& y, const FeedbackSample& fb,
                                 const Topology& topo);

    /// True when link m had no reporting user, i.e. psi^0 pins z_m = 0.
    bool psi0(int link) const { return z_factors[link].empty(); }
};

/// Message from the likelihood factor p(z|y, b) to the z node, marginalizing
/// b under the cavity belief: p1 = integral of sigma(kappa (y - rho b)).
BernoulliMessage likelihood_to_z_message(const LognormalBelief& cavity, double y, double kappa,
                                         double rho, const QuadCfg& cfg = {});

/// Incoming message from a psi^1 factor given the outgoing messages of the
/// other attached z nodes: mu(0) = 1 - prod nu_l(0), mu(1) = 1, with each
/// nu first normalized to a probability pair.
BernoulliMessage psi1_incoming(const std::vector<BernoulliMessage>& others);

/// Incoming message from a psi^0 factor: z is pinned to 0.
BernoulliMessage psi0_incoming();

/// Unnormalized tilted density f(b) = [m0 (1 - sigma) + m1 sigma] cavity(b)
/// where sigma is the congestion likelihood at rate y.
struct TiltedDensity {
    double m0 = 1.0;
    double m1 = 1.0;
    SigmoidTilt tilt;
    const LognormalBelief* cavity = nullptr;
};

/// KL projection of a tilted density onto the lognormal family: matches
/// E[log b] and Var[log b]. ok = false signals non-finite moments or a
/// collapsed variance; callers skip the update in that case.
struct Projection {
    bool ok = false;
    double log_mean = 0.0;
    double log_var = 0.0;
    double z_norm = 0.0;

    LognormalBelief belief() const { return LognormalBelief(log_mean, log_var); }
};

Projection project_to_lognormal(const TiltedDensity& tilted, const QuadCfg& cfg = {});

/// Same projection from precomputed branch moments (one quadrature sweep per
/// (episode, link) serves both the likelihood message and the projection).
Projection project_from_moments(const BranchMoments& moments, double m0, double m1);

/// Damped site refresh in natural parameters:
/// (1 - damping) * old + damping * (projected - cavity).
GaussianSite update_site(const GaussianSite& old_site, const LognormalBelief& projected,
                         const LognormalBelief& cavity, double damping);

struct EpParams {
    int max_iters = 5;     // I_MAX^EP sweeps
    double damping = 0.5;  // eps_EP
    QuadCfg quad;
};

struct EpDiagnostics {
    int projection_failures = 0;  // skipped: bad moments from the tilted density
    int guard_skips = 0;          // skipped: update would collapse the belief
    int cavity_skips = 0;         // skipped: cavity itself not a proper density
    int sweeps = 0;
    double max_site_delta = 0.0;  // largest natural-parameter change in the last sweep

    std::string to_json() const;
};

/// Belief reconstruction identity: per-link prior times the product of all
/// stored sites, exact in natural parameters.
std::vector<LognormalBelief> combine_beliefs(const std::vector<Episode>& dataset,
                                             const std::vector<LognormalBelief>& priors);

/// Runs max_iters EP sweeps over the dataset (episodes oldest first, links in
/// index order; per episode all likelihood-to-z refreshes, then the psi
/// message passes per reporter, then per-link projection and damped site
/// update) and returns the combined beliefs.
std::vector<LognormalBelief> run_ep(std::vector<Episode>& dataset,
                                    const std::vector<LognormalBelief>& priors,
                                    const SigmoidCongestionModel& model, const EpParams& params,
                                    EpDiagnostics* diag = nullptr);

/// Folds the episode's final sites into the base priors (natural-parameter
/// addition), preserving the combined belief. The caller removes the episode
/// from the dataset afterwards.
void evict_episode(const Episode& episode, std::vector<LognormalBelief>& priors,
                   EpDiagnostics* diag = nullptr);

}  // namespace caplearn
