#include "caplearn/ep.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace caplearn {

Episode Episode::from_feedback(const std::vector<double>& y, const FeedbackSample& fb,
                               const Topology& topo) {
    Episode ep;
    ep.y = y;
    for (int n = 0; n < topo.user_count; ++n) {
        if (fb.v[n] == 1) {
            ep.reporters.push_back(n);
            ep.reporter_routes.push_back(topo.routes[n]);
        }
    }
    ep.z_factors.assign(topo.link_count, {});
    ep.psi_to_z.resize(ep.reporters.size());
    for (std::size_t r = 0; r < ep.reporters.size(); ++r) {
        const auto& route = ep.reporter_routes[r];
        ep.psi_to_z[r].assign(route.size(), BernoulliMessage{});
        for (std::size_t j = 0; j < route.size(); ++j) {
            ep.z_factors[route[j]].emplace_back(static_cast<int>(r), static_cast<int>(j));
        }
    }
    ep.lik_to_z.assign(topo.link_count, BernoulliMessage{});
    ep.site.assign(topo.link_count, GaussianSite{});
    return ep;
}

BernoulliMessage likelihood_to_z_message(const LognormalBelief& cavity, double y, double kappa,
                                         double rho, const QuadCfg& cfg) {
    const BranchMoments bm = branch_log_moments(cavity, SigmoidTilt{kappa, rho, y}, cfg);
    const double total = bm.z0 + bm.z1;
    if (!(total > 0.0) || !std::isfinite(total)) {
        std::ostringstream oss;
        oss << "likelihood_to_z_message: quadrature failure (log_mean="
            << cavity.log_mean() << ", log_var=" << cavity.log_var() << ", y=" << y << ")";
        throw std::runtime_error(oss.str());
    }
    BernoulliMessage msg{bm.z0 / total, bm.z1 / total};
    msg.normalize();
    return msg;
}

BernoulliMessage psi1_incoming(const std::vector<BernoulliMessage>& others) {
    double prod_zero = 1.0;
    for (const BernoulliMessage& nu : others) {
        const double sum = nu.p0 + nu.p1;
        prod_zero *= sum > 0.0 ? nu.p0 / sum : 0.5;
    }
    return BernoulliMessage{1.0 - prod_zero, 1.0};
}

BernoulliMessage psi0_incoming() { return BernoulliMessage{1.0, 0.0}; }

Projection project_from_moments(const BranchMoments& moments, double m0, double m1) {
    Projection proj;
    double z = 0.0, mean = 0.0, var = 0.0;
    if (combine_moments(moments, m0, m1, z, mean, var)) {
        proj.ok = true;
        proj.log_mean = mean;
        proj.log_var = var;
        proj.z_norm = z;
    }
    return proj;
}

Projection project_to_lognormal(const TiltedDensity& tilted, const QuadCfg& cfg) {
    const BranchMoments bm = branch_log_moments(*tilted.cavity, tilted.tilt, cfg);
    return project_from_moments(bm, tilted.m0, tilted.m1);
}

GaussianSite update_site(const GaussianSite& old_site, const LognormalBelief& projected,
                         const LognormalBelief& cavity, double damping) {
    const GaussianSite target = projected.natural() - cavity.natural();
    GaussianSite out;
    out.precision = (1.0 - damping) * old_site.precision + damping * target.precision;
    out.precision_mean =
        (1.0 - damping) * old_site.precision_mean + damping * target.precision_mean;
    return out;
}

std::string EpDiagnostics::to_json() const {
    nlohmann::json j;
    j["projection_failures"] = projection_failures;
    j["guard_skips"] = guard_skips;
    j["cavity_skips"] = cavity_skips;
    j["sweeps"] = sweeps;
    j["max_site_delta"] = max_site_delta;
    return j.dump();
}

std::vector<LognormalBelief> combine_beliefs(const std::vector<Episode>& dataset,
                                             const std::vector<LognormalBelief>& priors) {
    std::vector<LognormalBelief> out;
    out.reserve(priors.size());
    for (std::size_t m = 0; m < priors.size(); ++m) {
        GaussianSite total = priors[m].natural();
        for (const Episode& ep : dataset) total += ep.site[m];
        out.push_back(LognormalBelief::from_site(total));
    }
    return out;
}

namespace {

// Prior plus every site of link m except episode skip_t's.
GaussianSite cavity_of(const std::vector<Episode>& dataset,
                       const std::vector<LognormalBelief>& priors, std::size_t skip_t, int m) {
    GaussianSite c = priors[m].natural();
    for (std::size_t t = 0; t < dataset.size(); ++t) {
        if (t != skip_t) c += dataset[t].site[m];
    }
    return c;
}

}  // namespace

std::vector<LognormalBelief> run_ep(std::vector<Episode>& dataset,
                                    const std::vector<LognormalBelief>& priors,
                                    const SigmoidCongestionModel& model, const EpParams& params,
                                    EpDiagnostics* diag) {
    EpDiagnostics scratch;
    EpDiagnostics* d = diag ? diag : &scratch;
    const int link_count = static_cast<int>(priors.size());

    std::vector<BranchMoments> moments(link_count);
    std::vector<GaussianSite> cavity(link_count);
    std::vector<char> usable(link_count);

    for (int sweep = 0; sweep < params.max_iters; ++sweep) {
        ++d->sweeps;
        double max_delta = 0.0;
        for (std::size_t t = 0; t < dataset.size(); ++t) {
            Episode& ep = dataset[t];

            // Refresh cavities and likelihood-to-z messages; the same branch
            // moments feed the projection below.
            for (int m = 0; m < link_count; ++m) {
                usable[m] = 0;
                const GaussianSite c = cavity_of(dataset, priors, t, m);
                if (!(c.precision > 0.0)) {
                    ++d->cavity_skips;
                    continue;
                }
                cavity[m] = c;
                const LognormalBelief cav = LognormalBelief::from_site(c);
                moments[m] = branch_log_moments(
                    cav, SigmoidTilt{model.kappa[m], model.rho, ep.y[m]}, params.quad);
                const double total = moments[m].z0 + moments[m].z1;
                if (!(total > 0.0) || !std::isfinite(total)) {
                    ++d->projection_failures;
                    continue;
                }
                usable[m] = 1;
                BernoulliMessage msg{moments[m].z0 / total, moments[m].z1 / total};
                msg.normalize();
                ep.lik_to_z[m] = msg;
            }

            // psi^1 message passes, reporter by reporter.
            for (std::size_t r = 0; r < ep.reporters.size(); ++r) {
                const auto& route = ep.reporter_routes[r];
                std::vector<BernoulliMessage> nu(route.size());
                for (std::size_t j = 0; j < route.size(); ++j) {
                    const int m = route[j];
                    BernoulliMessage out = ep.lik_to_z[m];
                    for (const auto& [r2, j2] : ep.z_factors[m]) {
                        if (static_cast<std::size_t>(r2) == r) continue;
                        out.p0 *= ep.psi_to_z[r2][j2].p0;
                        out.p1 *= ep.psi_to_z[r2][j2].p1;
                    }
                    nu[j] = out;
                }
                std::vector<BernoulliMessage> others;
                others.reserve(route.size());
                for (std::size_t j = 0; j < route.size(); ++j) {
                    others.clear();
                    for (std::size_t l = 0; l < route.size(); ++l) {
                        if (l != j) others.push_back(nu[l]);
                    }
                    ep.psi_to_z[r][j] = psi1_incoming(others);
                }
            }

            // Combine the z evidence and refresh each site.
            for (int m = 0; m < link_count; ++m) {
                if (!usable[m]) continue;
                double m0 = 1.0, m1 = 1.0;
                if (ep.psi0(m)) {
                    const BernoulliMessage pin = psi0_incoming();
                    m0 = pin.p0;
                    m1 = pin.p1;
                } else {
                    for (const auto& [r, j] : ep.z_factors[m]) {
                        m0 *= ep.psi_to_z[r][j].p0;
                        m1 *= ep.psi_to_z[r][j].p1;
                    }
                }
                const Projection proj = project_from_moments(moments[m], m0, m1);
                if (!proj.ok) {
                    ++d->projection_failures;
                    continue;
                }
                const LognormalBelief cav = LognormalBelief::from_site(cavity[m]);
                const GaussianSite fresh =
                    update_site(ep.site[m], proj.belief(), cav, params.damping);
                if (!(cavity[m].precision + fresh.precision > 0.0)) {
                    ++d->guard_skips;
                    continue;
                }
                const double delta =
                    std::max(std::abs(fresh.precision - ep.site[m].precision),
                             std::abs(fresh.precision_mean - ep.site[m].precision_mean));
                if (delta > max_delta) max_delta = delta;
                ep.site[m] = fresh;
            }
        }
        d->max_site_delta = max_delta;
    }
    return combine_beliefs(dataset, priors);
}

void evict_episode(const Episode& episode, std::vector<LognormalBelief>& priors,
                   EpDiagnostics* diag) {
    for (std::size_t m = 0; m < priors.size(); ++m) {
        const GaussianSite total = priors[m].natural() + episode.site[m];
        if (total.precision > 0.0) {
            priors[m] = LognormalBelief::from_site(total);
        } else if (diag) {
            ++diag->guard_skips;
        }
    }
}

}  // namespace caplearn
