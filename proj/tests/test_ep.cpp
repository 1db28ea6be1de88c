#include <cmath>
#include <vector>

#include "doctest.h"

#include "caplearn/ep.hpp"
#include "oracles.hpp"

using namespace caplearn;

TEST_CASE("BernoulliMessage normalizes to max one") {
    BernoulliMessage msg{0.2, 0.8};
    msg.normalize();
    CHECK(msg.p0 == doctest::Approx(0.25));
    CHECK(msg.p1 == doctest::Approx(1.0));
    BernoulliMessage zero{0.0, 0.0};
    zero.normalize();
    CHECK(zero.p0 == doctest::Approx(1.0));
    CHECK(zero.p1 == doctest::Approx(1.0));
}

TEST_CASE("likelihood_to_z_message marginalizes the cavity") {
    SUBCASE("near point mass at the sigmoid midpoint") {
        const LognormalBelief cavity = LognormalBelief::from_natural(100.0, 0.01);
        const BernoulliMessage msg = likelihood_to_z_message(cavity, 95.0, 1.0, 0.95);
        const double p1 = msg.p1 / (msg.p0 + msg.p1);
        CHECK(p1 == doctest::Approx(0.5).epsilon(1e-3));
    }
    SUBCASE("rate far below the mass") {
        const LognormalBelief cavity = LognormalBelief::from_natural(100.0, 10.0);
        const BernoulliMessage msg = likelihood_to_z_message(cavity, 0.0, 1.0, 0.95);
        CHECK(msg.p1 / (msg.p0 + msg.p1) < 1e-12);
    }
    SUBCASE("wide cavity against a dense quadrature reference") {
        const LognormalBelief cavity(std::log(100.0), 0.25);
        const BernoulliMessage msg = likelihood_to_z_message(cavity, 95.0, 1.0, 0.95);
        const double p1 = msg.p1 / (msg.p0 + msg.p1);
        const oracle::TiltedMoments ref =
            oracle::tilted_moments(cavity.log_mean(), cavity.log_var(), 1.0, 0.95, 95.0, 1.0, 1.0);
        const oracle::TiltedMoments hit =
            oracle::tilted_moments(cavity.log_mean(), cavity.log_var(), 1.0, 0.95, 95.0, 0.0, 1.0);
        CHECK(p1 == doctest::Approx(hit.mass / ref.mass).epsilon(1e-6));
    }
}

TEST_CASE("psi1_incoming implements the normalized product form") {
    SUBCASE("two half-half neighbors") {
        const std::vector<BernoulliMessage> others(2, BernoulliMessage{1.0, 1.0});
        const BernoulliMessage msg = psi1_incoming(others);
        CHECK(msg.p0 == doctest::Approx(0.75));
        CHECK(msg.p1 == doctest::Approx(1.0));
    }
    SUBCASE("a certainly congested neighbor makes the factor uninformative") {
        const std::vector<BernoulliMessage> others = {BernoulliMessage{0.0, 1.0}};
        const BernoulliMessage msg = psi1_incoming(others);
        CHECK(msg.p0 == doctest::Approx(1.0));
        CHECK(msg.p1 == doctest::Approx(1.0));
    }
    SUBCASE("no other links forces z = 1") {
        const BernoulliMessage msg = psi1_incoming({});
        CHECK(msg.p0 == doctest::Approx(0.0));
        CHECK(msg.p1 == doctest::Approx(1.0));
    }
    SUBCASE("agrees with the naive sum over configurations") {
        Rng rng(7);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<BernoulliMessage> others;
            std::vector<double> prob0;
            for (int l = 0; l < 3; ++l) {
                const double p0 = rng.uniform(0.05, 0.95);
                others.push_back(BernoulliMessage{p0, 1.0 - p0});
                prob0.push_back(p0);
            }
            // mu(z) = sum over the other z values of psi(z, rest) * prod nu.
            double mu0 = 0.0, mu1 = 0.0;
            for (int code = 0; code < 8; ++code) {
                double weight = 1.0;
                bool any = false;
                for (int l = 0; l < 3; ++l) {
                    const bool on = (code >> l) & 1;
                    weight *= on ? 1.0 - prob0[l] : prob0[l];
                    any = any || on;
                }
                mu1 += weight;                 // psi = 1 when the target z is 1
                if (any) mu0 += weight;        // psi needs another congested link
            }
            BernoulliMessage expected{mu0, mu1};
            expected.normalize();
            const BernoulliMessage msg = psi1_incoming(others);
            CHECK(msg.p0 == doctest::Approx(expected.p0).epsilon(1e-12));
            CHECK(msg.p1 == doctest::Approx(expected.p1).epsilon(1e-12));
        }
    }
}

TEST_CASE("psi0_incoming pins z to zero") {
    const BernoulliMessage msg = psi0_incoming();
    CHECK(msg.p0 == doctest::Approx(1.0));
    CHECK(msg.p1 == doctest::Approx(0.0));
}

TEST_CASE("project_to_lognormal is exact on family members") {
    const LognormalBelief cavity(std::log(100.0), 0.09);
    SUBCASE("equal branch weights leave the cavity untouched") {
        const TiltedDensity flat{1.0, 1.0, SigmoidTilt{1.0, 0.95, 95.0}, &cavity};
        const Projection proj = project_to_lognormal(flat);
        REQUIRE(proj.ok);
        CHECK(proj.log_mean == doctest::Approx(cavity.log_mean()).epsilon(1e-10));
        CHECK(proj.log_var == doctest::Approx(cavity.log_var()).epsilon(1e-9));
        CHECK(proj.z_norm == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("a flat likelihood leaves the cavity untouched") {
        const TiltedDensity flat{1.0, 0.3, SigmoidTilt{1e-14, 0.95, 95.0}, &cavity};
        const Projection proj = project_to_lognormal(flat);
        REQUIRE(proj.ok);
        CHECK(proj.log_mean == doctest::Approx(cavity.log_mean()).epsilon(1e-9));
        CHECK(proj.log_var == doctest::Approx(cavity.log_var()).epsilon(1e-8));
    }
}

TEST_CASE("project_to_lognormal matches dense quadrature on tilted densities") {
    const LognormalBelief cavity(std::log(100.0), 0.09);
    const TiltedDensity tilted{0.0, 1.0, SigmoidTilt{1.0, 0.95, 95.0}, &cavity};
    const Projection proj = project_to_lognormal(tilted);
    REQUIRE(proj.ok);
    const oracle::TiltedMoments ref =
        oracle::tilted_moments(cavity.log_mean(), cavity.log_var(), 1.0, 0.95, 95.0, 0.0, 1.0);
    CHECK(proj.log_mean == doctest::Approx(ref.log_mean).epsilon(1e-6));
    CHECK(proj.log_var == doctest::Approx(ref.log_var).epsilon(1e-6));
}

TEST_CASE("update_site blends natural parameters with damping") {
    const LognormalBelief cavity(std::log(50.0), 0.04);
    SUBCASE("full step toward an uninformative projection clears the site") {
        const GaussianSite old_site{0.7, 0.3};
        const GaussianSite site = update_site(old_site, cavity, cavity, 1.0);
        CHECK(site.precision_mean == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(site.precision == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("half step from a zero site is half the difference") {
        const LognormalBelief projected(std::log(50.0) - 0.1, 0.02);
        const GaussianSite site = update_site(GaussianSite{}, projected, cavity, 0.5);
        const GaussianSite diff = projected.natural() - cavity.natural();
        CHECK(site.precision_mean == doctest::Approx(0.5 * diff.precision_mean));
        CHECK(site.precision == doctest::Approx(0.5 * diff.precision));
    }
}

namespace {

std::vector<LognormalBelief> priors_of(const NetworkInstance& inst) { return inst.prior; }

}  // namespace

TEST_CASE("run_ep with no data returns the priors") {
    const NetworkInstance inst =
        oracle::make_instance(2, {{0}, {1}}, {100.0, 50.0}, {1.0, 1.0}, {90.0, 60.0},
                              {9.0, 6.0});
    std::vector<Episode> dataset;
    const std::vector<LognormalBelief> beliefs =
        run_ep(dataset, priors_of(inst), inst.congestion, EpParams{});
    REQUIRE(beliefs.size() == 2);
    for (int m = 0; m < 2; ++m) {
        CHECK(beliefs[m].log_mean() == doctest::Approx(inst.prior[m].log_mean()));
        CHECK(beliefs[m].log_var() == doctest::Approx(inst.prior[m].log_var()));
    }
}

TEST_CASE("a single reported congestion reproduces the exact posterior") {
    // One link, one user; the report pins z = 1, so the exact posterior is the
    // sigmoid-tilted prior. Enough sweeps close the damping tail.
    const NetworkInstance inst =
        oracle::make_instance(1, {{0}}, {100.0}, {1.0}, {130.0}, {13.0});
    const FeedbackSample fb{{1}, {1}};
    std::vector<Episode> dataset{Episode::from_feedback({95.0}, fb, inst.topology)};
    const std::vector<LognormalBelief> beliefs =
        run_ep(dataset, priors_of(inst), inst.congestion, EpParams{60, 0.5, {}});

    const LognormalBelief& prior = inst.prior[0];
    const double kappa = inst.congestion.kappa[0];
    const oracle::TiltedMoments exact = oracle::tilted_moments(
        prior.log_mean(), prior.log_var(), kappa, 0.95, 95.0, 0.0, 1.0);
    const double exact_proj_mean = std::exp(exact.log_mean + 0.5 * exact.log_var);

    CHECK(beliefs[0].natural_mean() < prior.natural_mean());  // pulled toward y / rho
    CHECK(beliefs[0].natural_mean() == doctest::Approx(exact_proj_mean).epsilon(1e-6));
    CHECK(std::abs(beliefs[0].natural_mean() - exact.nat_mean) <= 1e-3 * exact.nat_mean);

    // The reference 5-sweep, 0.5-damping configuration lands close by.
    std::vector<Episode> dataset5{Episode::from_feedback({95.0}, fb, inst.topology)};
    const std::vector<LognormalBelief> damped =
        run_ep(dataset5, priors_of(inst), inst.congestion, EpParams{});
    CHECK(std::abs(damped[0].natural_mean() - exact.nat_mean) <= 0.02 * exact.nat_mean);
}

TEST_CASE("a clean no-report episode raises the belief") {
    // z pinned to 0 at a rate near the prior mean: evidence that b exceeds y.
    const NetworkInstance inst =
        oracle::make_instance(1, {{0}}, {100.0}, {1.0}, {100.0}, {10.0});
    const FeedbackSample fb{{0}, {0}};
    std::vector<Episode> dataset{Episode::from_feedback({95.0}, fb, inst.topology)};
    REQUIRE(dataset[0].psi0(0));
    const std::vector<LognormalBelief> beliefs =
        run_ep(dataset, priors_of(inst), inst.congestion, EpParams{60, 0.5, {}});

    const LognormalBelief& prior = inst.prior[0];
    const oracle::TiltedMoments exact = oracle::tilted_moments(
        prior.log_mean(), prior.log_var(), inst.congestion.kappa[0], 0.95, 95.0, 1.0, 0.0);
    CHECK(beliefs[0].natural_mean() > prior.natural_mean());
    CHECK(beliefs[0].log_mean() == doctest::Approx(exact.log_mean).epsilon(1e-6));
    CHECK(beliefs[0].log_var() == doctest::Approx(exact.log_var).epsilon(1e-5));
}

TEST_CASE("episode storage is sparse and psi0 flags the unreported links") {
    const Topology topo = Topology::from_routes(3, {{0, 1}, {1, 2}});
    const FeedbackSample fb{{1, 0, 0}, {1, 0}};
    const Episode ep = Episode::from_feedback({9.0, 8.0, 7.0}, fb, topo);
    REQUIRE(ep.reporters == std::vector<int>{0});
    REQUIRE(ep.reporter_routes.size() == 1);
    CHECK(ep.reporter_routes[0] == std::vector<int>{0, 1});
    CHECK_FALSE(ep.psi0(0));
    CHECK_FALSE(ep.psi0(1));
    CHECK(ep.psi0(2));  // only user 1 touches link 2 and stayed silent
    CHECK(ep.y == std::vector<double>{9.0, 8.0, 7.0});
}

namespace {

std::vector<LognormalBelief> chain_beliefs(const NetworkInstance& inst,
                                           const std::vector<oracle::EpisodeData>& data) {
    std::vector<Episode> dataset;
    for (const auto& d : data) {
        FeedbackSample fb;
        fb.z.assign(inst.topology.link_count, 0);  // z is latent; only v enters the episode
        fb.v = d.v;
        dataset.push_back(Episode::from_feedback(d.y, fb, inst.topology));
    }
    return run_ep(dataset, inst.prior, inst.congestion, EpParams{});
}

}  // namespace

TEST_CASE("EP tracks the enumeration oracle on a two-link chain") {
    const NetworkInstance inst = oracle::make_instance(
        2, {{0, 1}}, {100.0, 120.0}, {1.0}, {100.0, 120.0}, {10.0, 12.0});

    SUBCASE("attributable congestion") {
        // Episode 1's rates make link 1 an implausible culprit, so the report
        // effectively names link 0; EP is near exact.
        const std::vector<oracle::EpisodeData> data = {
            {{97.0, 100.0}, {1}},
            {{90.0, 100.0}, {0}},
        };
        const std::vector<LognormalBelief> beliefs = chain_beliefs(inst, data);
        const oracle::ExactPosterior exact = oracle::exact_posterior(
            inst.topology, inst.prior, inst.congestion.kappa, 0.95, data);
        for (int m = 0; m < 2; ++m) {
            CHECK(std::abs(beliefs[m].natural_mean() - exact.mean[m]) <= 0.05 * exact.mean[m]);
            CHECK(std::abs(beliefs[m].natural_var() - exact.var[m]) <= 0.15 * exact.var[m]);
        }
    }

    SUBCASE("ambiguous congestion") {
        // Both links are plausible culprits for the report, so the exact
        // marginal of link 0 is a two-component mixture. The lognormal family
        // cannot represent it: means stay sharp but the variance is
        // underestimated. The bound documents the measured behavior.
        const std::vector<oracle::EpisodeData> data = {
            {{97.0, 110.0}, {1}},
            {{90.0, 100.0}, {0}},
        };
        const std::vector<LognormalBelief> beliefs = chain_beliefs(inst, data);
        const oracle::ExactPosterior exact = oracle::exact_posterior(
            inst.topology, inst.prior, inst.congestion.kappa, 0.95, data);
        for (int m = 0; m < 2; ++m) {
            CHECK(std::abs(beliefs[m].natural_mean() - exact.mean[m]) <= 0.05 * exact.mean[m]);
            CHECK(std::abs(beliefs[m].natural_var() - exact.var[m]) <= 0.35 * exact.var[m]);
            CHECK(beliefs[m].natural_var() < inst.prior[m].natural_var());
        }
    }
}

TEST_CASE("run_ep is deterministic") {
    const NetworkInstance inst = generate_network(21, 3, 9, 2);
    Rng rng(4);
    std::vector<double> y(inst.topology.link_count);
    for (int m = 0; m < inst.topology.link_count; ++m) {
        y[m] = inst.b_true[m] * rng.uniform(0.85, 1.05);
    }
    const FeedbackSample fb = sample_feedback(y, inst, rng);
    std::vector<Episode> a{Episode::from_feedback(y, fb, inst.topology)};
    std::vector<Episode> b{Episode::from_feedback(y, fb, inst.topology)};
    const std::vector<LognormalBelief> ba = run_ep(a, priors_of(inst), inst.congestion, EpParams{});
    const std::vector<LognormalBelief> bb = run_ep(b, priors_of(inst), inst.congestion, EpParams{});
    for (std::size_t m = 0; m < ba.size(); ++m) {
        CHECK(ba[m].log_mean() == bb[m].log_mean());
        CHECK(ba[m].log_var() == bb[m].log_var());
    }
}

TEST_CASE("beliefs reconstruct from priors and sites at all times") {
    const NetworkInstance inst = generate_network(33, 4, 12, 2);
    Rng rng(9);
    std::vector<Episode> dataset;
    for (int t = 0; t < 3; ++t) {
        std::vector<double> y(inst.topology.link_count);
        for (int m = 0; m < inst.topology.link_count; ++m) {
            y[m] = inst.b_true[m] * rng.uniform(0.8, 1.1);
        }
        const FeedbackSample fb = sample_feedback(y, inst, rng);
        dataset.push_back(Episode::from_feedback(y, fb, inst.topology));
    }
    const std::vector<LognormalBelief> reported =
        run_ep(dataset, priors_of(inst), inst.congestion, EpParams{});
    const std::vector<LognormalBelief> rebuilt = combine_beliefs(dataset, priors_of(inst));
    for (std::size_t m = 0; m < reported.size(); ++m) {
        CHECK(reported[m].log_mean() == doctest::Approx(rebuilt[m].log_mean()).epsilon(1e-12));
        CHECK(reported[m].log_var() == doctest::Approx(rebuilt[m].log_var()).epsilon(1e-12));
    }
}

TEST_CASE("eviction folds sites into the prior without changing the belief") {
    const NetworkInstance inst = generate_network(44, 3, 9, 2);
    Rng rng(11);
    std::vector<Episode> dataset;
    for (int t = 0; t < 3; ++t) {
        std::vector<double> y(inst.topology.link_count);
        for (int m = 0; m < inst.topology.link_count; ++m) {
            y[m] = inst.b_true[m] * rng.uniform(0.8, 1.1);
        }
        const FeedbackSample fb = sample_feedback(y, inst, rng);
        dataset.push_back(Episode::from_feedback(y, fb, inst.topology));
    }

    SUBCASE("untrained episodes carry zero sites") {
        std::vector<LognormalBelief> priors = priors_of(inst);
        evict_episode(dataset.front(), priors);
        for (std::size_t m = 0; m < priors.size(); ++m) {
            CHECK(priors[m].log_mean() == doctest::Approx(inst.prior[m].log_mean()));
            CHECK(priors[m].log_var() == doctest::Approx(inst.prior[m].log_var()));
        }
    }

    SUBCASE("evicting every episode reproduces the combined belief") {
        std::vector<LognormalBelief> priors = priors_of(inst);
        const std::vector<LognormalBelief> target =
            run_ep(dataset, priors, inst.congestion, EpParams{});
        while (!dataset.empty()) {
            evict_episode(dataset.front(), priors);
            dataset.erase(dataset.begin());
        }
        for (std::size_t m = 0; m < priors.size(); ++m) {
            CHECK(priors[m].log_mean() == doctest::Approx(target[m].log_mean()).epsilon(1e-12));
            CHECK(priors[m].log_var() == doctest::Approx(target[m].log_var()).epsilon(1e-12));
        }
    }
}
