#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "caplearn/belief.hpp"
#include "caplearn/quad.hpp"

namespace caplearn {

/// Node budget for the fixed composite-Simpson rule used on sigmoid-tilted
/// lognormal integrands. The integration domain [m - 8s, m + 8s] in u = log b
/// is split at the sigmoid transition zone so that the steep part always gets
/// the dense panel; the saturated flanks get the cheap one.
struct QuadCfg {
    int flat_nodes = 401;
    int mid_nodes = 1601;
};

/// The sigmoid factor sigma(kappa * (y - rho * e^u)) in log-capacity space.
struct SigmoidTilt {
    double kappa = 1.0;
    double rho = 0.95;
    double y = 0.0;

    double argument(double u) const { return kappa * (y - rho * std::exp(u)); }
    double value(double u) const { return sigmoid(argument(u)); }
};

/// Per-branch integrals of a lognormal base density against the two sigmoid
/// branches. Components: zeroth, first and second moments of the chosen
/// coordinate (log or natural space) under (1 - sigma) and under sigma.
struct BranchMoments {
    double z0 = 0.0, z1 = 0.0;    // mass under (1 - sigma), sigma
    double m1_0 = 0.0, m1_1 = 0.0;
    double m2_0 = 0.0, m2_1 = 0.0;
};

namespace detail {

/// Panel edges over [lo, hi]: the sigmoid argument crosses +/-T at the
/// returned interior points, if inside the domain.
inline std::vector<double> tilt_panels(double lo, double hi, const SigmoidTilt& t) {
    const double T = 40.0;
    std::vector<double> edges{lo};
    if (t.kappa > 0.0) {
        if (t.y > T / t.kappa) {
            const double e = std::log((t.y - T / t.kappa) / t.rho);
            if (e > lo && e < hi) edges.push_back(e);
        }
        if (t.y + T / t.kappa > 0.0) {
            const double e = std::log((t.y + T / t.kappa) / t.rho);
            if (e > lo && e < hi && e > edges.back()) edges.push_back(e);
        }
    }
    edges.push_back(hi);
    return edges;
}

template <class F>
inline BranchMoments branch_moments_impl(const LognormalBelief& base, const SigmoidTilt& tilt,
                                         const QuadCfg& cfg, F&& coord) {
    const double m = base.log_mean();
    const double s = base.log_std();
    const double lo = m - 8.0 * s;
    const double hi = m + 8.0 * s;
    const std::vector<double> edges = tilt_panels(lo, hi, tilt);
    BranchMoments out;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p];
        const double b = edges[p + 1];
        const double mid_arg = tilt.argument(0.5 * (a + b));
        const int nodes = std::abs(mid_arg) <= 40.0 ? cfg.mid_nodes : cfg.flat_nodes;
        const std::array<double, 6> acc = simpson_multi<6>(a, b, nodes, [&](double u) {
            const double dens = std::exp(base.log_density_u(u));
            const double sig = tilt.value(u);
            const double g0 = (1.0 - sig) * dens;
            const double g1 = sig * dens;
            const double c = coord(u);
            return std::array<double, 6>{g0, g1, c * g0, c * g1, c * c * g0, c * c * g1};
        });
        out.z0 += acc[0];
        out.z1 += acc[1];
        out.m1_0 += acc[2];
        out.m1_1 += acc[3];
        out.m2_0 += acc[4];
        out.m2_1 += acc[5];
    }
    return out;
}

}  // namespace detail

/// Moments of u = log b under each sigmoid branch (EP projection input).
inline BranchMoments branch_log_moments(const LognormalBelief& base, const SigmoidTilt& tilt,
                                        const QuadCfg& cfg = {}) {
    return detail::branch_moments_impl(base, tilt, cfg, [](double u) { return u; });
}

/// Moments of b itself under each branch (mean-field variance input).
inline BranchMoments branch_natural_moments(const LognormalBelief& base, const SigmoidTilt& tilt,
                                            const QuadCfg& cfg = {}) {
    return detail::branch_moments_impl(base, tilt, cfg, [](double u) { return std::exp(u); });
}

/// Mixture moments of w0 * (1 - sigma) + w1 * sigma against the base density.
/// Returns false when the normalizer or variance degenerates.
inline bool combine_moments(const BranchMoments& bm, double w0, double w1, double& z,
                            double& mean, double& var) {
    z = w0 * bm.z0 + w1 * bm.z1;
    if (!(z > 0.0) || !std::isfinite(z)) return false;
    mean = (w0 * bm.m1_0 + w1 * bm.m1_1) / z;
    var = (w0 * bm.m2_0 + w1 * bm.m2_1) / z - mean * mean;
    return std::isfinite(mean) && std::isfinite(var) && var > 0.0;
}

}  // namespace caplearn
