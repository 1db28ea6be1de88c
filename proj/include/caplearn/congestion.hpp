#pragma once

#include <vector>

#include "caplearn/quad.hpp"

namespace caplearn {

/// Probability that a link congests given aggregate rate y and capacity b:
/// sigma(kappa * (y - rho * b)).
inline double congestion_probability(double y, double b, double kappa, double rho) {
    return sigmoid(kappa * (y - rho * b));
}

/// Per-link congestion likelihood parameters. rho is shared; kappa is
/// per-link (the generator sets kappa_m = 5 / ((1 - rho) * b_true_m)).
struct SigmoidCongestionModel {
    std::vector<double> kappa;
    double rho = 0.95;

    double probability(int link, double y, double b) const {
        return congestion_probability(y, b, kappa[link], rho);
    }
};

}  // namespace caplearn
