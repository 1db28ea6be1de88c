#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace caplearn {

/// Overflow-safe logistic function.
inline double sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// Composite Simpson sums for K integrand components evaluated in one sweep
/// over [a, b]. `f(u)` returns the K component values at node u. `nodes` is
/// rounded up to the next odd count (minimum 3).
template <std::size_t K, class F>
std::array<double, K> simpson_multi(double a, double b, int nodes, F&& f) {
    int n = nodes < 3 ? 3 : nodes;
    if (n % 2 == 0) ++n;
    const double h = (b - a) / static_cast<double>(n - 1);
    std::array<double, K> acc{};
    for (int i = 0; i < n; ++i) {
        const double u = a + h * static_cast<double>(i);
        double c = 2.0;
        if (i == 0 || i == n - 1) {
            c = 1.0;
        } else if (i % 2 == 1) {
            c = 4.0;
        }
        const std::array<double, K> v = f(u);
        for (std::size_t k = 0; k < K; ++k) acc[k] += c * v[k];
    }
    const double scale = h / 3.0;
    for (std::size_t k = 0; k < K; ++k) acc[k] *= scale;
    return acc;
}

}  // namespace caplearn
