#include "caplearn/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace caplearn {

namespace {

double mape(const std::vector<double>& value, const std::vector<double>& reference,
            const char* what) {
    if (value.size() != reference.size() || value.empty()) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (!(reference[i] > 0.0)) {
            throw std::invalid_argument(std::string(what) + ": nonpositive reference");
        }
        acc += std::abs(value[i] - reference[i]) / reference[i];
    }
    return 100.0 * acc / static_cast<double>(value.size());
}

}  // namespace

double e_links(const std::vector<double>& mu, const std::vector<double>& b_true) {
    return mape(mu, b_true, "e_links");
}

double e_users(const std::vector<double>& x, const std::vector<double>& x_star) {
    return mape(x, x_star, "e_users");
}

}  // namespace caplearn
