#pragma once

#include <vector>

namespace caplearn {

/// Mean absolute percentage error of the belief means against the true
/// capacities: 100 * sum_m |mu_m - b_m| / (M * b_m).
double e_links(const std::vector<double>& mu, const std::vector<double>& b_true);

/// Mean absolute percentage error of the user rates against the optimum:
/// 100 * sum_n |x_n - x*_n| / (N * x*_n).
double e_users(const std::vector<double>& x, const std::vector<double>& x_star);

}  // namespace caplearn
