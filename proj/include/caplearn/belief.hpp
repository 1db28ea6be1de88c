#pragma once

#include <cmath>
#include <stdexcept>

namespace caplearn {

/// Natural parameters of an (unnormalized) Gaussian factor in log-capacity
/// space: contribution to precision and to precision-weighted mean. Site
/// factors may carry negative precision; only the combined belief must stay
/// a proper distribution.
struct GaussianSite {
    double precision_mean = 0.0;  // m / s^2 contribution
    double precision = 0.0;       // 1 / s^2 contribution

    GaussianSite& operator+=(const GaussianSite& o) {
        precision_mean += o.precision_mean;
        precision += o.precision;
        return *this;
    }
    GaussianSite& operator-=(const GaussianSite& o) {
        precision_mean -= o.precision_mean;
        precision -= o.precision;
        return *this;
    }
    friend GaussianSite operator+(GaussianSite a, const GaussianSite& b) { return a += b; }
    friend GaussianSite operator-(GaussianSite a, const GaussianSite& b) { return a -= b; }

    bool is_zero() const { return precision_mean == 0.0 && precision == 0.0; }
};

/// Per-link capacity belief: log b ~ N(log_mean, log_var), i.e. a lognormal
/// in natural space. log_var must stay strictly positive; collapsed-variance
/// handling for class assignment lives outside the belief.
class LognormalBelief {
public:
    LognormalBelief(double log_mean, double log_var)
        : log_mean_(log_mean), log_var_(log_var) {
        if (!(log_var > 0.0) || !std::isfinite(log_mean) || !std::isfinite(log_var)) {
            throw std::invalid_argument("LognormalBelief: log_var must be finite and > 0");
        }
    }

    /// Build from natural-space mean and standard deviation.
    static LognormalBelief from_natural(double mean, double stddev) {
        if (!(mean > 0.0) || !(stddev > 0.0)) {
            throw std::invalid_argument("LognormalBelief: natural mean/std must be > 0");
        }
        const double ratio = stddev / mean;
        const double s2 = std::log1p(ratio * ratio);
        return LognormalBelief(std::log(mean) - 0.5 * s2, s2);
    }

    static LognormalBelief from_site(const GaussianSite& site) {
        if (!(site.precision > 0.0)) {
            throw std::invalid_argument("LognormalBelief: total precision must be > 0");
        }
        return LognormalBelief(site.precision_mean / site.precision, 1.0 / site.precision);
    }

    double log_mean() const { return log_mean_; }
    double log_var() const { return log_var_; }
    double log_std() const { return std::sqrt(log_var_); }

    double natural_mean() const { return std::exp(log_mean_ + 0.5 * log_var_); }
    double natural_var() const {
        return std::expm1(log_var_) * std::exp(2.0 * log_mean_ + log_var_);
    }

    GaussianSite natural() const {
        return GaussianSite{log_mean_ / log_var_, 1.0 / log_var_};
    }

    /// Density of log b at u (used by quadrature oracles and diagnostics).
    double log_density_u(double u) const {
        const double d = u - log_mean_;
        return -0.5 * d * d / log_var_ - 0.5 * std::log(2.0 * 3.14159265358979323846 * log_var_);
    }

private:
    double log_mean_;
    double log_var_;
};

}  // namespace caplearn
