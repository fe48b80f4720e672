// Affine aggregate demand model and customer-population generation.
//
// Aggregate demand reduction at posted price p is D = a*p + b + eps with a
// zero-mean shock eps. The aggregate (a, b) either comes directly from
// configuration or is built as the exact sum of per-customer draws; the
// matching aggregate shock is then the sum of the per-customer shocks.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "drsim/errors.hpp"
#include "drsim/rng.hpp"
#include "drsim/shock.hpp"

namespace drsim {

/// Aggregate demand parameters theta = (a, b).
struct DemandParams {
    double a = 0.0;  // price sensitivity (kWh^2/$)
    double b = 0.0;  // baseline reduction at zero price (kWh)
};

/// Admissible box for theta: a in [a_lo, a_hi], b in [0, b_hi].
struct ParamBox {
    double a_lo = 0.0;
    double a_hi = 0.0;
    double b_hi = 0.0;

    void validate() const {
        if (!(a_lo > 0.0) || !(a_lo <= a_hi))
            throw ConfigError("ParamBox: require 0 < a_lo <= a_hi");
        if (!(b_hi >= 0.0)) throw ConfigError("ParamBox: require b_hi >= 0");
    }

    bool contains(const DemandParams& t) const {
        return t.a >= a_lo && t.a <= a_hi && t.b >= 0.0 && t.b <= b_hi;
    }

    DemandParams clamp(double a, double b) const {
        DemandParams t;
        t.a = std::min(std::max(a, a_lo), a_hi);
        t.b = std::min(std::max(b, 0.0), b_hi);
        return t;
    }
};

/// Per-customer population model: a_i uniform, b_i truncated-exponential
/// (the mean names the underlying exponential, not the truncated law), plus
/// an IID per-customer demand shock.
struct CustomerSpec {
    double a_min = 0.0, a_max = 0.0;            // uniform range for a_i
    double b_mean = 0.0;                        // mean of the underlying exponential
    double b_min = 0.0, b_max = 0.0;            // truncation range for b_i
    double shock_sigma = 0.0;                   // per-customer shock scale
    double shock_lo = 0.0, shock_hi = 0.0;      // per-customer shock truncation

    void validate() const {
        if (!(a_min > 0.0) || !(a_min <= a_max))
            throw ConfigError("CustomerSpec: require 0 < a_min <= a_max");
        if (!(b_mean > 0.0)) throw ConfigError("CustomerSpec: require b_mean > 0");
        if (!(b_min >= 0.0) || !(b_min <= b_max))
            throw ConfigError("CustomerSpec: require 0 <= b_min <= b_max");
        if (!(shock_sigma > 0.0)) throw ConfigError("CustomerSpec: require shock_sigma > 0");
        if (!(shock_lo < shock_hi)) throw ConfigError("CustomerSpec: require shock_lo < shock_hi");
    }
};

namespace detail {

/// Inverse-CDF draw from an exponential with the given mean, conditioned on
/// [lo, hi]. A degenerate range returns its single point.
inline double truncated_exponential(Rng& rng, double mean, double lo, double hi) {
    if (lo == hi) return lo;
    const double e_lo = std::exp(-lo / mean);
    const double e_hi = std::exp(-hi / mean);
    const double u = rng.uniform01();
    return -mean * std::log(e_lo - u * (e_lo - e_hi));
}

}  // namespace detail

/// Draw n customers and aggregate them: a = sum a_i, b = sum b_i, and the
/// aggregate shock is the sum of the per-customer shocks.
inline std::pair<DemandParams, ShockModel> build_population(
    const CustomerSpec& spec, std::size_t n, Rng& rng,
    SumShockMode mode = SumShockMode::exact) {
    spec.validate();
    if (n < 1) throw ConfigError("build_population: customer count must be >= 1");
    DemandParams agg;
    for (std::size_t i = 0; i < n; ++i) {
        agg.a += rng.uniform(spec.a_min, spec.a_max);
        agg.b += detail::truncated_exponential(rng, spec.b_mean, spec.b_min, spec.b_max);
    }
    return {agg, ShockModel(SumShock(n, spec.shock_sigma, spec.shock_lo, spec.shock_hi, mode))};
}

/// Affine demand map without the domain check; the simulator uses this so
/// that unfloored policies (which can post negative prices) are evaluated
/// exactly as analyzed.
inline double affine_reduction(const DemandParams& params, double price, double shock) {
    return params.a * price + params.b + shock;
}

/// Eq.-1 demand reduction for a posted (nonnegative) price.
inline double aggregate_reduction(const DemandParams& params, double price, double shock) {
    if (!(price >= 0.0)) throw std::domain_error("aggregate_reduction: price must be >= 0");
    return affine_reduction(params, price, shock);
}

}  // namespace drsim
