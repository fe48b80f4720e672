// Decision rules: oracle, myopic (MP), and randomly perturbed myopic (RPMP).
//
// The oracle knows (theta, F) and plays the closed-form optimum each
// period. The myopic policy substitutes the current TLSE and residual
// quantile into the same formulas (certainty equivalence), which is exactly
// what makes it vulnerable to incomplete learning. RPMP additionally
// replaces the myopic price, with probability eta * t^{-r}, by last
// period's average posted price plus a fixed markup rho, forcing enough
// price dispersion for the estimator to stay consistent.
//
// Both learning policies post the configured deterministic decisions in
// periods 1 and 2 (with p1 != p2 so the Gram matrix becomes invertible);
// their first computed decision is at t = 3.
#pragma once

#include <cmath>
#include <stdexcept>

#include "drsim/demand.hpp"
#include "drsim/errors.hpp"
#include "drsim/estimation.hpp"
#include "drsim/market.hpp"
#include "drsim/rng.hpp"
#include "drsim/shock.hpp"

namespace drsim {

/// Deterministic decisions for the two seeding periods.
struct PolicyInit {
    double p1 = 0.0, Q1 = 0.0;
    double p2 = 0.25, Q2 = 0.0;
};

/// RPMP tuning: perturbation probability eta * t^{-r}, perturbation size
/// rho, plus the seeding decisions shared with the myopic policy.
struct RpmpConfig {
    double eta = 0.2;
    double rho = 0.08;
    double r = 0.5;
    PolicyInit init;

    void validate() const {
        if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("RpmpConfig: require eta in (0,1]");
        if (!(rho > 0.0)) throw ConfigError("RpmpConfig: require rho > 0");
        if (!(r >= 0.0)) throw ConfigError("RpmpConfig: require r >= 0");
        if (!(init.p1 != init.p2))
            throw ConfigError("RpmpConfig: require p1 != p2 (Gram matrix must become invertible)");
    }
};

/// Lemma-1 optimum under full knowledge:
///   p* = (pi - b/a) / 2,   Q* = (a*pi + b) / 2 + F^{-1}(alpha),
/// equivalently Q* = a*p* + b + F^{-1}(alpha).
inline Decision oracle_decision(const DemandParams& params, const ShockModel& shock, double pi,
                                double mu_plus, double mu_minus) {
    if (!(params.a > 0.0)) throw ConfigError("oracle_decision: require a > 0");
    const double alpha = critical_ratio(pi, mu_plus, mu_minus);
    Decision d;
    d.p = 0.5 * (pi - params.b / params.a);
    d.Q = 0.5 * (params.a * pi + params.b) + shock.quantile(alpha);
    return d;
}

/// Certainty-equivalent decision from the estimates at t-1. The TLSE keeps
/// a-hat >= a_lo > 0, so the division is safe; the price formula can still
/// go negative when b-hat/a-hat > pi, and by default it is posted as-is
/// (the variant the regret analysis studies). clamp_price_at_zero floors
/// the posted price for the modeling-consistent alternative.
inline Decision myopic_decision(const EstimatorState& est, const ResidualSet& res, double pi,
                                double mu_plus, double mu_minus,
                                bool clamp_price_at_zero = false) {
    const double alpha = critical_ratio(pi, mu_plus, mu_minus);
    const DemandParams t = est.theta_hat();  // StateError before invertibility
    Decision d;
    d.p = 0.5 * (pi - t.b / t.a);
    d.Q = 0.5 * (t.a * pi + t.b) + empirical_quantile(res, alpha);
    if (clamp_price_at_zero && d.p < 0.0) d.p = 0.0;
    return d;
}

/// One Bernoulli(eta * t^{-r}) exploration indicator for period t >= 3.
inline bool perturbation_draw(std::size_t t, const RpmpConfig& cfg, Rng& rng) {
    if (t < 3) throw std::domain_error("perturbation_draw: defined for t >= 3");
    return rng.bernoulli(cfg.eta * std::pow(static_cast<double>(t), -cfg.r));
}

/// RPMP decision: the myopic contract always; the myopic price unless xi is
/// set, in which case the posted price is price_mean (the average posted
/// price through t-1) plus rho.
inline Decision rpmp_decision(const EstimatorState& est, const ResidualSet& res, double pi,
                              double mu_plus, double mu_minus, bool xi, double price_mean,
                              const RpmpConfig& cfg, bool clamp_price_at_zero = false) {
    Decision d = myopic_decision(est, res, pi, mu_plus, mu_minus, clamp_price_at_zero);
    if (xi) {
        d.p = price_mean + cfg.rho;
        if (clamp_price_at_zero && d.p < 0.0) d.p = 0.0;
    }
    return d;
}

}  // namespace drsim
