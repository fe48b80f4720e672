// Two-settlement market semantics.
//
// Each period the aggregator sells a forward contract Q at the day-ahead
// price pi, posts a price p to its customers, and is settled in real time:
// overage (D > Q) is sold at the RT overage price, shortage (D < Q) bought
// back at the RT shortage price. Only the RT means (mu_plus, mu_minus)
// enter expected profit; a realized-price law is configurable because the
// trace also reports realized settlement.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "drsim/demand.hpp"
#include "drsim/errors.hpp"
#include "drsim/rng.hpp"
#include "drsim/shock.hpp"

namespace drsim {

/// One period's action: forward contract Q (kWh) and posted price p ($/kWh).
/// The modeling contract wants p >= 0; the default (unfloored) policy
/// variant can violate it by design, so the invariant is not enforced here.
struct Decision {
    double Q = 0.0;
    double p = 0.0;
};

/// Law of the realized RT price pair. Point masses at the means keep the
/// realized settlement exactly at its expectation; the lognormal option is
/// mean-matched with configurable log-scale dispersion.
enum class RtPriceKind { point, lognormal };

struct RtPriceSpec {
    RtPriceKind kind = RtPriceKind::point;
    double sigma_plus = 0.25;   // log-scale sd of the overage price
    double sigma_minus = 0.25;  // log-scale sd of the shortage price
};

/// Newsvendor critical ratio alpha = (pi - mu_plus) / (mu_minus - mu_plus).
/// Assumption 1 (0 < pi, mu_plus < pi < mu_minus) makes it a probability.
inline double critical_ratio(double pi, double mu_plus, double mu_minus) {
    if (!(pi > 0.0 && mu_plus < pi && pi < mu_minus))
        throw ConfigError("critical_ratio: Assumption 1 violated (need 0 < pi, mu+ < pi < mu-; "
                          "got pi=" + std::to_string(pi) + ", mu+=" + std::to_string(mu_plus) +
                          ", mu-=" + std::to_string(mu_minus) + ")");
    return (pi - mu_plus) / (mu_minus - mu_plus);
}

/// Price environment: the DA price series plus RT price means and law.
class MarketEnv {
  public:
    /// A single-element series means a constant DA price for all periods.
    MarketEnv(std::vector<double> da_prices, double mu_plus, double mu_minus,
              RtPriceSpec rt = {})
        : da_prices_(std::move(da_prices)), mu_plus_(mu_plus), mu_minus_(mu_minus), rt_(rt) {
        if (da_prices_.empty()) throw ConfigError("MarketEnv: empty DA price series");
    }

    double mu_plus() const { return mu_plus_; }
    double mu_minus() const { return mu_minus_; }
    const RtPriceSpec& rt_spec() const { return rt_; }
    const std::vector<double>& da_prices() const { return da_prices_; }
    bool constant_da_price() const { return da_prices_.size() == 1; }

    /// DA price for 1-based period t.
    double pi_at(std::size_t t) const {
        if (da_prices_.size() == 1) return da_prices_[0];
        if (t < 1 || t > da_prices_.size())
            throw std::domain_error("MarketEnv::pi_at: period " + std::to_string(t) +
                                    " outside the configured series");
        return da_prices_[t - 1];
    }

    /// Assumption 1 for every period in 1..T, naming the first offender.
    void validate(std::size_t T) const {
        if (da_prices_.size() != 1 && da_prices_.size() < T)
            throw ConfigError("MarketEnv: DA price series has " +
                              std::to_string(da_prices_.size()) + " entries but horizon is " +
                              std::to_string(T));
        for (std::size_t t = 1; t <= T; ++t) {
            const double pi = pi_at(t);
            if (!(pi > 0.0 && mu_plus_ < pi && pi < mu_minus_))
                throw ConfigError("MarketEnv: Assumption 1 violated at period " +
                                  std::to_string(t) + " (pi=" + std::to_string(pi) +
                                  ", mu+=" + std::to_string(mu_plus_) +
                                  ", mu-=" + std::to_string(mu_minus_) + ")");
        }
    }

    /// One realized (rt_plus, rt_minus) pair with means (mu_plus, mu_minus).
    std::pair<double, double> sample_rt_prices(Rng& rng) const {
        if (rt_.kind == RtPriceKind::point) return {mu_plus_, mu_minus_};
        const double zp = rng.normal();
        const double zm = rng.normal();
        return {mu_plus_ * std::exp(rt_.sigma_plus * zp - 0.5 * rt_.sigma_plus * rt_.sigma_plus),
                mu_minus_ * std::exp(rt_.sigma_minus * zm - 0.5 * rt_.sigma_minus * rt_.sigma_minus)};
    }

  private:
    std::vector<double> da_prices_;
    double mu_plus_, mu_minus_;
    RtPriceSpec rt_;
};

/// Eq.-2 expected profit of a decision:
///   r(Q, p) = pi*Q + mu+ E[(D-Q)^+] - mu- E[(Q-D)^+] - p*E[D],
/// written through the shock partial expectations with Y = Q - a*p - b.
/// E[D] uses the shock model's own mean so the Appendix-C decomposition
/// below sums to this value exactly even for sample-backed shocks, whose
/// mean is zero only up to Monte Carlo error.
inline double expected_profit(const Decision& d, const DemandParams& params,
                              const ShockModel& shock, double pi, double mu_plus,
                              double mu_minus) {
    const double y = d.Q - params.a * d.p - params.b;
    const double mean_demand = params.a * d.p + params.b + shock.mean();
    return pi * d.Q + mu_plus * shock.partial_plus(y) - mu_minus * shock.partial_minus(y) -
           d.p * mean_demand;
}

/// Appendix-C decomposition r = r1 + r2. r1 carries the newsvendor part
/// (everything that depends on the decision only through Y), r2 the pricing
/// part (pi - p)(a*p + b). The shock-mean payment -p*E[eps] is grouped into
/// r1; it is identically zero for exactly mean-zero shock kinds.
inline double expected_profit_r1(const Decision& d, const DemandParams& params,
                                 const ShockModel& shock, double pi, double mu_plus,
                                 double mu_minus) {
    const double y = d.Q - params.a * d.p - params.b;
    return pi * y + mu_plus * shock.partial_plus(y) - mu_minus * shock.partial_minus(y) -
           d.p * shock.mean();
}

inline double expected_profit_r2(const Decision& d, const DemandParams& params, double pi) {
    return (pi - d.p) * (params.a * d.p + params.b);
}

/// Realized settlement for one period, the pre-expectation integrand of
/// Eq. 2: pi*Q + rt_plus*(D-Q)^+ - rt_minus*(Q-D)^+ - p*D.
inline double realized_profit(const Decision& d, double realized_reduction, double pi,
                              double rt_plus, double rt_minus) {
    const double over = realized_reduction - d.Q;
    return pi * d.Q + rt_plus * std::max(over, 0.0) - rt_minus * std::max(-over, 0.0) -
           d.p * realized_reduction;
}

}  // namespace drsim
