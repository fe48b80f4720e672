// Episode and Monte Carlo orchestration.
//
// run_episode plays one policy against the environment for T periods with
// the paper's information ordering: the period-t decision is computed from
// data up to t-1 only, then the shock realizes, demand is observed, and the
// estimator absorbs the new pair. Expected profit is evaluated for both the
// chosen decision and the oracle decision each period; cumulative regret is
// the running sum of the gaps.
//
// run_monte_carlo executes independent replications (optionally in worker
// threads) with per-replication seeds derived from (base_seed, index), so
// results are identical for any worker count, and summarizes every traced
// series by its cross-replication mean and middle-70% band.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "drsim/demand.hpp"
#include "drsim/errors.hpp"
#include "drsim/estimation.hpp"
#include "drsim/market.hpp"
#include "drsim/policies.hpp"
#include "drsim/rng.hpp"
#include "drsim/shock.hpp"

namespace drsim {

enum class PolicyKind { oracle, myopic, rpmp };

inline const char* policy_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::oracle: return "oracle";
        case PolicyKind::myopic: return "myopic";
        case PolicyKind::rpmp: return "rpmp";
    }
    return "?";
}

/// One period of an episode. Estimate columns (a_hat, b_hat, qhat) are NaN
/// while the estimator is not yet invertible (and for the whole oracle
/// episode, whose constant price never identifies theta).
struct TraceRow {
    std::size_t t = 0;
    double p = 0.0;
    double Q = 0.0;
    int xi = 0;  // RPMP exploration indicator; 0 for other policies
    double shock = 0.0;
    double D = 0.0;
    double a_hat = 0.0;
    double b_hat = 0.0;
    double qhat = 0.0;  // residual quantile at this period's critical ratio
    double r_policy = 0.0;
    double r_oracle = 0.0;
    double profit_realized = 0.0;
    double regret_cum = 0.0;
};

struct EpisodeTrace {
    std::vector<TraceRow> rows;
};

/// Names and accessors of the traced series, in trace-column order
/// (everything after t).
inline const std::vector<std::string>& trace_series_names() {
    static const std::vector<std::string> names = {
        "p",     "Q",     "xi",   "shock",    "D",        "a_hat",      "b_hat",
        "qhat",  "r_policy", "r_oracle", "profit_realized", "regret_cum"};
    return names;
}

inline double trace_series_value(const TraceRow& row, std::size_t series) {
    switch (series) {
        case 0: return row.p;
        case 1: return row.Q;
        case 2: return static_cast<double>(row.xi);
        case 3: return row.shock;
        case 4: return row.D;
        case 5: return row.a_hat;
        case 6: return row.b_hat;
        case 7: return row.qhat;
        case 8: return row.r_policy;
        case 9: return row.r_oracle;
        case 10: return row.profit_realized;
        case 11: return row.regret_cum;
        default: throw std::domain_error("trace_series_value: bad series index");
    }
}

/// Everything one episode needs besides seeds.
struct ExperimentSetup {
    MarketEnv env;
    DemandParams params;
    ShockModel shock;
    ParamBox box;
    PolicyKind policy = PolicyKind::rpmp;
    RpmpConfig rpmp;  // init is shared with the myopic policy
    std::size_t T = 0;
    bool clamp_price_at_zero = false;
};

/// Run one episode. injected_shocks, when given, replaces the period shocks
/// (element t-1 for period t) — the hook the measurability and regret tests
/// use; realized RT prices still come from the environment stream.
inline EpisodeTrace run_episode(const ExperimentSetup& setup, std::uint64_t env_seed,
                                std::uint64_t policy_seed,
                                const std::vector<double>* injected_shocks = nullptr) {
    if (setup.T < 3) throw ConfigError("run_episode: horizon must be at least 3");
    setup.env.validate(setup.T);
    if (setup.policy != PolicyKind::oracle) setup.rpmp.validate();
    if (!setup.shock.prepared())
        throw StateError("run_episode: shock model not prepared (call prepare_shock)");
    if (injected_shocks != nullptr && injected_shocks->size() < setup.T)
        throw ConfigError("run_episode: injected shock series shorter than horizon");

    const double mu_p = setup.env.mu_plus();
    const double mu_m = setup.env.mu_minus();
    Rng env_rng(env_seed);
    Rng policy_rng(policy_seed);
    EstimatorState est(setup.box);
    ResidualSet res;

    // Under a constant DA price the oracle benchmark is one fixed decision.
    std::optional<Decision> const_star;
    double const_r_star = 0.0;
    if (setup.env.constant_da_price()) {
        const_star = oracle_decision(setup.params, setup.shock, setup.env.pi_at(1), mu_p, mu_m);
        const_r_star =
            expected_profit(*const_star, setup.params, setup.shock, setup.env.pi_at(1), mu_p, mu_m);
    }

    EpisodeTrace trace;
    trace.rows.resize(setup.T);
    double regret_cum = 0.0;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (std::size_t t = 1; t <= setup.T; ++t) {
        const double pi = setup.env.pi_at(t);
        const double alpha = critical_ratio(pi, mu_p, mu_m);

        // Decision from information up to t-1 only.
        Decision d;
        int xi = 0;
        switch (setup.policy) {
            case PolicyKind::oracle:
                d = const_star ? *const_star
                               : oracle_decision(setup.params, setup.shock, pi, mu_p, mu_m);
                break;
            case PolicyKind::myopic:
            case PolicyKind::rpmp:
                if (t == 1) {
                    d = {setup.rpmp.init.Q1, setup.rpmp.init.p1};
                } else if (t == 2) {
                    d = {setup.rpmp.init.Q2, setup.rpmp.init.p2};
                } else if (setup.policy == PolicyKind::myopic) {
                    d = myopic_decision(est, res, pi, mu_p, mu_m, setup.clamp_price_at_zero);
                } else {
                    xi = perturbation_draw(t, setup.rpmp, policy_rng) ? 1 : 0;
                    d = rpmp_decision(est, res, pi, mu_p, mu_m, xi != 0, est.price_mean(),
                                      setup.rpmp, setup.clamp_price_at_zero);
                }
                break;
        }

        // Environment: shock, demand, realized RT prices.
        const double eps =
            injected_shocks != nullptr ? (*injected_shocks)[t - 1] : setup.shock.sample(env_rng);
        const double demand = affine_reduction(setup.params, d.p, eps);
        const auto [rt_p, rt_m] = setup.env.sample_rt_prices(env_rng);

        // Learning update, then this period's estimate snapshot.
        est.observe(d.p, demand);
        if (est.invertible()) res = est.residuals();

        const double r_pol = expected_profit(d, setup.params, setup.shock, pi, mu_p, mu_m);
        double r_star = const_r_star;
        if (!const_star) {
            const Decision star = oracle_decision(setup.params, setup.shock, pi, mu_p, mu_m);
            r_star = expected_profit(star, setup.params, setup.shock, pi, mu_p, mu_m);
        }
        regret_cum += r_star - r_pol;

        TraceRow& row = trace.rows[t - 1];
        row.t = t;
        row.p = d.p;
        row.Q = d.Q;
        row.xi = xi;
        row.shock = eps;
        row.D = demand;
        if (est.invertible()) {
            const DemandParams th = est.theta_hat();
            row.a_hat = th.a;
            row.b_hat = th.b;
            row.qhat = empirical_quantile(res, alpha);
        } else {
            row.a_hat = row.b_hat = row.qhat = nan;
        }
        row.r_policy = r_pol;
        row.r_oracle = r_star;
        row.profit_realized = realized_profit(d, demand, pi, rt_p, rt_m);
        row.regret_cum = regret_cum;
    }
    return trace;
}

/// Lemma-2 audit of a finished episode: per-period upper bound
///   rhs_t = a (p_t - p*_t)^2 + L (mu- - mu+) (Q_t - Q*_t - a (p_t - p*_t))^2
/// and the check that cumulative regret never exceeds the cumulative bound
/// (up to tol) at any horizon.
struct RegretBoundReport {
    std::vector<double> rhs;
    std::vector<double> gap;
    bool holds = true;
    double worst_margin = -std::numeric_limits<double>::infinity();  // max cum(gap) - cum(rhs)
};

inline RegretBoundReport regret_bound_check(const EpisodeTrace& trace,
                                            const ExperimentSetup& setup, double L,
                                            double tol = 1e-9) {
    RegretBoundReport rep;
    rep.rhs.reserve(trace.rows.size());
    rep.gap.reserve(trace.rows.size());
    const double mu_gap = setup.env.mu_minus() - setup.env.mu_plus();
    double cum_gap = 0.0, cum_rhs = 0.0;
    for (const TraceRow& row : trace.rows) {
        const Decision star = oracle_decision(setup.params, setup.shock, setup.env.pi_at(row.t),
                                              setup.env.mu_plus(), setup.env.mu_minus());
        const double dp = row.p - star.p;
        const double dy = row.Q - star.Q - setup.params.a * dp;
        const double rhs = setup.params.a * dp * dp + L * mu_gap * dy * dy;
        const double gap = row.r_oracle - row.r_policy;
        rep.rhs.push_back(rhs);
        rep.gap.push_back(gap);
        cum_gap += gap;
        cum_rhs += rhs;
        rep.worst_margin = std::max(rep.worst_margin, cum_gap - cum_rhs);
        if (cum_gap > cum_rhs + tol) rep.holds = false;
    }
    return rep;
}

/// Population redraw per replication (the non-default experiment mode).
struct PopulationSpec {
    CustomerSpec customers;
    std::size_t n = 0;
    SumShockMode mode = SumShockMode::exact;
    TablePrepareOptions prepare;
};

struct MonteCarloOptions {
    std::size_t n_reps = 1;
    std::uint64_t base_seed = 0;
    int jobs = 1;
    std::optional<PopulationSpec> redraw;  // engaged: rebuild population per replication
};

/// Per-period mean and middle-70% band (15th/85th percentile order
/// statistics with the ceil(n*alpha) index convention) of one series.
struct SeriesSummary {
    std::vector<double> mean, p15, p85;
};

struct MonteCarloSummary {
    std::size_t n_reps = 0;
    std::uint64_t base_seed = 0;
    std::size_t T = 0;
    std::vector<std::string> names;
    std::vector<SeriesSummary> series;

    const SeriesSummary& by_name(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return series[i];
        throw std::domain_error("MonteCarloSummary: no series named " + name);
    }
};

struct MonteCarloResult {
    std::vector<EpisodeTrace> traces;
    MonteCarloSummary summary;
};

namespace detail {

inline void summarize_into(MonteCarloSummary& out, const std::vector<EpisodeTrace>& traces,
                           std::size_t T) {
    const auto& names = trace_series_names();
    out.names = names;
    out.series.assign(names.size(), SeriesSummary{});
    const std::size_t n = traces.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> vals(n);
    for (std::size_t s = 0; s < names.size(); ++s) {
        SeriesSummary& sum = out.series[s];
        sum.mean.resize(T);
        sum.p15.resize(T);
        sum.p85.resize(T);
        for (std::size_t t = 0; t < T; ++t) {
            bool any_nan = false;
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                vals[k] = trace_series_value(traces[k].rows[t], s);
                if (std::isnan(vals[k])) any_nan = true;
                acc += vals[k];
            }
            if (any_nan) {
                sum.mean[t] = sum.p15[t] = sum.p85[t] = nan;
                continue;
            }
            sum.mean[t] = acc / static_cast<double>(n);
            std::sort(vals.begin(), vals.end());
            auto pick = [&](double alpha) {
                auto i = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * alpha));
                if (i < 1) i = 1;
                if (i > n) i = n;
                return vals[i - 1];
            };
            sum.p15[t] = pick(0.15);
            sum.p85[t] = pick(0.85);
        }
    }
}

}  // namespace detail

/// Independent replications with derived seeds and an order-independent
/// summary. Replication k always uses the same seeds no matter how many
/// worker threads run, so outputs are reproducible for any --jobs value.
inline MonteCarloResult run_monte_carlo(const ExperimentSetup& setup,
                                        const MonteCarloOptions& opt) {
    if (opt.n_reps < 1) throw ConfigError("run_monte_carlo: need at least one replication");

    auto run_rep = [&](std::size_t k) -> EpisodeTrace {
        const std::uint64_t env_seed = derive_seed(opt.base_seed, stream_tag::environment, k);
        const std::uint64_t policy_seed = derive_seed(opt.base_seed, stream_tag::policy, k);
        if (opt.redraw) {
            Rng pop_rng(derive_seed(opt.base_seed, stream_tag::population, k));
            auto [params, shock] =
                build_population(opt.redraw->customers, opt.redraw->n, pop_rng, opt.redraw->mode);
            prepare_shock(shock, opt.redraw->prepare);
            shock.lipschitz_bound = setup.shock.lipschitz_bound;
            ExperimentSetup local = setup;
            local.params = params;
            local.shock = std::move(shock);
            return run_episode(local, env_seed, policy_seed);
        }
        return run_episode(setup, env_seed, policy_seed);
    };

    MonteCarloResult result;
    result.traces.resize(opt.n_reps);
    const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(opt.n_reps)));
    if (jobs == 1) {
        for (std::size_t k = 0; k < opt.n_reps; ++k) result.traces[k] = run_rep(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (;;) {
                const std::size_t k = next.fetch_add(1);
                if (k >= opt.n_reps) return;
                try {
                    result.traces[k] = run_rep(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    result.summary.n_reps = opt.n_reps;
    result.summary.base_seed = opt.base_seed;
    result.summary.T = setup.T;
    detail::summarize_into(result.summary, result.traces, setup.T);
    return result;
}

/// One row of an exploration-rate sweep: mean and middle-70% band of
/// cumulative regret at the horizon, per value of r.
struct SweepRow {
    double r = 0.0;
    double regret_mean = 0.0;
    double regret_p15 = 0.0;
    double regret_p85 = 0.0;
};

/// Rerun the RPMP experiment for each r value (same seeds throughout, so
/// rows differ only through r). Values must lie in (0, 1).
inline std::vector<SweepRow> sweep_r(const ExperimentSetup& setup, const MonteCarloOptions& opt,
                                     const std::vector<double>& r_values) {
    if (setup.policy != PolicyKind::rpmp)
        throw ConfigError("sweep_r: the sweep varies r, so the policy must be rpmp");
    if (r_values.empty()) throw ConfigError("sweep_r: no r values given");
    for (double r : r_values)
        if (!(r > 0.0 && r < 1.0))
            throw ConfigError("sweep_r: r values must lie in (0,1), got " + std::to_string(r));
    std::vector<SweepRow> rows;
    rows.reserve(r_values.size());
    for (double r : r_values) {
        ExperimentSetup local = setup;
        local.rpmp.r = r;
        const MonteCarloResult res = run_monte_carlo(local, opt);
        const SeriesSummary& regret = res.summary.by_name("regret_cum");
        SweepRow row;
        row.r = r;
        row.regret_mean = regret.mean.back();
        row.regret_p15 = regret.p15.back();
        row.regret_p85 = regret.p85.back();
        rows.push_back(row);
    }
    return rows;
}

}  // namespace drsim
