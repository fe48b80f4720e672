// Experiment configuration: a versioned JSON document describing the
// population or explicit demand parameters, shock model, market, policies,
// horizon, replication count, seed, and output options.
//
// Loading validates every component invariant up front (including
// Assumption 1 over the whole DA price series) and reports problems with
// the JSON path of the offending field. Re-serializing a loaded config is
// canonical: loading the result describes the identical experiment, and
// config_hash() of both forms matches.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "drsim/demand.hpp"
#include "drsim/errors.hpp"
#include "drsim/market.hpp"
#include "drsim/policies.hpp"
#include "drsim/shock.hpp"
#include "drsim/simulator.hpp"

namespace drsim {

inline constexpr int kConfigSchemaVersion = 1;

/// Shock description as configured (resolved into a ShockModel on build).
struct ShockSpec {
    std::string kind = "sum";  // "sum" | "truncated_normal" | "empirical"
    double sigma = 0.0, lo = 0.0, hi = 0.0;          // truncated_normal / explicit sum
    std::size_t n = 0;                               // explicit sum only
    std::string file;                                // empirical only
    SumShockMode mode = SumShockMode::exact;         // sum kinds only
    std::optional<double> lipschitz_bound;
};

struct PolicyConfig {
    PolicyKind kind = PolicyKind::rpmp;
    RpmpConfig rpmp;  // eta/rho/r used by rpmp; init shared with myopic
};

struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;

    // Exactly one of population / demand is configured. With a population,
    // the aggregate shock is always the matching sum of customer shocks.
    std::optional<CustomerSpec> population;
    std::size_t population_n = 0;
    std::optional<DemandParams> demand;
    ShockSpec shock;

    ParamBox box;

    std::vector<double> da_prices = {0.0};
    double mu_plus = 0.0, mu_minus = 0.0;
    RtPriceSpec rt;

    std::vector<PolicyConfig> policies;  // one for simulate, two+ for compare
    bool multi_policy = false;           // config used "policies" rather than "policy"

    std::size_t T = 0;
    std::size_t reps = 1;
    std::uint64_t base_seed = 0;
    std::string out_dir = "out";

    bool clamp_price_at_zero = false;
    bool redraw_population = false;
    bool write_traces = true;
    std::size_t oracle_quantile_samples = 2'000'000;
    std::string cache_dir = ".drsim_cache";
};

namespace cfg_detail {

using nlohmann::json;

inline const json& member(const json& j, const std::string& path, const char* key) {
    if (!j.is_object()) throw ConfigError("config: " + path + ": expected an object");
    const auto it = j.find(key);
    if (it == j.end())
        throw ConfigError("config: " + path + (path.empty() ? "" : ".") + key + ": missing");
    return *it;
}

inline const json* opt_member(const json& j, const std::string& path, const char* key) {
    if (!j.is_object()) throw ConfigError("config: " + path + ": expected an object");
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline std::string join(const std::string& path, const char* key) {
    return path.empty() ? key : path + "." + key;
}

inline double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError("config: " + path + ": expected a number");
    return j.get<double>();
}

inline std::uint64_t as_u64(const json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !j.is_number_integer())
        throw ConfigError("config: " + path + ": expected a nonnegative integer");
    if (j.is_number_integer() && j.get<std::int64_t>() < 0)
        throw ConfigError("config: " + path + ": expected a nonnegative integer");
    return j.get<std::uint64_t>();
}

inline std::size_t as_size(const json& j, const std::string& path) {
    return static_cast<std::size_t>(as_u64(j, path));
}

inline bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError("config: " + path + ": expected a boolean");
    return j.get<bool>();
}

inline std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError("config: " + path + ": expected a string");
    return j.get<std::string>();
}

inline double num_field(const json& j, const std::string& path, const char* key) {
    return as_number(member(j, path, key), join(path, key));
}

inline PolicyConfig parse_policy(const json& j, const std::string& path) {
    PolicyConfig pc;
    const std::string kind = as_string(member(j, path, "kind"), join(path, "kind"));
    if (kind == "oracle")
        pc.kind = PolicyKind::oracle;
    else if (kind == "myopic")
        pc.kind = PolicyKind::myopic;
    else if (kind == "rpmp")
        pc.kind = PolicyKind::rpmp;
    else
        throw ConfigError("config: " + join(path, "kind") +
                          ": expected one of oracle|myopic|rpmp, got '" + kind + "'");
    if (const json* v = opt_member(j, path, "eta")) pc.rpmp.eta = as_number(*v, join(path, "eta"));
    if (const json* v = opt_member(j, path, "rho")) pc.rpmp.rho = as_number(*v, join(path, "rho"));
    if (const json* v = opt_member(j, path, "r")) pc.rpmp.r = as_number(*v, join(path, "r"));
    if (const json* v = opt_member(j, path, "init")) {
        const std::string ip = join(path, "init");
        pc.rpmp.init.p1 = num_field(*v, ip, "p1");
        pc.rpmp.init.Q1 = num_field(*v, ip, "Q1");
        pc.rpmp.init.p2 = num_field(*v, ip, "p2");
        pc.rpmp.init.Q2 = num_field(*v, ip, "Q2");
    }
    return pc;
}

inline json policy_to_json(const PolicyConfig& pc) {
    json j;
    j["kind"] = policy_name(pc.kind);
    j["eta"] = pc.rpmp.eta;
    j["rho"] = pc.rpmp.rho;
    j["r"] = pc.rpmp.r;
    j["init"] = {{"p1", pc.rpmp.init.p1},
                 {"Q1", pc.rpmp.init.Q1},
                 {"p2", pc.rpmp.init.p2},
                 {"Q2", pc.rpmp.init.Q2}};
    return j;
}

}  // namespace cfg_detail

/// Component-level validation of a parsed config (called by load_config;
/// call again after applying command-line overrides).
inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.schema_version != kConfigSchemaVersion)
        throw ConfigError("config: schema_version: expected " +
                          std::to_string(kConfigSchemaVersion) + ", got " +
                          std::to_string(cfg.schema_version));
    if (cfg.population.has_value() == cfg.demand.has_value())
        throw ConfigError("config: exactly one of 'population' and 'demand' must be given");
    if (cfg.population) {
        cfg.population->validate();
        if (cfg.population_n < 1) throw ConfigError("config: population.n: must be >= 1");
        if (cfg.shock.kind != "sum")
            throw ConfigError("config: shock.kind: must be 'sum' when a population is configured");
    } else {
        if (cfg.shock.kind == "truncated_normal") {
            if (!(cfg.shock.sigma > 0.0)) throw ConfigError("config: shock.sigma: must be > 0");
            if (!(cfg.shock.lo < cfg.shock.hi))
                throw ConfigError("config: shock: require lo < hi");
        } else if (cfg.shock.kind == "sum") {
            if (cfg.shock.n < 1) throw ConfigError("config: shock.n: must be >= 1");
            if (!(cfg.shock.sigma > 0.0)) throw ConfigError("config: shock.sigma: must be > 0");
            if (!(cfg.shock.lo < cfg.shock.hi))
                throw ConfigError("config: shock: require lo < hi");
        } else if (cfg.shock.kind == "empirical") {
            if (cfg.shock.file.empty()) throw ConfigError("config: shock.file: missing");
        } else {
            throw ConfigError("config: shock.kind: expected sum|truncated_normal|empirical, got '" +
                              cfg.shock.kind + "'");
        }
    }
    if (cfg.shock.lipschitz_bound && !(*cfg.shock.lipschitz_bound >= 1.0))
        throw ConfigError("config: shock.lipschitz_bound: must be >= 1");
    cfg.box.validate();
    if (cfg.T < 3) throw ConfigError("config: horizon: must be >= 3");
    if (cfg.reps < 1) throw ConfigError("config: reps: must be >= 1");
    if (cfg.policies.empty()) throw ConfigError("config: no policy configured");
    for (const PolicyConfig& pc : cfg.policies)
        if (pc.kind != PolicyKind::oracle) pc.rpmp.validate();
    if (cfg.redraw_population && !cfg.population)
        throw ConfigError("config: flags.redraw_population needs a 'population' section");
    if (cfg.oracle_quantile_samples < 1'000'000)
        throw ConfigError("config: flags.oracle_quantile_samples: must be >= 1e6");
    // Assumption 1 across the whole configured horizon, before any run.
    MarketEnv(cfg.da_prices, cfg.mu_plus, cfg.mu_minus, cfg.rt).validate(cfg.T);
}

inline ExperimentConfig parse_config(const nlohmann::json& root) {
    using namespace cfg_detail;
    ExperimentConfig cfg;
    cfg.schema_version =
        static_cast<int>(as_u64(member(root, "", "schema_version"), "schema_version"));

    if (const json* p = opt_member(root, "", "population")) {
        CustomerSpec cs;
        cs.a_min = num_field(*p, "population", "a_min");
        cs.a_max = num_field(*p, "population", "a_max");
        cs.b_mean = num_field(*p, "population", "b_mean");
        cs.b_min = num_field(*p, "population", "b_min");
        cs.b_max = num_field(*p, "population", "b_max");
        cs.shock_sigma = num_field(*p, "population", "shock_sigma");
        cs.shock_lo = num_field(*p, "population", "shock_lo");
        cs.shock_hi = num_field(*p, "population", "shock_hi");
        cfg.population = cs;
        cfg.population_n = as_size(member(*p, "population", "n"), "population.n");
    }
    if (const json* d = opt_member(root, "", "demand")) {
        DemandParams dp;
        dp.a = num_field(*d, "demand", "a");
        dp.b = num_field(*d, "demand", "b");
        cfg.demand = dp;
    }

    if (const json* s = opt_member(root, "", "shock")) {
        if (const json* v = opt_member(*s, "shock", "kind"))
            cfg.shock.kind = as_string(*v, "shock.kind");
        if (const json* v = opt_member(*s, "shock", "sigma"))
            cfg.shock.sigma = as_number(*v, "shock.sigma");
        if (const json* v = opt_member(*s, "shock", "lo")) cfg.shock.lo = as_number(*v, "shock.lo");
        if (const json* v = opt_member(*s, "shock", "hi")) cfg.shock.hi = as_number(*v, "shock.hi");
        if (const json* v = opt_member(*s, "shock", "n")) cfg.shock.n = as_size(*v, "shock.n");
        if (const json* v = opt_member(*s, "shock", "file"))
            cfg.shock.file = as_string(*v, "shock.file");
        if (const json* v = opt_member(*s, "shock", "mode")) {
            const std::string mode = as_string(*v, "shock.mode");
            if (mode == "exact")
                cfg.shock.mode = SumShockMode::exact;
            else if (mode == "clt")
                cfg.shock.mode = SumShockMode::clt;
            else
                throw ConfigError("config: shock.mode: expected exact|clt, got '" + mode + "'");
        }
        if (const json* v = opt_member(*s, "shock", "lipschitz_bound"))
            cfg.shock.lipschitz_bound = as_number(*v, "shock.lipschitz_bound");
    }

    {
        const json& b = member(root, "", "param_box");
        cfg.box.a_lo = num_field(b, "param_box", "a_lo");
        cfg.box.a_hi = num_field(b, "param_box", "a_hi");
        cfg.box.b_hi = num_field(b, "param_box", "b_hi");
    }

    {
        const json& m = member(root, "", "market");
        const json& da = member(m, "market", "da_price");
        cfg.da_prices.clear();
        if (da.is_array()) {
            if (da.empty()) throw ConfigError("config: market.da_price: empty series");
            for (std::size_t i = 0; i < da.size(); ++i)
                cfg.da_prices.push_back(
                    as_number(da[i], "market.da_price[" + std::to_string(i) + "]"));
        } else {
            cfg.da_prices.push_back(as_number(da, "market.da_price"));
        }
        cfg.mu_plus = num_field(m, "market", "mu_plus");
        cfg.mu_minus = num_field(m, "market", "mu_minus");
        if (const json* rt = opt_member(m, "market", "rt_prices")) {
            const std::string kind = as_string(member(*rt, "market.rt_prices", "kind"),
                                               "market.rt_prices.kind");
            if (kind == "point")
                cfg.rt.kind = RtPriceKind::point;
            else if (kind == "lognormal")
                cfg.rt.kind = RtPriceKind::lognormal;
            else
                throw ConfigError("config: market.rt_prices.kind: expected point|lognormal, got '" +
                                  kind + "'");
            if (const json* v = opt_member(*rt, "market.rt_prices", "sigma_plus"))
                cfg.rt.sigma_plus = as_number(*v, "market.rt_prices.sigma_plus");
            if (const json* v = opt_member(*rt, "market.rt_prices", "sigma_minus"))
                cfg.rt.sigma_minus = as_number(*v, "market.rt_prices.sigma_minus");
        }
    }

    const json* single = opt_member(root, "", "policy");
    const json* multi = opt_member(root, "", "policies");
    if ((single == nullptr) == (multi == nullptr))
        throw ConfigError("config: exactly one of 'policy' and 'policies' must be given");
    if (single != nullptr) {
        cfg.policies.push_back(parse_policy(*single, "policy"));
    } else {
        cfg.multi_policy = true;
        if (!multi->is_array() || multi->empty())
            throw ConfigError("config: policies: expected a nonempty array");
        for (std::size_t i = 0; i < multi->size(); ++i)
            cfg.policies.push_back(
                parse_policy((*multi)[i], "policies[" + std::to_string(i) + "]"));
    }

    cfg.T = as_size(member(root, "", "horizon"), "horizon");
    cfg.reps = as_size(member(root, "", "reps"), "reps");
    cfg.base_seed = as_u64(member(root, "", "base_seed"), "base_seed");
    if (const json* v = opt_member(root, "", "out_dir")) cfg.out_dir = as_string(*v, "out_dir");

    if (const json* f = opt_member(root, "", "flags")) {
        if (const json* v = opt_member(*f, "flags", "clamp_price_at_zero"))
            cfg.clamp_price_at_zero = as_bool(*v, "flags.clamp_price_at_zero");
        if (const json* v = opt_member(*f, "flags", "redraw_population"))
            cfg.redraw_population = as_bool(*v, "flags.redraw_population");
        if (const json* v = opt_member(*f, "flags", "write_traces"))
            cfg.write_traces = as_bool(*v, "flags.write_traces");
        if (const json* v = opt_member(*f, "flags", "oracle_quantile_samples"))
            cfg.oracle_quantile_samples = as_size(*v, "flags.oracle_quantile_samples");
        if (const json* v = opt_member(*f, "flags", "cache_dir"))
            cfg.cache_dir = as_string(*v, "flags.cache_dir");
    }

    validate_config(cfg);
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config: cannot read " + file.string());
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + file.string() + ": " + e.what());
    }
    return parse_config(root);
}

/// Canonical JSON form (defaults made explicit, keys sorted by nlohmann).
inline nlohmann::json to_json(const ExperimentConfig& cfg) {
    using nlohmann::json;
    json root;
    root["schema_version"] = cfg.schema_version;
    if (cfg.population) {
        const CustomerSpec& cs = *cfg.population;
        root["population"] = {{"n", cfg.population_n},   {"a_min", cs.a_min},
                              {"a_max", cs.a_max},       {"b_mean", cs.b_mean},
                              {"b_min", cs.b_min},       {"b_max", cs.b_max},
                              {"shock_sigma", cs.shock_sigma},
                              {"shock_lo", cs.shock_lo}, {"shock_hi", cs.shock_hi}};
    }
    if (cfg.demand) root["demand"] = {{"a", cfg.demand->a}, {"b", cfg.demand->b}};
    {
        json s;
        s["kind"] = cfg.shock.kind;
        if (cfg.shock.kind == "truncated_normal" || (cfg.shock.kind == "sum" && cfg.demand)) {
            s["sigma"] = cfg.shock.sigma;
            s["lo"] = cfg.shock.lo;
            s["hi"] = cfg.shock.hi;
        }
        if (cfg.shock.kind == "sum" && cfg.demand) s["n"] = cfg.shock.n;
        if (cfg.shock.kind == "empirical") s["file"] = cfg.shock.file;
        if (cfg.shock.kind == "sum")
            s["mode"] = cfg.shock.mode == SumShockMode::exact ? "exact" : "clt";
        if (cfg.shock.lipschitz_bound) s["lipschitz_bound"] = *cfg.shock.lipschitz_bound;
        root["shock"] = s;
    }
    root["param_box"] = {{"a_lo", cfg.box.a_lo}, {"a_hi", cfg.box.a_hi}, {"b_hi", cfg.box.b_hi}};
    {
        json m;
        if (cfg.da_prices.size() == 1)
            m["da_price"] = cfg.da_prices[0];
        else
            m["da_price"] = cfg.da_prices;
        m["mu_plus"] = cfg.mu_plus;
        m["mu_minus"] = cfg.mu_minus;
        json rt;
        rt["kind"] = cfg.rt.kind == RtPriceKind::point ? "point" : "lognormal";
        rt["sigma_plus"] = cfg.rt.sigma_plus;
        rt["sigma_minus"] = cfg.rt.sigma_minus;
        m["rt_prices"] = rt;
        root["market"] = m;
    }
    if (!cfg.multi_policy) {
        root["policy"] = cfg_detail::policy_to_json(cfg.policies[0]);
    } else {
        nlohmann::json arr = nlohmann::json::array();
        for (const PolicyConfig& pc : cfg.policies) arr.push_back(cfg_detail::policy_to_json(pc));
        root["policies"] = arr;
    }
    root["horizon"] = cfg.T;
    root["reps"] = cfg.reps;
    root["base_seed"] = cfg.base_seed;
    root["out_dir"] = cfg.out_dir;
    root["flags"] = {{"clamp_price_at_zero", cfg.clamp_price_at_zero},
                     {"redraw_population", cfg.redraw_population},
                     {"write_traces", cfg.write_traces},
                     {"oracle_quantile_samples", cfg.oracle_quantile_samples},
                     {"cache_dir", cfg.cache_dir}};
    return root;
}

inline void save_config(const ExperimentConfig& cfg, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw ConfigError("config: cannot write " + file.string());
    out << to_json(cfg).dump(2) << '\n';
}

/// FNV-1a over the canonical serialization; identifies the experiment in
/// summaries and file names.
inline std::string config_hash(const ExperimentConfig& cfg) {
    const std::string dump = to_json(cfg).dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : dump) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Table-preparation options implied by the config.
inline TablePrepareOptions prepare_options(const ExperimentConfig& cfg) {
    TablePrepareOptions opt;
    opt.cache_dir = cfg.cache_dir;
    opt.samples = cfg.oracle_quantile_samples;
    return opt;
}

/// Resolve the configured shock (unprepared; see prepare_shock) and demand
/// parameters. Population mode draws the population deterministically from
/// the base seed so every policy of a compare run sees the same aggregate.
inline std::pair<DemandParams, ShockModel> build_demand_and_shock(const ExperimentConfig& cfg) {
    if (cfg.population) {
        Rng rng(derive_seed(cfg.base_seed, stream_tag::population, 0));
        auto [params, shock] =
            build_population(*cfg.population, cfg.population_n, rng, cfg.shock.mode);
        shock.lipschitz_bound = cfg.shock.lipschitz_bound;
        return {params, std::move(shock)};
    }
    ShockModel shock = [&]() -> ShockModel {
        if (cfg.shock.kind == "truncated_normal")
            return ShockModel(TruncatedNormalShock(cfg.shock.sigma, cfg.shock.lo, cfg.shock.hi));
        if (cfg.shock.kind == "sum")
            return ShockModel(
                SumShock(cfg.shock.n, cfg.shock.sigma, cfg.shock.lo, cfg.shock.hi, cfg.shock.mode));
        return ShockModel(EmpiricalShock::from_file(cfg.shock.file));
    }();
    shock.lipschitz_bound = cfg.shock.lipschitz_bound;
    return {*cfg.demand, std::move(shock)};
}

/// Assemble the runnable setup for one configured policy plus the matching
/// Monte Carlo options. The shock model is returned unprepared so the
/// caller can decide where (and whether) to cache the quantile table.
inline std::pair<ExperimentSetup, MonteCarloOptions> build_experiment(
    const ExperimentConfig& cfg, std::size_t policy_index = 0) {
    if (policy_index >= cfg.policies.size())
        throw ConfigError("config: policy index out of range");
    auto [params, shock] = build_demand_and_shock(cfg);
    const PolicyConfig& pc = cfg.policies[policy_index];
    ExperimentSetup setup{MarketEnv(cfg.da_prices, cfg.mu_plus, cfg.mu_minus, cfg.rt),
                          params,
                          std::move(shock),
                          cfg.box,
                          pc.kind,
                          pc.rpmp,
                          cfg.T,
                          cfg.clamp_price_at_zero};
    MonteCarloOptions mc;
    mc.n_reps = cfg.reps;
    mc.base_seed = cfg.base_seed;
    if (cfg.redraw_population) {
        PopulationSpec pop;
        pop.customers = *cfg.population;
        pop.n = cfg.population_n;
        pop.mode = cfg.shock.mode;
        pop.prepare = prepare_options(cfg);
        mc.redraw = pop;
    }
    return {std::move(setup), mc};
}

}  // namespace drsim
