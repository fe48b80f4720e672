// drsim — command-line driver for the demand-response contract simulator.
//
// Subcommands:
//   simulate   run the configured policy over n_reps replications
//   compare    run >= 2 configured policies on identical environment seeds
//   sweep      re-run an RPMP config across perturbation decay exponents r
//   oracle     print the clairvoyant decisions per period without simulating
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <drsim/drsim.hpp>

namespace fs = std::filesystem;
using namespace drsim;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    std::optional<std::string> out;
    std::optional<std::size_t> reps;
    std::optional<std::size_t> horizon;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", o.seed, "override base_seed");
    cmd->add_option("--jobs", o.jobs, "worker threads (does not affect results)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "override output directory");
    cmd->add_option("--reps", o.reps, "override replication count");
    cmd->add_option("--horizon", o.horizon, "override horizon T");
}

ExperimentConfig load_with_overrides(const CommonOpts& o) {
    ExperimentConfig cfg = load_config(o.config_path);
    if (o.seed) cfg.base_seed = *o.seed;
    if (o.reps) cfg.reps = *o.reps;
    if (o.horizon) cfg.T = *o.horizon;
    if (o.out) cfg.out_dir = *o.out;
    validate_config(cfg);
    return cfg;
}

void prepare_with_note(ShockModel& shock, const ExperimentConfig& cfg) {
    if (shock.prepared()) return;
    std::printf("building shock quantile table (%zu samples; cache: %s)...\n",
                cfg.oracle_quantile_samples,
                cfg.cache_dir.empty() ? "disabled" : cfg.cache_dir.c_str());
    std::fflush(stdout);
    prepare_shock(shock, prepare_options(cfg));
}

/// Column labels for a compare run: policy kind, with _2, _3... suffixes on
/// repeated kinds.
std::vector<std::string> policy_labels(const ExperimentConfig& cfg) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
        std::string base = policy_name(cfg.policies[i].kind);
        std::size_t occurrence = 1;
        for (std::size_t j = 0; j < i; ++j)
            if (cfg.policies[j].kind == cfg.policies[i].kind) ++occurrence;
        labels.push_back(occurrence == 1 ? base : base + "_" + std::to_string(occurrence));
    }
    return labels;
}

void write_traces(const fs::path& dir, const std::string& prefix, const MonteCarloResult& res) {
    for (std::size_t k = 0; k < res.traces.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "%strace_%04zu.csv", prefix.c_str(), k);
        csv::write_trace(dir / name, res.traces[k]);
    }
}

nlohmann::json base_metadata(const ExperimentConfig& cfg, const char* command) {
    nlohmann::json meta;
    meta["version"] = kVersion;
    meta["command"] = command;
    meta["config_hash"] = config_hash(cfg);
    meta["base_seed"] = cfg.base_seed;
    meta["reps"] = cfg.reps;
    meta["horizon"] = cfg.T;
    if ((cfg.population || cfg.shock.kind == "sum") && cfg.shock.mode == SumShockMode::exact) {
        meta["quantile_table"] = {{"samples", cfg.oracle_quantile_samples},
                                  {"seed", kDefaultTableSeed}};
    }
    return meta;
}

void write_json(const fs::path& file, const nlohmann::json& j) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw StateError("cannot write " + file.string());
    out << j.dump(2) << '\n';
}

int cmd_simulate(const CommonOpts& o) {
    ExperimentConfig cfg = load_with_overrides(o);
    if (cfg.policies.size() != 1)
        throw ConfigError("config: 'simulate' needs a single 'policy' (use 'compare')");
    auto [setup, mc] = build_experiment(cfg);
    prepare_with_note(setup.shock, cfg);
    mc.jobs = o.jobs;

    const auto t0 = std::chrono::steady_clock::now();
    MonteCarloResult res = run_monte_carlo(setup, mc);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    save_config(cfg, dir / "config.json");
    if (cfg.write_traces) write_traces(dir, "", res);
    csv::write_summary(dir / "summary.csv", res.summary);

    const double final_regret = res.summary.by_name("regret_cum").mean.back();
    nlohmann::json meta = base_metadata(cfg, "simulate");
    meta["policy"] = policy_name(cfg.policies[0].kind);
    meta["final_mean_regret"] = final_regret;
    meta["runtime_seconds"] = seconds;
    write_json(dir / "summary.json", meta);

    std::printf("simulate: %s, %zu reps, T=%zu\n", policy_name(cfg.policies[0].kind), cfg.reps,
                cfg.T);
    std::printf("final mean regret: %.6f\n", final_regret);
    std::printf("runtime: %.2f s\n", seconds);
    return 0;
}

int cmd_compare(const CommonOpts& o) {
    ExperimentConfig cfg = load_with_overrides(o);
    if (cfg.policies.size() < 2)
        throw ConfigError("config: 'compare' needs a 'policies' list with >= 2 entries");
    const std::vector<std::string> labels = policy_labels(cfg);

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    save_config(cfg, dir / "config.json");

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<MonteCarloResult> results;
    for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
        auto [setup, mc] = build_experiment(cfg, i);
        prepare_with_note(setup.shock, cfg);
        mc.jobs = o.jobs;
        results.push_back(run_monte_carlo(setup, mc));
        if (cfg.write_traces) write_traces(dir, labels[i] + "_", results.back());
        csv::write_summary(dir / (labels[i] + "_summary.csv"), results.back().summary);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // Joined regret series, one mean/p15/p85 triple per policy.
    {
        std::ofstream out(dir / "compare_regret.csv", std::ios::trunc);
        if (!out) throw StateError("cannot write " + (dir / "compare_regret.csv").string());
        out << 't';
        for (const std::string& label : labels)
            out << ',' << label << "_mean," << label << "_p15," << label << "_p85";
        out << '\n';
        for (std::size_t t = 0; t < cfg.T; ++t) {
            out << (t + 1);
            for (const MonteCarloResult& res : results) {
                const SeriesSummary& s = res.summary.by_name("regret_cum");
                out << ',' << csv::format(s.mean[t]) << ',' << csv::format(s.p15[t]) << ','
                    << csv::format(s.p85[t]);
            }
            out << '\n';
        }
    }

    nlohmann::json meta = base_metadata(cfg, "compare");
    meta["policies"] = labels;
    nlohmann::json finals = nlohmann::json::object();
    std::printf("compare: %zu reps, T=%zu\n", cfg.reps, cfg.T);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double r = results[i].summary.by_name("regret_cum").mean.back();
        finals[labels[i]] = r;
        std::printf("final mean regret [%s]: %.6f\n", labels[i].c_str(), r);
    }
    meta["final_mean_regret"] = finals;
    meta["runtime_seconds"] = seconds;
    write_json(dir / "summary.json", meta);
    std::printf("runtime: %.2f s\n", seconds);
    return 0;
}

int cmd_sweep(const CommonOpts& o, const std::vector<double>& values) {
    ExperimentConfig cfg = load_with_overrides(o);
    if (values.empty()) throw ConfigError("sweep: --values must name at least one r");
    for (const double r : values)
        if (!(r > 0.0 && r < 1.0))
            throw ConfigError("sweep: r = " + std::to_string(r) + " outside (0,1)");
    if (cfg.policies.size() != 1 || cfg.policies[0].kind != PolicyKind::rpmp)
        throw ConfigError("config: 'sweep' needs a single rpmp 'policy'");

    auto [setup, mc] = build_experiment(cfg);
    prepare_with_note(setup.shock, cfg);
    mc.jobs = o.jobs;

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<SweepRow> rows = sweep_r(setup, mc, values);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    save_config(cfg, dir / "config.json");
    {
        std::ofstream out(dir / "sweep.csv", std::ios::trunc);
        if (!out) throw StateError("cannot write " + (dir / "sweep.csv").string());
        out << "r,regret_mean,regret_p15,regret_p85\n";
        for (const SweepRow& row : rows)
            out << csv::format(row.r) << ',' << csv::format(row.regret_mean) << ','
                << csv::format(row.regret_p15) << ',' << csv::format(row.regret_p85) << '\n';
    }

    std::printf("sweep over r: %zu reps each, T=%zu\n", cfg.reps, cfg.T);
    const SweepRow* best = &rows[0];
    for (const SweepRow& row : rows) {
        std::printf("  r=%.3f  final mean regret %.6f  [p15 %.6f, p85 %.6f]\n", row.r,
                    row.regret_mean, row.regret_p15, row.regret_p85);
        if (row.regret_mean < best->regret_mean) best = &row;
    }
    std::printf("minimum at r=%.3f (regret %.6f)\n", best->r, best->regret_mean);

    nlohmann::json meta = base_metadata(cfg, "sweep");
    nlohmann::json jrows = nlohmann::json::array();
    for (const SweepRow& row : rows)
        jrows.push_back({{"r", row.r},
                         {"regret_mean", row.regret_mean},
                         {"regret_p15", row.regret_p15},
                         {"regret_p85", row.regret_p85}});
    meta["rows"] = jrows;
    meta["best_r"] = best->r;
    meta["runtime_seconds"] = seconds;
    write_json(dir / "summary.json", meta);
    std::printf("runtime: %.2f s\n", seconds);
    return 0;
}

int cmd_oracle(const CommonOpts& o) {
    ExperimentConfig cfg = load_with_overrides(o);
    auto [params, shock] = build_demand_and_shock(cfg);
    prepare_with_note(shock, cfg);
    const MarketEnv env(cfg.da_prices, cfg.mu_plus, cfg.mu_minus, cfg.rt);
    env.validate(cfg.T);

    std::ofstream file;
    if (o.out) {
        fs::create_directories(*o.out);
        file.open(fs::path(*o.out) / "oracle.csv", std::ios::trunc);
        if (!file) throw StateError("cannot write oracle.csv under " + *o.out);
    }
    const std::string header = "t,alpha,p_star,Q_star";
    std::printf("%s\n", header.c_str());
    if (file) file << header << '\n';
    for (std::size_t t = 1; t <= cfg.T; ++t) {
        const double pi = env.pi_at(t);
        const double alpha = critical_ratio(pi, cfg.mu_plus, cfg.mu_minus);
        const Decision d = oracle_decision(params, shock, pi, cfg.mu_plus, cfg.mu_minus);
        std::printf("%zu,%s,%s,%s\n", t, csv::format(alpha).c_str(), csv::format(d.p).c_str(),
                    csv::format(d.Q).c_str());
        if (file)
            file << t << ',' << csv::format(alpha) << ',' << csv::format(d.p) << ','
                 << csv::format(d.Q) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drsim — demand-response contract simulator"};
    app.require_subcommand(1);

    CommonOpts o;
    std::vector<double> sweep_values = {0.1, 0.3, 0.5, 0.7, 0.9};

    CLI::App* sim = app.add_subcommand("simulate", "run the configured policy");
    add_common(sim, o);
    CLI::App* cmp = app.add_subcommand("compare", "run each configured policy on shared seeds");
    add_common(cmp, o);
    CLI::App* swp = app.add_subcommand("sweep", "sweep the RPMP decay exponent r");
    add_common(swp, o);
    swp->add_option("--values", sweep_values, "r values to sweep")->delimiter(',');
    CLI::App* orc = app.add_subcommand("oracle", "print clairvoyant decisions per period");
    add_common(orc, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(o);
        if (cmp->parsed()) return cmd_compare(o);
        if (swp->parsed()) return cmd_sweep(o, sweep_values);
        return cmd_oracle(o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
