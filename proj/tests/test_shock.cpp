// Shock models: sample tables, closed-form partial expectations, sum
// shocks with cached quantile tables, empirical files, and the Assumption-2
// bi-Lipschitz audit.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <drsim/errors.hpp>
#include <drsim/shock.hpp>

using namespace drsim;
namespace fs = std::filesystem;

namespace {

// Scan-based oracles for the empirical law of a sample set.
double naive_cdf(const std::vector<double>& xs, double x) {
    std::size_t c = 0;
    for (double v : xs)
        if (v <= x) ++c;
    return double(c) / double(xs.size());
}

double naive_quantile(const std::vector<double>& xs, double alpha) {
    std::vector<double> s = xs;
    std::sort(s.begin(), s.end());
    for (double v : s)
        if (naive_cdf(xs, v) >= alpha) return v;
    return s.back();
}

double naive_partial_plus(const std::vector<double>& xs, double y) {
    double acc = 0.0;
    for (double v : xs) acc += std::max(v - y, 0.0);
    return acc / double(xs.size());
}

double naive_partial_minus(const std::vector<double>& xs, double y) {
    double acc = 0.0;
    for (double v : xs) acc += std::max(y - v, 0.0);
    return acc / double(xs.size());
}

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "drsim_shock_test";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("sample table matches scan-based oracles", "[shock]") {
    Rng rng(31);
    std::vector<double> xs;
    for (int i = 0; i < 5000; ++i) xs.push_back(rng.uniform(-3.0, 3.0));
    const SampleTable table(xs, 0);

    REQUIRE(table.size() == xs.size());
    REQUIRE(table.min() == *std::min_element(xs.begin(), xs.end()));
    REQUIRE(table.max() == *std::max_element(xs.begin(), xs.end()));

    for (double y = -3.5; y <= 3.5; y += 0.25) {
        REQUIRE(table.cdf(y) == naive_cdf(xs, y));
        REQUIRE(table.partial_plus(y) == Catch::Approx(naive_partial_plus(xs, y)).margin(1e-12));
        REQUIRE(table.partial_minus(y) == Catch::Approx(naive_partial_minus(xs, y)).margin(1e-12));
    }
    for (double a = 0.05; a < 1.0; a += 0.05) {
        REQUIRE(table.quantile(a) == naive_quantile(xs, a));
    }
}

TEST_CASE("sample table quantile hits exact order statistics", "[shock]") {
    const SampleTable table({3.0, 1.0, 2.0}, 0);
    REQUIRE(table.quantile(0.2) == 1.0);   // ceil(3*0.2) = 1st order statistic
    REQUIRE(table.quantile(1.0 / 3.0) == 1.0);
    REQUIRE(table.quantile(0.34) == 2.0);
    REQUIRE(table.quantile(0.99) == 3.0);
    REQUIRE(table.mean() == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("sample table draws stay inside the set deterministically", "[shock]") {
    const SampleTable table({-1.0, 0.5, 4.0}, 0);
    Rng a(5), b(5);
    for (int i = 0; i < 300; ++i) {
        const double x = table.draw(a);
        REQUIRE(x == table.draw(b));
        REQUIRE((x == -1.0 || x == 0.5 || x == 4.0));
    }
}

TEST_CASE("sample table round-trips through its binary cache format", "[shock]") {
    Rng rng(77);
    std::vector<double> xs;
    for (int i = 0; i < 1000; ++i) xs.push_back(rng.normal());
    const SampleTable table(xs, 0xabcdef);
    const fs::path file = temp_dir() / "table_roundtrip.bin";
    table.save(file);
    const SampleTable back = SampleTable::load(file);
    REQUIRE(back.size() == table.size());
    REQUIRE(back.seed() == table.seed());
    for (double a = 0.01; a < 1.0; a += 0.01)
        REQUIRE(back.quantile(a) == table.quantile(a));

    std::ofstream(file, std::ios::binary | std::ios::trunc) << "corrupt";
    REQUIRE_THROWS_AS(SampleTable::load(file), ConfigError);
}

TEST_CASE("closed-form shock partial expectations match references", "[shock]") {
    const TruncatedNormalShock tn(0.5, -2.0, 2.0);
    // Reference: exact integrals of the truncated normal (30-digit evaluation).
    REQUIRE(tn.partial_plus(0.3) == Catch::Approx(0.084284291156881162).margin(5e-10));
    REQUIRE(tn.partial_plus(-0.7) == Catch::Approx(0.71829048467536023).margin(5e-10));
    // Below/above the support the partials are affine/zero exactly.
    REQUIRE(tn.partial_plus(-3.0) == Catch::Approx(3.0).margin(1e-12));
    REQUIRE(tn.partial_plus(2.0) == 0.0);
    REQUIRE(tn.partial_minus(3.0) == Catch::Approx(3.0).margin(1e-12));
    REQUIRE(tn.partial_minus(-2.0) == 0.0);
}

TEST_CASE("partial expectations satisfy the mean identity", "[shock]") {
    // E[(X-y)+] - E[(y-X)+] = mean - y for every y.
    const TruncatedNormalShock tn(1.0, -1.0, 3.0);
    for (double y = -1.5; y <= 3.5; y += 0.3) {
        REQUIRE(tn.partial_plus(y) - tn.partial_minus(y) ==
                Catch::Approx(tn.mean() - y).margin(1e-9));
    }
    const SampleTable table({0.5, -1.5, 2.0, 0.0, 1.0}, 0);
    for (double y = -2.0; y <= 2.5; y += 0.25) {
        REQUIRE(table.partial_plus(y) - table.partial_minus(y) ==
                Catch::Approx(table.mean() - y).margin(1e-12));
    }
}

TEST_CASE("shock model quantile contract", "[shock]") {
    const ShockModel sym(TruncatedNormalShock(1.0, -2.0, 2.0));
    REQUIRE(sym.quantile(0.5) == Catch::Approx(0.0).margin(1e-11));

    const ShockModel tn(TruncatedNormalShock(0.5, -2.0, 2.0));
    const double q = tn.quantile(0.2);
    REQUIRE(q == Catch::Approx(-0.42077667966684502).margin(1e-8));
    REQUIRE(q > -2.0);
    REQUIRE(q < 0.0);
    REQUIRE(tn.quantile(tn.cdf(0.3)) == Catch::Approx(0.3).margin(1e-6));

    REQUIRE_THROWS_AS(tn.quantile(0.0), std::domain_error);
    REQUIRE_THROWS_AS(tn.quantile(1.0), std::domain_error);
    REQUIRE_THROWS_AS(tn.quantile(-2.0), std::domain_error);
}

TEST_CASE("shock sampling: support, mean, determinism", "[shock]") {
    const ShockModel tn(TruncatedNormalShock(0.5, -2.0, 2.0));
    Rng rng(404);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = tn.sample(rng);
        REQUIRE(x >= tn.support_lo());
        REQUIRE(x <= tn.support_hi());
        sum += x;
    }
    REQUIRE(std::abs(sum / n) < 0.02);

    Rng a(11), b(11);
    for (int i = 0; i < 100; ++i) REQUIRE(tn.sample(a) == tn.sample(b));
}

TEST_CASE("exact sum shock needs preparation for distribution services", "[shock]") {
    ShockModel sum(SumShock(4, 0.5, -2.0, 2.0, SumShockMode::exact));
    REQUIRE_FALSE(sum.prepared());
    REQUIRE_THROWS_AS(sum.quantile(0.2), StateError);
    REQUIRE_THROWS_AS(sum.cdf(0.0), StateError);
    REQUIRE_THROWS_AS(sum.partial_plus(0.0), StateError);

    // Sampling works without preparation (fresh per-customer draws).
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const double x = sum.sample(rng);
        REQUIRE(x >= sum.support_lo());
        REQUIRE(x <= sum.support_hi());
    }

    TablePrepareOptions opt;
    opt.cache_dir.clear();
    opt.samples = 1000;  // below the contract minimum
    REQUIRE_THROWS_AS(prepare_shock(sum, opt), ConfigError);
}

TEST_CASE("prepared sum shock agrees with its CLT approximation", "[shock][slow]") {
    // n large enough that the sum is effectively Gaussian.
    ShockModel exact(SumShock(400, 0.5, -2.0, 2.0, SumShockMode::exact));
    const ShockModel clt(SumShock(400, 0.5, -2.0, 2.0, SumShockMode::clt));
    REQUIRE(clt.prepared());

    TablePrepareOptions opt;
    opt.cache_dir.clear();
    opt.samples = 1'000'000;
    prepare_shock(exact, opt);
    REQUIRE(exact.prepared());

    REQUIRE(std::abs(exact.mean()) < 0.05);
    REQUIRE(std::abs(clt.mean()) < 1e-12);
    for (double a : {0.2, 0.5, 0.8}) {
        REQUIRE(exact.quantile(a) == Catch::Approx(clt.quantile(a)).margin(0.08));
    }
    // Aggregate sd = sqrt(400 * var_i) with var_i = 0.24973...
    const double sd = std::sqrt(400.0 * 0.24973232259311845);
    REQUIRE(clt.quantile(0.8413447460685429) == Catch::Approx(sd).epsilon(0.01));
}

TEST_CASE("sum shock tables cache to disk and reload identically", "[shock][slow]") {
    const fs::path dir = temp_dir() / "cache";
    fs::remove_all(dir);

    TablePrepareOptions opt;
    opt.cache_dir = dir.string();
    opt.samples = 1'000'000;

    ShockModel first(SumShock(3, 0.5, -1.0, 1.0, SumShockMode::exact));
    prepare_shock(first, opt);
    REQUIRE(fs::exists(dir));
    REQUIRE_FALSE(fs::is_empty(dir));

    ShockModel second(SumShock(3, 0.5, -1.0, 1.0, SumShockMode::exact));
    prepare_shock(second, opt);
    for (double a = 0.05; a < 1.0; a += 0.05)
        REQUIRE(first.quantile(a) == second.quantile(a));

    // A corrupt cache entry is rebuilt, not fatal.
    for (const auto& entry : fs::directory_iterator(dir))
        std::ofstream(entry.path(), std::ios::binary | std::ios::trunc) << "junk";
    ShockModel third(SumShock(3, 0.5, -1.0, 1.0, SumShockMode::exact));
    prepare_shock(third, opt);
    for (double a = 0.05; a < 1.0; a += 0.05)
        REQUIRE(first.quantile(a) == third.quantile(a));
}

TEST_CASE("empirical shock from file parses and validates", "[shock]") {
    const fs::path good = temp_dir() / "samples_good.txt";
    std::ofstream(good) << "0.5\n-1.25\n\n  3.0 \n";
    const EmpiricalShock shock = EmpiricalShock::from_file(good);
    REQUIRE(shock.table().size() == 3);
    REQUIRE(shock.support_lo() == -1.25);
    REQUIRE(shock.support_hi() == 3.0);

    const fs::path bad = temp_dir() / "samples_bad.txt";
    std::ofstream(bad) << "0.5\nnot-a-number\n";
    try {
        EmpiricalShock::from_file(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find(":2:") != std::string::npos);
    }

    REQUIRE_THROWS_AS(EmpiricalShock::from_file(temp_dir() / "missing.txt"), ConfigError);
}

TEST_CASE("degenerate shock is a point mass at zero", "[shock]") {
    const ShockModel d = degenerate_shock();
    REQUIRE(d.mean() == 0.0);
    REQUIRE(d.quantile(0.3) == 0.0);
    REQUIRE(d.quantile(0.9) == 0.0);
    REQUIRE(d.partial_plus(-1.0) == 1.0);
    REQUIRE(d.partial_minus(2.0) == 2.0);
    Rng rng(1);
    REQUIRE(d.sample(rng) == 0.0);
}

TEST_CASE("bi-Lipschitz audit flags without aborting", "[shock]") {
    // Density of tn(0.5,[-2,2]) peaks at ~0.798 < 1, so L=1 bounds the
    // upper side; near the support ends the density drops below 1/L and the
    // lower side must be flagged, not thrown.
    ShockModel tn(TruncatedNormalShock(0.5, -2.0, 2.0));
    tn.lipschitz_bound = 1.0;
    const BiLipschitzReport rep = check_bilipschitz(tn, *tn.lipschitz_bound);
    REQUIRE(rep.upper_violations == 0);
    REQUIRE(rep.lower_violations > 0);
    REQUIRE_FALSE(rep.ok());
    REQUIRE(rep.max_slope <= 1.0);
    REQUIRE(rep.max_slope == Catch::Approx(0.7979351039941569).margin(0.01));

    // A tight support keeps the density inside [1/L, L] throughout.
    const ShockModel narrow(TruncatedNormalShock(1.0, -0.5, 0.5));
    const BiLipschitzReport ok = check_bilipschitz(narrow, 3.0);
    REQUIRE(ok.upper_violations == 0);
    REQUIRE(ok.lower_violations == 0);
    REQUIRE(ok.ok());

    REQUIRE_THROWS_AS(check_bilipschitz(tn, 0.5), std::domain_error);
}
