// Population synthesis and the affine demand map.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include <drsim/demand.hpp>
#include <drsim/errors.hpp>

using namespace drsim;

namespace {

CustomerSpec sec5_customers() {
    CustomerSpec cs;
    cs.a_min = 0.04;
    cs.a_max = 0.2;
    cs.b_mean = 0.01;
    cs.b_min = 0.0;
    cs.b_max = 0.1;
    cs.shock_sigma = 0.5;
    cs.shock_lo = -2.0;
    cs.shock_hi = 2.0;
    return cs;
}

}  // namespace

TEST_CASE("two identical deterministic customers add exactly", "[demand]") {
    CustomerSpec cs = sec5_customers();
    cs.a_min = cs.a_max = 0.1;
    cs.b_mean = cs.b_min = cs.b_max = 0.05;
    Rng rng(1);
    const auto [params, shock] = build_population(cs, 2, rng);
    REQUIRE(params.a == Catch::Approx(0.2).margin(1e-15));
    REQUIRE(params.b == Catch::Approx(0.1).margin(1e-15));
    REQUIRE(shock.support_lo() == -4.0);
    REQUIRE(shock.support_hi() == 4.0);
}

TEST_CASE("population aggregates land in the contracted ranges", "[demand]") {
    Rng rng(20260825);
    const auto [params, shock] = build_population(sec5_customers(), 10000, rng);
    // Hard range bounds.
    REQUIRE(params.a >= 10000 * 0.04);
    REQUIRE(params.a <= 10000 * 0.2);
    REQUIRE(params.b >= 0.0);
    REQUIRE(params.b <= 10000 * 0.1);
    // Concentration around n*E[a_i] = 1200 (sd ~ 4.6) and n*E[b_i] ~ 99.95
    // (sd ~ 1.0 for the truncated exponential).
    REQUIRE(params.a == Catch::Approx(1200.0).margin(25.0));
    REQUIRE(params.b == Catch::Approx(99.95).margin(8.0));
    (void)shock;
}

TEST_CASE("population draw is deterministic in the generator seed", "[demand]") {
    Rng r1(42), r2(42), r3(43);
    const auto [p1, s1] = build_population(sec5_customers(), 500, r1);
    const auto [p2, s2] = build_population(sec5_customers(), 500, r2);
    const auto [p3, s3] = build_population(sec5_customers(), 500, r3);
    REQUIRE(p1.a == p2.a);
    REQUIRE(p1.b == p2.b);
    REQUIRE(p1.a != p3.a);
}

TEST_CASE("truncated exponential intercepts respect bounds and mean", "[demand]") {
    Rng rng(9);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double b = detail::truncated_exponential(rng, 0.01, 0.0, 0.1);
        REQUIRE(b >= 0.0);
        REQUIRE(b <= 0.1);
        sum += b;
    }
    // Mean of Exp(0.01) restricted to [0, 0.1] is 0.0099954598...; sd 0.009977.
    REQUIRE(sum / n == Catch::Approx(0.0099954598008990311).margin(4.0 * 0.01 / std::sqrt(double(n))));
}

TEST_CASE("customer spec validation", "[demand]") {
    CustomerSpec cs = sec5_customers();
    REQUIRE_NOTHROW(cs.validate());
    cs.a_min = 0.3;  // above a_max
    REQUIRE_THROWS_AS(cs.validate(), ConfigError);
    cs = sec5_customers();
    cs.shock_lo = 2.0;  // empty support
    REQUIRE_THROWS_AS(cs.validate(), ConfigError);
    cs = sec5_customers();
    cs.shock_sigma = 0.0;
    REQUIRE_THROWS_AS(cs.validate(), ConfigError);
}

TEST_CASE("aggregate reduction evaluates the affine map", "[demand]") {
    REQUIRE(aggregate_reduction({1.0, 0.0}, 0.5, 0.0) == 0.5);
    REQUIRE(aggregate_reduction({2.0, 1.0}, 1.0, -0.5) == 2.5);
    // Section-5 scale: a=1200, b=100 at the oracle price (0.5 - 100/1200)/2
    // gives 1200*(5/24) + 100 = 350.
    REQUIRE(aggregate_reduction({1200.0, 100.0}, 5.0 / 24.0, 0.0) ==
            Catch::Approx(350.0).margin(1e-9));
}

TEST_CASE("negative posted price is a domain error", "[demand]") {
    REQUIRE_THROWS_AS(aggregate_reduction({1.0, 0.0}, -0.01, 0.0), std::domain_error);
    REQUIRE_NOTHROW(aggregate_reduction({1.0, 0.0}, 0.0, 0.0));
    // The unchecked variant exists for the unfloored policies.
    REQUIRE(affine_reduction({2.0, 1.0}, -0.25, 0.0) == 0.5);
}

TEST_CASE("param box clamps componentwise", "[demand]") {
    const ParamBox box{0.5, 2.0, 5.0};
    REQUIRE_NOTHROW(box.validate());
    const DemandParams inside = box.clamp(1.0, 3.0);
    REQUIRE(inside.a == 1.0);
    REQUIRE(inside.b == 3.0);
    const DemandParams corner = box.clamp(-1.0, -1.0);
    REQUIRE(corner.a == 0.5);
    REQUIRE(corner.b == 0.0);
    REQUIRE(box.contains({1.0, 0.0}));
    REQUIRE_FALSE(box.contains({3.0, 0.0}));

    ParamBox bad{0.0, 2.0, 5.0};  // a_lo must be positive
    REQUIRE_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("clt-mode population shock needs no preparation", "[demand]") {
    Rng rng(12);
    const auto [params, shock] =
        build_population(sec5_customers(), 100, rng, SumShockMode::clt);
    REQUIRE(shock.prepared());
    REQUIRE(shock.quantile(0.5) == Catch::Approx(0.0).margin(1e-9));
    (void)params;
}
