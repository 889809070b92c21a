#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracle_helpers.hpp"
#include "valuation.hpp"

using namespace storarb;

TEST_CASE("bellman backup worked example: flat future, high price") {
    StorageSpec spec;
    spec.efficiency = 1.0;
    spec.marginal_cost = 0.0;
    spec.power_limit_per_step = 0.5;
    spec.capacity = 1.0;
    const auto next = MarginalValueCurve::constant(0.0, 1.0);
    const auto back = bellman_backup(next, 50.0, spec);
    // Qbar(e) = 50*min(0.5, e): marginal {[0,0.5): 50, [0.5,1]: 0}.
    REQUIRE(back.segment_count() == 2);
    CHECK(back.upper_breaks()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(back.upper_breaks()[1] == 1.0);
    CHECK(back.values()[0] == 50.0);
    CHECK(back.values()[1] == 0.0);
    CHECK(bellman_backup_offset(next, 0.0, 50.0, spec) == 0.0);
}

TEST_CASE("bellman backup worked example: cheap price opens a charge band") {
    StorageSpec spec;
    spec.efficiency = 0.8;
    spec.marginal_cost = 0.0;
    spec.power_limit_per_step = 0.5;
    spec.capacity = 1.0;
    const auto next = MarginalValueCurve::constant(40.0, 1.0);
    const auto back = bellman_backup(next, 20.0, spec);  // buy level 25 < 40
    // Full-charge band keeps 40 up to E - P*eta; the newly reachable band
    // carries the buy-in marginal 25.
    REQUIRE(back.segment_count() == 2);
    CHECK(back.upper_breaks()[0] == doctest::Approx(1.0 - 0.5 * 0.8).epsilon(1e-12));
    CHECK(back.values()[0] == 40.0);
    CHECK(back.values()[1] == doctest::Approx(25.0).epsilon(1e-12));
    // Offset: from empty, charging 0.5 at 20 costs 12.5 and gains Q(0.4) = 16.
    CHECK(bellman_backup_offset(next, 0.0, 20.0, spec) ==
          doctest::Approx(0.4 * 40.0 - 20.0 * 0.5).epsilon(1e-12));
}

TEST_CASE("bellman backup is the identity at idle prices") {
    StorageSpec spec;
    spec.efficiency = 0.9;
    spec.marginal_cost = 10.0;
    spec.power_limit_per_step = 0.5;
    spec.capacity = 1.0;
    const MarginalValueCurve next({0.5, 1.0}, {40.0, 38.0});
    // Idle needs buy = price/eta > 40 and sell = (price-10)*0.9 <= 38 for all SoC.
    const auto back = bellman_backup(next, 45.0, spec);
    for (double e = 0.0; e <= 1.0; e += 0.01) {
        CHECK(back.evaluate(e) == doctest::Approx(next.evaluate(e)).epsilon(1e-12));
    }
    CHECK(bellman_backup_offset(next, 3.25, 45.0, spec) == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("backup preserves monotone non-increasing marginals") {
    std::mt19937_64 rng(311);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 400; ++trial) {
        const StorageSpec spec = testoracle::random_spec(rng);
        const auto curve = testoracle::random_curve(rng, spec.capacity);
        const double price = -30.0 + 140.0 * unif(rng);
        const auto back = bellman_backup(curve, price, spec);  // ctor validates shape
        const auto& vals = back.values();
        for (std::size_t i = 1; i < vals.size(); ++i) REQUIRE(vals[i] <= vals[i - 1]);
        CHECK(back.capacity() == doctest::Approx(spec.capacity).epsilon(1e-12));
    }
}

TEST_CASE("backup value function matches the one-step argmax oracle") {
    std::mt19937_64 rng(312);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const StorageSpec spec = testoracle::random_spec(rng);
        const auto curve = testoracle::random_curve(rng, spec.capacity);
        const double price = -30.0 + 140.0 * unif(rng);
        const auto back = bellman_backup(curve, price, spec);
        const double off = bellman_backup_offset(curve, 0.0, price, spec);
        const ValueCurve value(back, off);
        for (int i = 0; i <= 20; ++i) {
            const double e = spec.capacity * i / 20.0;
            const auto oracle = testoracle::argmax_one_step(price, Soc{e}, curve, 0.0, spec);
            const double scale = std::max(1.0, std::fabs(oracle.objective));
            CHECK(value.evaluate(e) ==
                  doctest::Approx(oracle.objective).epsilon(1e-8 * scale));
        }
    }
}

TEST_CASE("one_step outcome agrees with the argmax oracle and the transition") {
    std::mt19937_64 rng(313);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 150; ++trial) {
        const StorageSpec spec = testoracle::random_spec(rng);
        const auto curve = testoracle::random_curve(rng, spec.capacity);
        const double price = -30.0 + 140.0 * unif(rng);
        const double width = trial % 2 == 0 ? 0.0 : 15.0 * unif(rng);
        const Soc e{spec.capacity * unif(rng)};
        const auto out = one_step(price, e, curve, width, curve, 0.0, spec);
        const Soc expect = apply_decision(e, out.decision, spec);
        CHECK(out.soc_next.value == expect.value);
        // The stated objective is cash plus continuation (width is a decision
        // rule, not part of the value), so recompute it directly.
        const double direct = step_profit(price, out.decision, spec) +
                              ValueCurve(curve).evaluate(out.soc_next.value);
        CHECK(out.objective == doctest::Approx(direct).epsilon(1e-12));
        if (width == 0.0) {
            const auto oracle = testoracle::argmax_one_step(price, e, curve, 0.0, spec);
            const double scale = std::max(1.0, std::fabs(oracle.objective));
            CHECK(out.objective >= oracle.objective - 1e-8 * scale);
        }
    }
}

TEST_CASE("single step backward induction worked example") {
    StorageSpec spec;
    spec.efficiency = 1.0;
    spec.marginal_cost = 0.0;
    spec.power_limit_per_step = 0.5;
    spec.capacity = 1.0;
    const auto r = backward_induct(testoracle::make_series({50.0}), spec,
                                   flat_terminal(1.0), 0);
    REQUIRE(r.marginals.size() == 2);
    for (double e = 0.0; e <= 1.0; e += 0.05) {
        CHECK(r.value_at(0, e) == doctest::Approx(50.0 * std::min(0.5, e)).epsilon(1e-12));
    }
}

TEST_CASE("two price spread worked example: buy low, sell high nets 40") {
    StorageSpec spec;
    spec.efficiency = 1.0;
    spec.marginal_cost = 0.0;
    spec.power_limit_per_step = 1.0;
    spec.capacity = 1.0;
    const auto series = testoracle::make_series({10.0, 50.0});
    const auto r = backward_induct(series, spec, flat_terminal(1.0), 0);
    CHECK(r.value_at(0, 0.0) == doctest::Approx(40.0).epsilon(1e-12));

    // Greedy dispatch against the DP curves realizes the same profit.
    Soc e{0.0};
    double cash = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        const auto d = risk_neutral_policy(series.prices[t], e, r.marginals[t + 1], spec);
        cash += step_profit(series.prices[t], d, spec);
        e = apply_decision(e, d, spec);
    }
    CHECK(cash == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(e.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("flat prices with costs induce zero trades") {
    StorageSpec spec;
    spec.efficiency = 0.9;
    spec.marginal_cost = 10.0;
    spec.power_limit_per_step = 0.5;
    spec.capacity = 1.0;
    const auto series = testoracle::make_series(std::vector<double>(6, 30.0));
    const auto r = backward_induct(series, spec, flat_terminal(1.0), 0);
    // From empty, no spread covers the round-trip cost: the run never trades.
    Soc e{0.0};
    for (std::size_t t = 0; t < series.size(); ++t) {
        const auto d = risk_neutral_policy(series.prices[t], e, r.marginals[t + 1], spec);
        CHECK(d.is_idle());
        e = apply_decision(e, d, spec);
    }
    CHECK(e.value == 0.0);
    CHECK(r.value_at(0, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
    // Pre-stored energy, by contrast, is worth exactly its sell-down netback.
    CHECK(r.value_at(0, 0.5) == doctest::Approx((30.0 - 10.0) * 0.9 * 0.5).epsilon(1e-12));
}

TEST_CASE("exact backward induction matches the lattice enumeration oracle") {
    std::mt19937_64 rng(314);
    for (int trial = 0; trial < 60; ++trial) {
        const auto inst = testoracle::random_lattice_instance(rng);
        const auto r = backward_induct(testoracle::make_series(inst.prices), inst.spec,
                                       inst.terminal, 0);
        for (std::size_t node = 0; node < inst.n; ++node) {
            const double e0 = static_cast<double>(node) * inst.h;
            const double expect = testoracle::lattice_dp_value(inst, node);
            const double got = r.value_at(0, e0);
            const double scale = std::max(1.0, std::fabs(expect));
            REQUIRE(std::fabs(got - expect) <= 1e-6 * scale);
        }
    }
}

TEST_CASE("segment budget bounds intermediate curve growth") {
    StorageSpec spec;
    spec.efficiency = 0.9;
    spec.marginal_cost = 5.0;
    // A small per-step power limit keeps partial-dispatch bands narrow, so
    // breakpoints accumulate instead of being absorbed by the saturated bands.
    spec.power_limit_per_step = 0.08;
    spec.capacity = 1.0;
    std::mt19937_64 rng(315);
    std::uniform_real_distribution<double> unif(10.0, 90.0);
    std::vector<double> prices;
    for (int t = 0; t < 100; ++t) prices.push_back(unif(rng));
    const auto r = backward_induct(testoracle::make_series(prices), spec,
                                   flat_terminal(1.0), 8);
    for (const auto& m : r.marginals) CHECK(m.segment_count() <= 8);

    // The exact recursion on the same instance grows far beyond the budget.
    const auto exact = backward_induct(testoracle::make_series(prices), spec,
                                       flat_terminal(1.0), 0);
    std::size_t max_segments = 0;
    for (const auto& m : exact.marginals) max_segments = std::max(max_segments, m.segment_count());
    CHECK(max_segments > 10);
}

TEST_CASE("terminal curve builders") {
    const auto flat = flat_terminal(2.0, 7.5);
    CHECK(flat.segment_count() == 1);
    CHECK(flat.evaluate(1.3) == 7.5);

    const auto target = target_soc_terminal(1.0, 0.5, 25.0);
    REQUIRE(target.segment_count() == 2);
    CHECK(target.evaluate(0.2) == 25.0);
    CHECK(target.evaluate(0.5) == 0.0);  // right-continuous at the target
    CHECK(target.evaluate(0.9) == 0.0);

    CHECK(target_soc_terminal(1.0, 1.0, 25.0).evaluate(0.7) == 25.0);  // full-capacity target
    CHECK_THROWS_AS(target_soc_terminal(1.0, 0.0, 25.0), Error);
    CHECK_THROWS_AS(target_soc_terminal(1.0, 1.5, 25.0), Error);
    CHECK_THROWS_AS(target_soc_terminal(1.0, 0.5, -3.0), Error);
}

TEST_CASE("backup validation errors carry the numeric code") {
    StorageSpec spec;
    const auto curve = MarginalValueCurve::constant(10.0, spec.capacity);
    try {
        bellman_backup(curve, std::nan(""), spec);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::numeric);
    }
    const auto mismatched = MarginalValueCurve::constant(10.0, 3.0);
    CHECK_THROWS_AS(bellman_backup(mismatched, 30.0, spec), Error);
}
