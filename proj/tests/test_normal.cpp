#include <cmath>
#include <limits>

#include "doctest.h"
#include "normal.hpp"
#include "oracle_helpers.hpp"

using namespace storarb;

TEST_CASE("normal quantile matches bisection oracle across the domain") {
    // Log-spaced tail probabilities plus a dense central sweep.
    for (double p : {1e-12, 1e-9, 1e-6, 1e-4, 1e-3, 0.01, 0.025, 0.05, 0.1, 0.25, 0.4}) {
        for (double q : {p, 1.0 - p}) {
            const double ours = normal_quantile(q);
            const double oracle = testoracle::quantile_by_bisection(q);
            CHECK(ours == doctest::Approx(oracle).epsilon(1e-12));
        }
    }
    for (int i = 1; i < 100; ++i) {
        const double p = static_cast<double>(i) / 100.0;
        CHECK(normal_quantile(p) ==
              doctest::Approx(testoracle::quantile_by_bisection(p)).epsilon(1e-12));
    }
}

TEST_CASE("frozen quantile constants") {
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-14));
    CHECK(normal_quantile(0.975) == doctest::Approx(-normal_quantile(0.025)).epsilon(1e-14));
}

TEST_CASE("quantile is monotone and inverts the cdf") {
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 1; i < 1000; ++i) {
        const double p = static_cast<double>(i) / 1000.0;
        const double z = normal_quantile(p);
        CHECK(z > prev);
        prev = z;
        CHECK(normal_cdf(z) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("quantile domain errors") {
    CHECK_THROWS_AS(normal_quantile(0.0), Error);
    CHECK_THROWS_AS(normal_quantile(1.0), Error);
    CHECK_THROWS_AS(normal_quantile(-0.1), Error);
    CHECK_THROWS_AS(normal_quantile(std::nan("")), Error);
    try {
        normal_quantile(2.0);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::numeric);
    }
}
