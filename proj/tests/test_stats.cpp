#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "vancorisk/common.hpp"
#include "vancorisk/stats.hpp"

using namespace vancorisk;

TEST_CASE("median handles odd and even counts") {
    CHECK(stats::median({1, 2, 100}) == 2.0);
    CHECK(stats::median({1, 2, 3, 100}) == 2.5);
    CHECK(stats::median({5}) == 5.0);
}

TEST_CASE("percentile interpolates order statistics") {
    std::vector<double> v{1, 2, 3, 4, 5};
    CHECK(stats::percentile(v, 0.0) == 1.0);
    CHECK(stats::percentile(v, 1.0) == 5.0);
    CHECK(stats::percentile(v, 0.5) == 3.0);
    CHECK(stats::percentile(v, 0.25) == 2.0);
}

TEST_CASE("normal cdf reference values") {
    CHECK_THAT(stats::normal_cdf(0.0), Catch::Matchers::WithinAbs(0.5, 1e-15));
    CHECK_THAT(stats::normal_cdf(1.959963984540054),
               Catch::Matchers::WithinAbs(0.975, 1e-12));
    CHECK_THAT(stats::normal_cdf(-1.0),
               Catch::Matchers::WithinAbs(0.15865525393145705, 1e-12));
}

TEST_CASE("incomplete beta against closed forms") {
    // I_x(1, b) = 1 - (1-x)^b ; I_x(a, 1) = x^a
    for (double x : {0.1, 0.3, 0.7, 0.95}) {
        for (double b : {1.0, 2.5, 7.0}) {
            CHECK_THAT(stats::ibeta(1.0, b, x),
                       Catch::Matchers::WithinAbs(1.0 - std::pow(1.0 - x, b), 1e-12));
            CHECK_THAT(stats::ibeta(b, 1.0, x),
                       Catch::Matchers::WithinAbs(std::pow(x, b), 1e-12));
        }
    }
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
    CHECK_THAT(stats::ibeta(3.2, 4.7, 0.37),
               Catch::Matchers::WithinAbs(1.0 - stats::ibeta(4.7, 3.2, 0.63), 1e-12));
}

TEST_CASE("student t cdf matches known quantiles") {
    // P(T_8 <= -1) = 0.17330903 (so two-sided p for |t|=1 is 0.34661807)
    CHECK_THAT(stats::student_t_cdf(-1.0, 8.0),
               Catch::Matchers::WithinAbs(0.17329675354366708, 1e-12));
    CHECK_THAT(stats::student_t_two_sided_p(-1.0, 8.0),
               Catch::Matchers::WithinAbs(0.34659350708733416, 1e-12));
    // t with 1 dof is Cauchy: P(T <= 1) = 0.75
    CHECK_THAT(stats::student_t_cdf(1.0, 1.0),
               Catch::Matchers::WithinAbs(0.75, 1e-10));
}

TEST_CASE("F survival function special cases") {
    // F(1, d2) survival at f equals two-sided t_d2 p-value at sqrt(f)
    for (double f : {0.5, 1.0, 4.0}) {
        for (double d2 : {3.0, 10.0, 40.0}) {
            CHECK_THAT(stats::f_sf(f, 1.0, d2),
                       Catch::Matchers::WithinAbs(
                           stats::student_t_two_sided_p(std::sqrt(f), d2), 1e-12));
        }
    }
    CHECK(stats::f_sf(0.0, 1.0, 5.0) == 1.0);
    CHECK(stats::f_sf(std::numeric_limits<double>::infinity(), 1.0, 5.0) == 0.0);
}

TEST_CASE("rng determinism and stream independence") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng s1(42, 1), s2(42, 2);
    bool any_diff = false;
    for (int i = 0; i < 16; ++i) any_diff |= s1.next_u64() != s2.next_u64();
    CHECK(any_diff);
}

TEST_CASE("rng uniform and normal moments") {
    Rng rng(7);
    double sum = 0.0, sumsq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(0.5, 0.005));
    CHECK_THAT(sumsq / n, Catch::Matchers::WithinAbs(1.0 / 3.0, 0.005));

    double ns = 0.0, ns2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        ns += z;
        ns2 += z * z;
    }
    CHECK_THAT(ns / n, Catch::Matchers::WithinAbs(0.0, 0.01));
    CHECK_THAT(ns2 / n, Catch::Matchers::WithinAbs(1.0, 0.02));
}

TEST_CASE("parallel_for is thread-count invariant") {
    std::vector<double> out1(1000), out4(1000);
    worker_count() = 1;
    parallel_for(1000, [&](std::size_t i) { out1[i] = std::sqrt(static_cast<double>(i)); });
    worker_count() = 4;
    parallel_for(1000, [&](std::size_t i) { out4[i] = std::sqrt(static_cast<double>(i)); });
    worker_count() = 1;
    CHECK(out1 == out4);
}
