// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "kdsketch/basis.hpp"

using namespace kdsketch;

namespace {

// Independent long-double evaluation of g_j straight from its defining
// formula, used as the high-precision oracle.
long double g_oracle(int j, long double a, long double b) {
    const long double pi = std::numbers::pi_v<long double>;
    const long double ga = a > 0.0L ? 1.0L : 0.0L;
    const long double gb = b < 1.0L ? 1.0L : 0.0L;
    if (j == 0) return 1.0L - 0.5L * (ga + gb);
    const long double h = (j % 2 == 1) ? j : j - 1;
    if (j % 2 == 1) return 2.0L / (pi * h) * (gb * std::sin(h * b) - ga * std::sin(h * a));
    return 2.0L / (pi * h) * (ga * std::cos(h * a) - gb * std::cos(h * b));
}

// Brute-force partial sum used as the convergence oracle.
double brute_partial_sum(double x, double a, double b, int order) {
    long double s = 0.0L;
    for (int j = 0; j <= 2 * order; ++j) {
        s += static_cast<long double>(coef_c(j, x)) * g_oracle(j, a, b);
    }
    return static_cast<double>(s);
}

}  // namespace

TEST_CASE("coef_c matches the defining formulas") {
    CHECK(coef_c(0, 0.3) == 1.0);
    CHECK(coef_c(1, 0.5) == doctest::Approx(std::cos(0.5)).epsilon(1e-15));
    CHECK(coef_c(1, 0.5) == doctest::Approx(0.8775825619).epsilon(1e-9));
    // j = 4 is even, so it carries sin(3x).
    CHECK(coef_c(4, 0.2) == doctest::Approx(std::sin(0.6)).epsilon(1e-15));
    CHECK(coef_c(4, 0.2) == doctest::Approx(0.5646424734).epsilon(1e-9));
    CHECK(coef_c(7, 0.25) == doctest::Approx(std::cos(7 * 0.25)).epsilon(1e-15));
    CHECK(coef_c(8, 0.25) == doctest::Approx(std::sin(7 * 0.25)).epsilon(1e-15));
    CHECK_THROWS_AS(coef_c(1, 0.0), std::domain_error);
    CHECK_THROWS_AS(coef_c(1, 1.0), std::domain_error);
    CHECK_THROWS_AS(coef_c(1, -0.25), std::domain_error);
}

TEST_CASE("coef_g gates and values") {
    CHECK(coef_g(0, 0.0, 1.0) == 1.0);
    for (int j = 1; j <= 9; ++j) CHECK(coef_g(j, 0.0, 1.0) == 0.0);
    CHECK(coef_g(0, 0.25, 0.75) == 0.0);
    const double expected = 2.0 / std::numbers::pi * (std::sin(0.75) - std::sin(0.25));
    CHECK(coef_g(1, 0.25, 0.75) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(coef_g(1, 0.25, 0.75) == doctest::Approx(0.2764).epsilon(5e-4));
    // Cross-check a spread of indices against the long-double oracle.
    for (int j = 0; j <= 40; ++j) {
        CHECK(coef_g(j, 0.1, 0.6) ==
              doctest::Approx(static_cast<double>(g_oracle(j, 0.1L, 0.6L))).epsilon(1e-14));
    }
    // One-sided gates: a = 0 kills the a terms, b = 1 kills the b terms.
    CHECK(coef_g(2, 0.0, 0.5) == doctest::Approx(-2.0 / std::numbers::pi * std::cos(0.5)));
    CHECK(coef_g(2, 0.5, 1.0) == doctest::Approx(2.0 / std::numbers::pi * std::cos(0.5)));
    CHECK_THROWS_AS(coef_g(1, 0.5, 0.5), std::domain_error);
    CHECK_THROWS_AS(coef_g(1, 0.7, 0.2), std::domain_error);
}

TEST_CASE("indicator partial sum: full interval is exactly one") {
    for (double x : {0.1, 0.3, 0.5, 0.9}) {
        for (int order : {1, 5, 50, 300}) {
            CHECK(indicator_partial_sum_1d(x, 0.0, 1.0, order) == 1.0);
        }
    }
}

TEST_CASE("indicator partial sum converges inside and outside") {
    // Inside the interval the sum approaches 1; outside it approaches 0.
    CHECK(std::abs(indicator_partial_sum_1d(0.5, 0.25, 0.75, 200) - 1.0) < 0.05);
    CHECK(std::abs(indicator_partial_sum_1d(0.9, 0.25, 0.75, 200) - 0.0) < 0.05);
    // Agreement with the brute-force oracle at several orders.
    for (int order : {1, 7, 64, 200}) {
        CHECK(indicator_partial_sum_1d(0.5, 0.25, 0.75, order) ==
              doctest::Approx(brute_partial_sum(0.5, 0.25, 0.75, order)).epsilon(1e-12));
        CHECK(indicator_partial_sum_1d(0.9, 0.25, 0.75, order) ==
              doctest::Approx(brute_partial_sum(0.9, 0.25, 0.75, order)).epsilon(1e-12));
    }
}

TEST_CASE("pointwise convergence away from the endpoints") {
    // For x at least 0.05 away from both edges there is a finite order
    // beyond which the partial sum stays within 0.1 of the indicator.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = 0.1 + 0.3 * unif(rng);
        const double b = a + 0.15 + 0.3 * unif(rng);
        double x = unif(rng);
        if (std::min(std::abs(x - a), std::abs(x - b)) <= 0.05 || x <= 0.0 || x >= 1.0) {
            x = 0.5 * (a + b);  // interior fallback, always far from edges here
        }
        const double target = (a < x && x < b) ? 1.0 : 0.0;
        int settled_from = -1;
        for (int order = 1; order <= 400; ++order) {
            if (std::abs(indicator_partial_sum_1d(x, a, b, order) - target) <= 0.1) {
                if (settled_from < 0) settled_from = order;
            } else {
                settled_from = -1;
            }
        }
        CHECK(settled_from > 0);
    }
}

TEST_CASE("uniform boundedness over random samples") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(1e-6, 1.0 - 1e-6);
    std::uniform_int_distribution<int> order_dist(1, 500);
    double observed = 0.0;
    for (int i = 0; i < 10'000; ++i) {
        double a = unif(rng), b = unif(rng);
        if (a > b) std::swap(a, b);
        if (a == b) continue;
        const double x = unif(rng);
        const double v = indicator_partial_sum_1d(x, a, b, order_dist(rng));
        observed = std::max(observed, std::abs(v));
    }
    MESSAGE("observed bound ", observed);
    CHECK(observed <= 3.0);
}

TEST_CASE("p-dimensional sum is the product of 1D sums") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(0.01, 0.99);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 1 + static_cast<int>(rng() % 3);
        const int order = 1 + static_cast<int>(rng() % 8);
        std::vector<double> x(static_cast<std::size_t>(p));
        std::vector<double> a(static_cast<std::size_t>(p)), b(static_cast<std::size_t>(p));
        for (int l = 0; l < p; ++l) {
            x[static_cast<std::size_t>(l)] = unif(rng);
            double lo = unif(rng), hi = unif(rng);
            if (lo > hi) std::swap(lo, hi);
            if (lo == hi) hi = lo + 0.01;
            a[static_cast<std::size_t>(l)] = lo;
            b[static_cast<std::size_t>(l)] = std::min(hi, 0.999);
        }
        const Neighborhood nb(a, b);
        double prod = 1.0;
        for (int l = 0; l < p; ++l) {
            prod *= indicator_partial_sum_1d(x[static_cast<std::size_t>(l)],
                                             a[static_cast<std::size_t>(l)],
                                             b[static_cast<std::size_t>(l)], order);
        }
        CHECK(indicator_partial_sum_pd(x, nb, order) == doctest::Approx(prod).epsilon(1e-12));

        // Expanded tensor-contraction form: sum over the full index grid of
        // prod_l c_{j_l} g_{j_l}. Independent of the product evaluation.
        if (p <= 2 && order <= 8) {
            const int len = 2 * order + 1;
            long double expanded = 0.0L;
            if (p == 1) {
                for (int j = 0; j < len; ++j) {
                    expanded += static_cast<long double>(coef_c(j, x[0])) * g_oracle(j, a[0], b[0]);
                }
            } else {
                for (int j1 = 0; j1 < len; ++j1) {
                    for (int j2 = 0; j2 < len; ++j2) {
                        expanded += static_cast<long double>(coef_c(j1, x[0])) *
                                    g_oracle(j1, a[0], b[0]) *
                                    static_cast<long double>(coef_c(j2, x[1])) *
                                    g_oracle(j2, a[1], b[1]);
                    }
                }
            }
            CHECK(indicator_partial_sum_pd(x, nb, order) ==
                  doctest::Approx(static_cast<double>(expanded)).epsilon(1e-9));
        }
    }
}

TEST_CASE("pd exactness on the full cube") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(1e-9, 1.0 - 1e-9);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 1 + static_cast<int>(rng() % 4);
        const int order = 1 + static_cast<int>(rng() % 100);
        std::vector<double> x(static_cast<std::size_t>(p));
        for (auto& v : x) v = unif(rng);
        CHECK(indicator_partial_sum_pd(x, Neighborhood::unit_cube(static_cast<std::size_t>(p)),
                                       order) == 1.0);
    }
}

TEST_CASE("square wave reference sign cases and identity") {
    CHECK(std::abs(square_wave_reference(-1.0, 3000) - 1.0) < 1e-3);
    CHECK(std::abs(square_wave_reference(1.0, 3000) - 0.0) < 1e-3);
    CHECK_THROWS_AS(square_wave_reference(0.0, 10), std::domain_error);
    CHECK_THROWS_AS(square_wave_reference(3.5, 10), std::domain_error);

    // With b = 1 the expansion collapses to the square-wave series in
    // x - a:  1_J(x, a, 1) = 1 - S_J(x - a)  for a > 0.
    for (double a : {0.2, 0.5, 0.8}) {
        for (double x : {0.1, 0.4, 0.9}) {
            if (x == a) continue;
            for (int order : {1, 5, 40}) {
                const double lhs = indicator_partial_sum_1d(x, a, 1.0, order);
                const double rhs = 1.0 - square_wave_reference(x - a, order);
                CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
            }
        }
    }
    // And with a = 0 the sum is identically 1.
    CHECK(indicator_partial_sum_1d(0.3, 0.0, 1.0, 25) == 1.0);
}

TEST_CASE("pairwise sum equals long double reference on large inputs") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> terms(5000);
    long double reference = 0.0L;
    for (auto& t : terms) {
        t = unif(rng);
        reference += t;
    }
    CHECK(pairwise_sum(terms) ==
          doctest::Approx(static_cast<double>(reference)).epsilon(1e-12));
}
