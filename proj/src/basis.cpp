// SPDX-License-Identifier: MIT
#include "kdsketch/basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace kdsketch {

namespace {

constexpr std::size_t kPairwiseThreshold = 1024;

void check_x(double x) {
    if (!(x > 0.0 && x < 1.0)) throw std::domain_error("x must lie strictly in (0,1)");
}

void check_interval(double a, double b) {
    if (!(a >= 0.0 && a < 1.0)) throw std::domain_error("a must lie in [0,1)");
    if (!(b > 0.0 && b <= 1.0)) throw std::domain_error("b must lie in (0,1]");
    if (!(a < b)) throw std::domain_error("interval requires a < b");
}

double pairwise_sum_impl(const double* v, std::size_t n) {
    if (n <= kPairwiseThreshold) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_impl(v, half) + pairwise_sum_impl(v + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> terms) {
    return pairwise_sum_impl(terms.data(), terms.size());
}

double coef_c(int j, double x) {
    check_x(x);
    if (j < 0) throw std::domain_error("basis index must be nonnegative");
    if (j == 0) return 1.0;
    // odd j = 2m-1 carries harmonic j; even j = 2m carries harmonic j-1
    const double harmonic = (j % 2 == 1) ? j : j - 1;
    return (j % 2 == 1) ? std::cos(harmonic * x) : std::sin(harmonic * x);
}

double coef_g(int j, double a, double b) {
    check_interval(a, b);
    if (j < 0) throw std::domain_error("basis index must be nonnegative");
    const double ga = a > 0.0 ? 1.0 : 0.0;
    const double gb = b < 1.0 ? 1.0 : 0.0;
    if (j == 0) return 1.0 - 0.5 * (ga + gb);
    const double harmonic = (j % 2 == 1) ? j : j - 1;
    const double scale = 2.0 / (std::numbers::pi * harmonic);
    if (j % 2 == 1) {
        return scale * (gb * std::sin(harmonic * b) - ga * std::sin(harmonic * a));
    }
    return scale * (ga * std::cos(harmonic * a) - gb * std::cos(harmonic * b));
}

void eval_c_vector(double x, int order, std::span<double> out, TrigTally* tally) {
    check_x(x);
    if (order < 1) throw std::domain_error("order must be positive");
    if (out.size() != 2 * static_cast<std::size_t>(order) + 1) {
        throw std::invalid_argument("output span has wrong length");
    }
    out[0] = 1.0;
    for (int m = 1; m <= order; ++m) {
        const double angle = (2.0 * m - 1.0) * x;
        out[2 * m - 1] = std::cos(angle);
        out[2 * m] = std::sin(angle);
    }
    if (tally != nullptr) {
        tally->cos_calls += static_cast<std::uint64_t>(order);
        tally->sin_calls += static_cast<std::uint64_t>(order);
    }
}

void eval_g_vector(double a, double b, int order, std::span<double> out) {
    check_interval(a, b);
    if (order < 1) throw std::domain_error("order must be positive");
    if (out.size() != 2 * static_cast<std::size_t>(order) + 1) {
        throw std::invalid_argument("output span has wrong length");
    }
    const double ga = a > 0.0 ? 1.0 : 0.0;
    const double gb = b < 1.0 ? 1.0 : 0.0;
    out[0] = 1.0 - 0.5 * (ga + gb);
    for (int m = 1; m <= order; ++m) {
        const double harmonic = 2.0 * m - 1.0;
        const double scale = 2.0 / (std::numbers::pi * harmonic);
        const double sa = ga != 0.0 ? std::sin(harmonic * a) : 0.0;
        const double ca = ga != 0.0 ? std::cos(harmonic * a) : 0.0;
        const double sb = gb != 0.0 ? std::sin(harmonic * b) : 0.0;
        const double cb = gb != 0.0 ? std::cos(harmonic * b) : 0.0;
        out[2 * m - 1] = scale * (gb * sb - ga * sa);
        out[2 * m] = scale * (ga * ca - gb * cb);
    }
}

double indicator_partial_sum_1d(double x, double a, double b, int order) {
    check_x(x);
    check_interval(a, b);
    if (order < 1) throw std::domain_error("order must be positive");
    const std::size_t len = 2 * static_cast<std::size_t>(order) + 1;
    std::vector<double> c(len), g(len), terms(len);
    eval_c_vector(x, order, c);
    eval_g_vector(a, b, order, g);
    for (std::size_t j = 0; j < len; ++j) terms[j] = c[j] * g[j];
    return pairwise_sum(terms);
}

double indicator_partial_sum_pd(std::span<const double> x, const Neighborhood& nb, int order) {
    if (x.size() != nb.dim()) throw std::invalid_argument("point/neighborhood dimension mismatch");
    double prod = 1.0;
    for (std::size_t l = 0; l < x.size(); ++l) {
        prod *= indicator_partial_sum_1d(x[l], nb.lower[l], nb.upper[l], order);
    }
    return prod;
}

double square_wave_reference(double z, int terms) {
    if (z == 0.0 || !(std::abs(z) < std::numbers::pi)) {
        throw std::domain_error("square wave requires 0 < |z| < pi");
    }
    if (terms < 1) throw std::domain_error("term count must be positive");
    std::vector<double> series(static_cast<std::size_t>(terms));
    for (int j = 1; j <= terms; ++j) {
        const double harmonic = 2.0 * j - 1.0;
        series[static_cast<std::size_t>(j - 1)] = std::sin(harmonic * z) / harmonic;
    }
    return 0.5 - (2.0 / std::numbers::pi) * pairwise_sum(series);
}

}  // namespace kdsketch
