// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <span>

#include "kdsketch/types.hpp"

namespace kdsketch {

/// Count of trigonometric library calls made by a basis evaluation.
/// Kernels keep one per thread and flush into the global sketch counters.
struct TrigTally {
    std::uint64_t cos_calls = 0;
    std::uint64_t sin_calls = 0;
};

/// Point-side coefficient of the indicator expansion:
/// c_0(x) = 1, c_{2m-1}(x) = cos((2m-1)x), c_{2m}(x) = sin((2m-1)x).
/// Arguments are in radians with no pi rescaling; requires x in (0,1).
double coef_c(int j, double x);

/// Interval-side coefficient g_j(a, b) of the indicator expansion.
/// Terms involving a vanish when a = 0, terms involving b vanish when b = 1.
/// Requires a in [0,1), b in (0,1], a < b.
double coef_g(int j, double a, double b);

/// Partial sum 1_J(x, a, b) = sum_{j=0}^{2J} c_j(x) g_j(a, b).
/// Not clamped; the median solver consumes the raw smooth value.
double indicator_partial_sum_1d(double x, double a, double b, int order);

/// Product of the 1D partial sums over all coordinates of x.
double indicator_partial_sum_pd(std::span<const double> x, const Neighborhood& nb, int order);

/// Partial sum through j = terms of the square-wave series
/// 1/2 - (2/pi) sum_j sin((2j-1)z)/(2j-1), the expansion of 1(z < 0).
/// Test identity only; requires 0 < |z| < pi.
double square_wave_reference(double z, int terms);

/// Fill out[j] = c_j(x) for j = 0..2*order (out.size() == 2*order+1).
/// Performs one cos and one sin library call per harmonic, tallied.
void eval_c_vector(double x, int order, std::span<double> out, TrigTally* tally = nullptr);

/// Fill out[j] = g_j(a, b) for j = 0..2*order.
void eval_g_vector(double a, double b, int order, std::span<double> out);

/// Sum in index order, splitting pairwise above 1024 terms.
double pairwise_sum(std::span<const double> terms);

}  // namespace kdsketch
