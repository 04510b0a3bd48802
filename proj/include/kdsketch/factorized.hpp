// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kdsketch/basis.hpp"
#include "kdsketch/sketch.hpp"
#include "kdsketch/tensor.hpp"
#include "kdsketch/types.hpp"

namespace kdsketch {

/// The accuracy parameter (J_1,...,J_K) with J = prod_k J_k. Controls the
/// trade between per-point trigonometric cost (K cosines per coordinate)
/// and basis size (2J+1 per coordinate).
struct AccuracyParameter {
    std::vector<int> parts;

    AccuracyParameter() = default;
    explicit AccuracyParameter(std::vector<int> factors);

    /// Parse a comma-separated factor list such as "3,5".
    static AccuracyParameter parse(const std::string& text);

    [[nodiscard]] int k() const { return static_cast<int>(parts.size()); }
    [[nodiscard]] long long total() const;                 // J
    [[nodiscard]] std::size_t basis_size() const;          // 2J+1
    /// Prefix product L_k = J_1 * ... * J_k (1-based k, k <= K).
    [[nodiscard]] long long prefix_product(int k) const;

    [[nodiscard]] std::string to_string(char sep = ',') const;

    bool operator==(const AccuracyParameter& other) const { return parts == other.parts; }
};

/// Sketch accumulated in the factorized basis (index set: 0 plus the
/// K-tuples (j_1..j_K), j_1 in 1..2J_1, j_k in 1..J_k). Same shape as the
/// standard tensor: (2J+1)^p.
struct FactorizedTensor {
    AccuracyParameter acc;
    int p = 0;
    std::uint64_t count = 0;
    bool standardized = false;
    Tensor values;
};

/// The (2J+1)x(2J+1) matrix A with c_(0:2J)(z) = A * ctilde(z) for all z.
struct Transform1D {
    AccuracyParameter acc;
    std::vector<double> matrix;  // row-major, rows indexed by standard j
    double residual = 0.0;       // max abs residual on the held-out grid

    [[nodiscard]] std::size_t dim() const { return acc.basis_size(); }
};

/// Raised when the sampled basis system is singular or the constructed
/// transform fails its residual bound.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fill `out` (length 2J+1) with the factorized basis values at z.
/// Exactly K cosine library calls; sin(z) is recovered from cos(z) via
/// sqrt(1 - cos^2), valid since (0,1) lies inside (0,pi).
void factorized_basis_vector(double z, const AccuracyParameter& acc, std::span<double> out,
                             TrigTally* tally = nullptr);

/// Evaluate the factorized basis for every coordinate of x into `out`
/// (p consecutive blocks of length 2J+1).
void factorized_point_basis(std::span<const double> x, const AccuracyParameter& acc,
                            std::span<double> out, TrigTally* tally = nullptr);

/// Construct A by sampling both bases at 2J+1 Chebyshev-spaced nodes in
/// (0,1) and solving the square system (least-squares over twice as many
/// nodes when the sampled system is ill-conditioned). Throws NumericError
/// if the residual bound 1e-8 cannot be met.
Transform1D build_transform_1d(const AccuracyParameter& acc);

/// Apply the 1D transform along every tensor mode, recovering the
/// standard sketch from the factorized one (the Kronecker-power transform
/// without materializing it).
SketchTensor recover_standard(const FactorizedTensor& ft, const Transform1D& tf);

/// Kernels and pipeline mirroring the standard-basis sketch module.
FactorizedTensor sketch_shard_factorized_serial(const Shard& shard, const AccuracyParameter& acc,
                                                int p);
FactorizedTensor sketch_shard_factorized(const Shard& shard, const AccuracyParameter& acc, int p,
                                         int threads = 0);
FactorizedTensor merge(const FactorizedTensor& a, const FactorizedTensor& b);
FactorizedTensor standardize(FactorizedTensor t);
FactorizedTensor map_reduce_build_factorized(std::span<const Shard> shards,
                                             const AccuracyParameter& acc, int p, int parallelism,
                                             PhaseTimings* timings = nullptr);

}  // namespace kdsketch
