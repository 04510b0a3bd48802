// SPDX-License-Identifier: MIT
#pragma once

#include <atomic>
#include <cstdint>
#include <span>

#include "kdsketch/tensor.hpp"
#include "kdsketch/types.hpp"

namespace kdsketch {

/// The additive statistic tensor: entry j holds the sum (raw) or mean
/// (standardized) of prod_l c_{j_l}(x_{i,l}) over the ingested points.
struct SketchTensor {
    int p = 0;
    int order = 0;  // J; the tensor extent per axis is 2J+1
    std::uint64_t count = 0;
    bool standardized = false;
    Tensor values;

    [[nodiscard]] std::size_t basis_size() const {
        return 2 * static_cast<std::size_t>(order) + 1;
    }
};

/// Global instrumentation for the single-pass and trig-budget contracts.
struct SketchCounters {
    std::atomic<std::uint64_t> points_read{0};
    std::atomic<std::uint64_t> cos_calls{0};
    std::atomic<std::uint64_t> sin_calls{0};

    void reset() {
        points_read = 0;
        cos_calls = 0;
        sin_calls = 0;
    }
};

SketchCounters& sketch_counters();

/// Wall-clock seconds per pipeline phase, filled by the build drivers.
struct PhaseTimings {
    double map_s = 0.0;
    double reduce_s = 0.0;
    double transform_s = 0.0;
    double tree_solve_s = 0.0;

    [[nodiscard]] double total() const { return map_s + reduce_s + transform_s + tree_solve_s; }
};

/// Serial reference kernel: raw (unstandardized) sums over one shard,
/// one cos and one sin library call per harmonic per coordinate.
/// Reads each point exactly once; an empty shard yields the zero tensor.
SketchTensor sketch_shard_serial(const Shard& shard, int order, int p);

/// OpenMP kernel over the points of one shard. `threads` = 0 uses the
/// OpenMP default; threads = 1 reproduces the serial kernel bit for bit.
SketchTensor sketch_shard(const Shard& shard, int order, int p, int threads = 0);

/// Entrywise sum; counts add. Requires equal shape and standardization state.
SketchTensor merge(const SketchTensor& a, const SketchTensor& b);

/// Divide by the point count (C_0); the all-zeros entry becomes exactly 1.
/// Standardizing an already standardized tensor is the identity.
SketchTensor standardize(SketchTensor t);

/// Approximate fraction of points inside nb: the sketch contracted
/// mode-wise against the per-coordinate g vectors. Cost O((2J+1)^p).
double approx_count(const SketchTensor& t, const Neighborhood& nb);

/// Contraction of all axes except `t` against the g vectors of nb,
/// leaving the length-(2J+1) profile the median solver scans along
/// coordinate t.
std::vector<double> approx_count_profile(const SketchTensor& t, const Neighborhood& nb,
                                         std::size_t t_coord);

/// Map shards to raw sketches (at most `parallelism` at a time), reduce by
/// a binary tree fold in shard order, then standardize. Output is bitwise
/// independent of `parallelism`. Fails if all shards are empty.
SketchTensor map_reduce_build(std::span<const Shard> shards, int order, int p, int parallelism,
                              PhaseTimings* timings = nullptr);

/// Exact fraction of points strictly inside nb (boundary points excluded).
double exact_fraction(PointsView points, const Neighborhood& nb);

/// Exact fraction minus approx_count; t must have been built from `points`.
double empirical_error(PointsView points, const SketchTensor& t, const Neighborhood& nb);

}  // namespace kdsketch
