// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "kdsketch/factorized.hpp"
#include "kdsketch/types.hpp"

namespace kdsketch {

/// Configuration for the synthetic-data studies. Loaded from a flat
/// key=value text file; keys match the field names.
struct ExperimentConfig {
    std::uint64_t n = 1'000'000;
    int p = 3;
    std::vector<double> rho = {0.0};
    std::vector<int> depths = {6};
    std::vector<AccuracyParameter> accuracy_grid;
    std::vector<std::uint64_t> seeds = {1};
    int shards = 16;
    int parallelism = 0;  // 0: OpenMP default

    void validate() const;
};

ExperimentConfig load_config(const std::string& path);

/// Unscaled generator output (coordinates unbounded).
struct RawPoints {
    int p = 0;
    std::vector<double> coords;  // row-major, n x p

    [[nodiscard]] std::size_t size() const { return p == 0 ? 0 : coords.size() / p; }
};

/// Per-coordinate affine map recorded by scale_to_unit.
struct ScalingRecord {
    std::vector<double> min;
    std::vector<double> max;
    double margin = 0.0;

    [[nodiscard]] double apply(double value, std::size_t coord) const;
};

/// Deterministic counter-based sampler (SplitMix64 streams keyed by seed;
/// Box-Muller pairs). Covariance is the p x p equicorrelation matrix with
/// unit variances, realized via its closed-form rank-one square root.
/// Output for a given (seed, i, l) never depends on parallelism.
RawPoints generate_correlated_normal(std::uint64_t n, int p, double rho, std::uint64_t seed);

/// Per-coordinate min-max map into [margin, 1 - margin]; strictly
/// monotone, hence order-preserving per coordinate. Throws on a
/// zero-range coordinate.
std::pair<PointSet, ScalingRecord> scale_to_unit(const RawPoints& raw, double margin = 1e-6);

/// Cell-count accuracy study: one sketch per (rho, Jbar, seed), audited
/// at every requested depth. CSV columns:
/// rho,depth,Jbar,seed,min_log2,q1_log2,median_log2,q3_log2,max_log2
void run_accuracy_study(const ExperimentConfig& cfg, std::ostream& csv);

/// Phase timing study. CSV columns: phase,Jbar,rho,shards,parallelism,seconds
void run_runtime_study(const ExperimentConfig& cfg, std::ostream& csv);

/// Lower quartile/median/upper quartile with linear interpolation.
double quantile(std::vector<double> sorted_values, double q);

}  // namespace kdsketch
