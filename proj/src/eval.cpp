// SPDX-License-Identifier: MIT
#include "kdsketch/eval.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "kdsketch/io.hpp"
#include "kdsketch/sketch.hpp"
#include "kdsketch/tree.hpp"

namespace kdsketch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// SplitMix64: the counter-based stream underlying all synthetic data.
// out(seed, counter) is a pure function, so generation order never
// matters and any index range can be produced independently.
std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Uniform in the open interval (0,1): 53 random bits offset by half an ulp.
double uniform_open(std::uint64_t seed, std::uint64_t counter) {
    return (static_cast<double>(splitmix64(seed, counter) >> 11) + 0.5) * 0x1.0p-53;
}

// Independent standard normal for stream position `index` (Box-Muller,
// cosine branch only so each index costs two uniforms and stays
// independently addressable).
double standard_normal(std::uint64_t seed, std::uint64_t index) {
    const double u1 = uniform_open(seed, 2 * index);
    const double u2 = uniform_open(seed, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (n < 2) throw std::invalid_argument("config: n must be at least 2");
    if (p < 1 || p > 64) throw std::invalid_argument("config: p must lie in 1..64");
    if (rho.empty()) throw std::invalid_argument("config: rho must be nonempty");
    if (depths.empty()) throw std::invalid_argument("config: depths must be nonempty");
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
    if (accuracy_grid.empty()) throw std::invalid_argument("config: accuracy_grid must be nonempty");
    if (shards < 1) throw std::invalid_argument("config: shards must be positive");
    if (parallelism < 0) throw std::invalid_argument("config: parallelism must be nonnegative");
    for (double r : rho) {
        if (!(r < 1.0) || (p > 1 && !(r > -1.0 / (p - 1)))) {
            throw std::invalid_argument("config: rho must keep the equicorrelation matrix positive definite");
        }
    }
    for (int d : depths) {
        if (d < 1) throw std::invalid_argument("config: depths must be positive");
        if (n < (std::uint64_t{1} << d)) {
            throw std::invalid_argument("config: n must be at least 2^max(depths)");
        }
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open config file");
    ExperimentConfig cfg;
    cfg.rho.clear();
    cfg.depths.clear();
    cfg.seeds.clear();
    std::string line;
    int lineno = 0;
    bool saw_rho = false, saw_depths = false, saw_seeds = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto split_list = [&](char sep) {
            std::vector<std::string> items;
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, sep)) items.push_back(trim(item));
            return items;
        };
        try {
            if (key == "n") {
                cfg.n = std::stoull(value);
            } else if (key == "p") {
                cfg.p = std::stoi(value);
            } else if (key == "rho") {
                for (const auto& item : split_list(',')) cfg.rho.push_back(std::stod(item));
                saw_rho = true;
            } else if (key == "depths") {
                for (const auto& item : split_list(',')) cfg.depths.push_back(std::stoi(item));
                saw_depths = true;
            } else if (key == "accuracy_grid") {
                for (const auto& item : split_list(';')) {
                    cfg.accuracy_grid.push_back(AccuracyParameter::parse(item));
                }
            } else if (key == "seeds") {
                for (const auto& item : split_list(',')) cfg.seeds.push_back(std::stoull(item));
                saw_seeds = true;
            } else if (key == "shards") {
                cfg.shards = std::stoi(value);
            } else if (key == "parallelism") {
                cfg.parallelism = std::stoi(value);
            } else {
                throw DataError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
            }
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!saw_rho) cfg.rho = {0.0};
    if (!saw_depths) cfg.depths = {6};
    if (!saw_seeds) cfg.seeds = {1};
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return cfg;
}

RawPoints generate_correlated_normal(std::uint64_t n, int p, double rho, std::uint64_t seed) {
    if (p < 1 || p > 64) throw std::invalid_argument("dimension must lie in 1..64");
    if (!(rho < 1.0) || (p > 1 && !(rho > -1.0 / (p - 1)))) {
        throw std::invalid_argument("rho does not give a positive definite equicorrelation matrix");
    }
    // Square root of (1-rho) I + rho 11': alpha I + beta 11'.
    const double alpha = std::sqrt(1.0 - rho);
    const double beta =
        p > 0 ? (std::sqrt(1.0 + (p - 1) * rho) - alpha) / static_cast<double>(p) : 0.0;

    RawPoints out;
    out.p = p;
    out.coords.resize(n * static_cast<std::size_t>(p));
    const auto up = static_cast<std::uint64_t>(p);
#pragma omp parallel for schedule(static)
    for (std::uint64_t i = 0; i < n; ++i) {
        double z[64];
        double zsum = 0.0;
        for (int l = 0; l < p; ++l) {
            z[l] = standard_normal(seed, i * up + static_cast<std::uint64_t>(l));
            zsum += z[l];
        }
        double* row = out.coords.data() + i * up;
        for (int l = 0; l < p; ++l) row[l] = alpha * z[l] + beta * zsum;
    }
    return out;
}

double ScalingRecord::apply(double value, std::size_t coord) const {
    const double lo = min[coord];
    const double hi = max[coord];
    return margin + (value - lo) / (hi - lo) * (1.0 - 2.0 * margin);
}

std::pair<PointSet, ScalingRecord> scale_to_unit(const RawPoints& raw, double margin) {
    const std::size_t n = raw.size();
    if (n < 2) throw std::invalid_argument("scaling needs at least two points");
    if (!(margin > 0.0 && margin < 0.5)) throw std::invalid_argument("margin must lie in (0, 0.5)");
    const auto p = static_cast<std::size_t>(raw.p);

    ScalingRecord rec;
    rec.margin = margin;
    rec.min.assign(p, std::numeric_limits<double>::infinity());
    rec.max.assign(p, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = raw.coords.data() + i * p;
        for (std::size_t l = 0; l < p; ++l) {
            rec.min[l] = std::min(rec.min[l], row[l]);
            rec.max[l] = std::max(rec.max[l], row[l]);
        }
    }
    for (std::size_t l = 0; l < p; ++l) {
        if (!(rec.max[l] > rec.min[l])) {
            throw std::invalid_argument("cannot scale a zero-range coordinate " + std::to_string(l));
        }
    }

    std::vector<double> scaled(raw.coords.size());
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = raw.coords.data() + i * p;
        double* dst = scaled.data() + i * p;
        for (std::size_t l = 0; l < p; ++l) dst[l] = rec.apply(row[l], l);
    }
    return {PointSet(p, std::move(scaled)), rec};
}

double quantile(std::vector<double> sorted_values, double q) {
    if (sorted_values.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::sort(sorted_values.begin(), sorted_values.end());
    const double pos = q * static_cast<double>(sorted_values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac;
}

namespace {

// Build the standardized standard-basis sketch for one dataset. K = 1
// accuracy parameters sketch the standard basis directly (the power-basis
// transform is ill-conditioned for one large factor, by design); K >= 2
// goes through the factorized pipeline plus the recovery transform.
SketchTensor build_sketch(PointsView pts, const AccuracyParameter& acc, int p, int shards,
                          int parallelism, PhaseTimings* timings) {
    const auto shard_list = split_shards(pts, shards);
    if (acc.k() == 1) {
        return map_reduce_build(shard_list, static_cast<int>(acc.total()), p, parallelism, timings);
    }
    const FactorizedTensor ft =
        map_reduce_build_factorized(shard_list, acc, p, parallelism, timings);
    const auto start = Clock::now();
    const Transform1D tf = build_transform_1d(acc);
    SketchTensor st = recover_standard(ft, tf);
    if (timings != nullptr) timings->transform_s = seconds_since(start);
    return st;
}

}  // namespace

void run_accuracy_study(const ExperimentConfig& cfg, std::ostream& csv) {
    cfg.validate();
    const int max_depth = *std::max_element(cfg.depths.begin(), cfg.depths.end());
    csv << "rho,depth,Jbar,seed,min_log2,q1_log2,median_log2,q3_log2,max_log2\n";
    for (double rho : cfg.rho) {
        for (const auto& acc : cfg.accuracy_grid) {
            for (std::uint64_t seed : cfg.seeds) {
                const RawPoints raw = generate_correlated_normal(cfg.n, cfg.p, rho, seed);
                const auto [pts, rec] = scale_to_unit(raw);
                const SketchTensor sketch =
                    build_sketch(view(pts), acc, cfg.p, cfg.shards, cfg.parallelism, nullptr);
                const KdTree tree = build_tree(sketch, max_depth);
                for (int d : cfg.depths) {
                    const CellAudit audit = audit_cells(tree, view(pts), d);
                    std::vector<double> logs = audit.log2_counts;
                    std::sort(logs.begin(), logs.end());
                    csv << format_double(rho) << ',' << d << ',' << acc.to_string('x') << ','
                        << seed << ',' << format_double(logs.front()) << ','
                        << format_double(quantile(logs, 0.25)) << ','
                        << format_double(quantile(logs, 0.5)) << ','
                        << format_double(quantile(logs, 0.75)) << ','
                        << format_double(logs.back()) << '\n';
                }
            }
        }
    }
}

void run_runtime_study(const ExperimentConfig& cfg, std::ostream& csv) {
    cfg.validate();
    csv << "phase,Jbar,rho,shards,parallelism,seconds\n";
    for (double rho : cfg.rho) {
        for (const auto& acc : cfg.accuracy_grid) {
            const std::uint64_t seed = cfg.seeds.front();
            const RawPoints raw = generate_correlated_normal(cfg.n, cfg.p, rho, seed);
            const auto [pts, rec] = scale_to_unit(raw);

            // Warm-up on a prefix, discarded.
            const std::uint64_t warm_n = std::min<std::uint64_t>(cfg.n, 10'000);
            PointsView warm{view(pts).data, warm_n, view(pts).p};
            PhaseTimings discard;
            build_sketch(warm, acc, cfg.p, cfg.shards, cfg.parallelism, &discard);

            PhaseTimings timings;
            const SketchTensor sketch =
                build_sketch(view(pts), acc, cfg.p, cfg.shards, cfg.parallelism, &timings);

            const std::string tag = acc.to_string('x');
            auto emit = [&](const std::string& phase, double seconds) {
                csv << phase << ',' << tag << ',' << format_double(rho) << ',' << cfg.shards << ','
                    << cfg.parallelism << ',' << format_double(seconds) << '\n';
            };
            emit("map", timings.map_s);
            emit("reduce", timings.reduce_s);
            emit("transform", timings.transform_s);
            for (int d : cfg.depths) {
                const auto start = Clock::now();
                const KdTree tree = build_tree(sketch, d);
                emit("tree_solve_d" + std::to_string(d), seconds_since(start));
                (void)tree;
            }
        }
    }
}

}  // namespace kdsketch
