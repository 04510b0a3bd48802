// SPDX-License-Identifier: MIT
#include "kdsketch/sketch.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "accumulate.hpp"
#include "kdsketch/basis.hpp"

namespace kdsketch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Shared by the serial reference and the per-thread bodies of the OpenMP
// kernel: accumulate points [begin, end) of the shard.
void accumulate_range(const Shard& shard, int order, int p, std::size_t begin, std::size_t end,
                      detail::KahanTensor& acc, TrigTally& tally, std::uint64_t& reads) {
    const std::size_t len = 2 * static_cast<std::size_t>(order) + 1;
    std::vector<double> vecs(static_cast<std::size_t>(p) * len);
    for (std::size_t i = begin; i < end; ++i) {
        const std::span<const double> x = shard.points[i];
        for (int l = 0; l < p; ++l) {
            eval_c_vector(x[static_cast<std::size_t>(l)], order,
                          {vecs.data() + static_cast<std::size_t>(l) * len, len}, &tally);
        }
        acc.accumulate_outer(vecs.data(), len, static_cast<std::size_t>(p));
        ++reads;
    }
}

}  // namespace

SketchCounters& sketch_counters() {
    static SketchCounters counters;
    return counters;
}

SketchTensor sketch_shard_serial(const Shard& shard, int order, int p) {
    if (order < 1 || p < 1) throw std::invalid_argument("order and dimension must be positive");
    if (shard.points.n > 0 && shard.points.p != static_cast<std::size_t>(p)) {
        throw std::invalid_argument("shard dimension mismatch");
    }
    SketchTensor t;
    t.p = p;
    t.order = order;
    t.count = shard.points.n;
    t.values = Tensor(t.basis_size(), static_cast<std::size_t>(p));

    detail::KahanTensor acc(t.values.size());
    TrigTally tally;
    std::uint64_t reads = 0;
    accumulate_range(shard, order, p, 0, shard.points.n, acc, tally, reads);
    acc.finalize_into(t.values);

    auto& counters = sketch_counters();
    counters.points_read.fetch_add(reads, std::memory_order_relaxed);
    counters.cos_calls.fetch_add(tally.cos_calls, std::memory_order_relaxed);
    counters.sin_calls.fetch_add(tally.sin_calls, std::memory_order_relaxed);
    return t;
}

SketchTensor sketch_shard(const Shard& shard, int order, int p, int threads) {
    if (order < 1 || p < 1) throw std::invalid_argument("order and dimension must be positive");
    if (shard.points.n > 0 && shard.points.p != static_cast<std::size_t>(p)) {
        throw std::invalid_argument("shard dimension mismatch");
    }
    SketchTensor t;
    t.p = p;
    t.order = order;
    t.count = shard.points.n;
    t.values = Tensor(t.basis_size(), static_cast<std::size_t>(p));

    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
    const std::size_t n = shard.points.n;
    std::vector<detail::KahanTensor> partials(static_cast<std::size_t>(nthreads),
                                              detail::KahanTensor(t.values.size()));

#pragma omp parallel num_threads(nthreads)
    {
        const int tid = omp_get_thread_num();
        const std::size_t per = n / static_cast<std::size_t>(nthreads);
        const std::size_t extra = n % static_cast<std::size_t>(nthreads);
        const std::size_t begin =
            per * static_cast<std::size_t>(tid) + std::min<std::size_t>(tid, extra);
        const std::size_t end = begin + per + (static_cast<std::size_t>(tid) < extra ? 1 : 0);
        TrigTally tally;
        std::uint64_t reads = 0;
        accumulate_range(shard, order, p, begin, end, partials[static_cast<std::size_t>(tid)],
                         tally, reads);
        auto& counters = sketch_counters();
        counters.points_read.fetch_add(reads, std::memory_order_relaxed);
        counters.cos_calls.fetch_add(tally.cos_calls, std::memory_order_relaxed);
        counters.sin_calls.fetch_add(tally.sin_calls, std::memory_order_relaxed);
    }

    // Merge thread partials in thread order so the result only depends on
    // the thread count, never on scheduling.
    for (int tid = 1; tid < nthreads; ++tid) {
        partials[0].merge_from(partials[static_cast<std::size_t>(tid)]);
    }
    partials[0].finalize_into(t.values);
    return t;
}

SketchTensor merge(const SketchTensor& a, const SketchTensor& b) {
    if (a.p != b.p || a.order != b.order) throw std::invalid_argument("sketch shape mismatch");
    if (a.standardized || b.standardized) {
        throw std::invalid_argument("merge operates on raw (unstandardized) sketches");
    }
    SketchTensor out = a;
    out.count += b.count;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
    return out;
}

SketchTensor standardize(SketchTensor t) {
    if (t.standardized) return t;
    if (t.count == 0) throw std::invalid_argument("cannot standardize an empty sketch");
    const double inv = 1.0 / static_cast<double>(t.count);
    for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] *= inv;
    t.values[0] = 1.0;  // C_0 / C_0; the raw entry equals count exactly
    t.standardized = true;
    return t;
}

namespace {

std::vector<std::vector<double>> g_vectors(const SketchTensor& t, const Neighborhood& nb) {
    if (nb.dim() != static_cast<std::size_t>(t.p)) {
        throw std::invalid_argument("neighborhood dimension mismatch");
    }
    std::vector<std::vector<double>> vecs(static_cast<std::size_t>(t.p));
    for (int l = 0; l < t.p; ++l) {
        auto& v = vecs[static_cast<std::size_t>(l)];
        v.resize(t.basis_size());
        eval_g_vector(nb.lower[static_cast<std::size_t>(l)], nb.upper[static_cast<std::size_t>(l)],
                      t.order, v);
    }
    return vecs;
}

}  // namespace

double approx_count(const SketchTensor& t, const Neighborhood& nb) {
    if (!t.standardized) throw std::invalid_argument("approx_count requires a standardized sketch");
    return t.values.contract_all(g_vectors(t, nb));
}

std::vector<double> approx_count_profile(const SketchTensor& t, const Neighborhood& nb,
                                         std::size_t t_coord) {
    if (!t.standardized) throw std::invalid_argument("profile requires a standardized sketch");
    if (t_coord >= static_cast<std::size_t>(t.p)) throw std::invalid_argument("coordinate out of range");
    auto vecs = g_vectors(t, nb);
    return t.values.contract_except(vecs, t_coord);
}

SketchTensor map_reduce_build(std::span<const Shard> shards, int order, int p, int parallelism,
                              PhaseTimings* timings) {
    if (shards.empty()) throw std::invalid_argument("no shards given");
    if (parallelism < 0) throw std::invalid_argument("parallelism must be nonnegative");
    const int nthreads = parallelism > 0 ? parallelism : omp_get_max_threads();

    const auto map_start = Clock::now();
    std::vector<SketchTensor> mapped(shards.size());
#pragma omp parallel for num_threads(nthreads) schedule(dynamic)
    for (std::size_t r = 0; r < shards.size(); ++r) {
        mapped[r] = sketch_shard_serial(shards[r], order, p);
    }
    const double map_s = seconds_since(map_start);

    // Binary tree fold in shard order.
    const auto reduce_start = Clock::now();
    std::size_t width = shards.size();
    while (width > 1) {
        const std::size_t half = (width + 1) / 2;
        for (std::size_t i = 0; i + half < width; ++i) {
            mapped[i] = merge(mapped[i], mapped[i + half]);
        }
        width = half;
    }
    if (mapped[0].count == 0) throw std::invalid_argument("all shards are empty");
    SketchTensor out = standardize(std::move(mapped[0]));
    const double reduce_s = seconds_since(reduce_start);

    if (timings != nullptr) {
        timings->map_s = map_s;
        timings->reduce_s = reduce_s;
    }
    return out;
}

double exact_fraction(PointsView points, const Neighborhood& nb) {
    if (points.n == 0) throw std::invalid_argument("empty point set");
    if (points.p != nb.dim()) throw std::invalid_argument("dimension mismatch");
    std::uint64_t inside = 0;
    for (std::size_t i = 0; i < points.n; ++i) {
        if (nb.contains(points[i])) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(points.n);
}

double empirical_error(PointsView points, const SketchTensor& t, const Neighborhood& nb) {
    if (points.n != t.count) {
        throw std::invalid_argument("sketch was not built from this point set");
    }
    return exact_fraction(points, nb) - approx_count(t, nb);
}

}  // namespace kdsketch
