// SPDX-License-Identifier: MIT
//
// Kernel benchmark: serial reference vs OpenMP sketching, and the
// standard (per-index trig) basis vs the factorized (p*K cosines) basis
// at the same effective order J. Prints one CSV row per configuration.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "kdsketch/eval.hpp"
#include "kdsketch/factorized.hpp"
#include "kdsketch/sketch.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto start = Clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(Clock::now() - start).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    std::uint64_t n = 200'000;
    int p = 3;
    if (argc > 1) n = std::strtoull(argv[1], nullptr, 10);
    if (argc > 2) p = std::atoi(argv[2]);

    const kdsketch::AccuracyParameter acc({3, 5});
    const int order = static_cast<int>(acc.total());

    const auto raw = kdsketch::generate_correlated_normal(n, p, 0.0, 42);
    const auto [pts, rec] = kdsketch::scale_to_unit(raw);
    const kdsketch::Shard shard{0, kdsketch::view(pts)};

    std::printf("kernel,basis,n,p,Jbar,threads,seconds\n");

    double checksum = 0.0;
    const int reps = 3;

    // Warm-up pass, discarded.
    { auto t = kdsketch::sketch_shard_factorized_serial(shard, acc, p); checksum += t.values[1]; }

    const double serial_std = time_best_of(reps, [&] {
        auto t = kdsketch::sketch_shard_serial(shard, order, p);
        checksum += t.values[1];
    });
    std::printf("serial,standard,%llu,%d,%s,1,%.6f\n", static_cast<unsigned long long>(n), p,
                acc.to_string().c_str(), serial_std);

    const double serial_fact = time_best_of(reps, [&] {
        auto t = kdsketch::sketch_shard_factorized_serial(shard, acc, p);
        checksum += t.values[1];
    });
    std::printf("serial,factorized,%llu,%d,%s,1,%.6f\n", static_cast<unsigned long long>(n), p,
                acc.to_string().c_str(), serial_fact);

    for (int threads : {2, 4}) {
        const double omp_std = time_best_of(reps, [&] {
            auto t = kdsketch::sketch_shard(shard, order, p, threads);
            checksum += t.values[1];
        });
        std::printf("openmp,standard,%llu,%d,%s,%d,%.6f\n", static_cast<unsigned long long>(n), p,
                    acc.to_string().c_str(), threads, omp_std);
        const double omp_fact = time_best_of(reps, [&] {
            auto t = kdsketch::sketch_shard_factorized(shard, acc, p, threads);
            checksum += t.values[1];
        });
        std::printf("openmp,factorized,%llu,%d,%s,%d,%.6f\n", static_cast<unsigned long long>(n),
                    p, acc.to_string().c_str(), threads, omp_fact);
    }

    std::fprintf(stderr, "checksum %.17g\n", checksum);
    return 0;
}
