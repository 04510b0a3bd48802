// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "kdsketch/basis.hpp"
#include "kdsketch/sketch.hpp"

using namespace kdsketch;

namespace {

PointSet uniform_points(std::size_t n, std::size_t p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(1e-9, 1.0 - 1e-9);
    std::vector<double> coords(n * p);
    for (auto& c : coords) c = unif(rng);
    return PointSet(p, std::move(coords));
}

bool bitwise_equal(const SketchTensor& a, const SketchTensor& b) {
    if (a.p != b.p || a.order != b.order || a.count != b.count ||
        a.standardized != b.standardized) {
        return false;
    }
    return std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
}

double max_rel_diff(const SketchTensor& a, const SketchTensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double denom = std::max(std::abs(a.values[i]), std::abs(b.values[i]));
        if (denom == 0.0) continue;
        worst = std::max(worst, std::abs(a.values[i] - b.values[i]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("single point sketch holds the raw basis values") {
    const std::vector<double> coords{0.5};
    const PointSet pts(1, coords);
    const Shard shard{0, view(pts)};
    const SketchTensor t = sketch_shard_serial(shard, 1, 1);
    CHECK(t.count == 1);
    CHECK(t.values.size() == 3);
    CHECK(t.values[0] == 1.0);
    CHECK(t.values[1] == doctest::Approx(std::cos(0.5)).epsilon(1e-15));
    CHECK(t.values[2] == doctest::Approx(std::sin(0.5)).epsilon(1e-15));
}

TEST_CASE("empty shard yields the zero tensor") {
    const Shard shard{0, PointsView{nullptr, 0, 2}};
    const SketchTensor t = sketch_shard_serial(shard, 2, 2);
    CHECK(t.count == 0);
    for (std::size_t i = 0; i < t.values.size(); ++i) CHECK(t.values[i] == 0.0);
    CHECK_THROWS_AS(standardize(t), std::invalid_argument);
}

TEST_CASE("sketch equals the brute-force double loop") {
    const int order = 2, p = 2;
    const PointSet pts = uniform_points(100, 2, 21);
    const SketchTensor t = sketch_shard_serial(Shard{0, view(pts)}, order, p);

    const std::size_t len = 2 * order + 1;
    for (std::size_t j1 = 0; j1 < len; ++j1) {
        for (std::size_t j2 = 0; j2 < len; ++j2) {
            long double expect = 0.0L;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                expect += static_cast<long double>(coef_c(static_cast<int>(j1), pts[i][0])) *
                          coef_c(static_cast<int>(j2), pts[i][1]);
            }
            const double got = t.values[j1 * len + j2];
            CHECK(got == doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
        }
    }
}

TEST_CASE("merge identities") {
    const PointSet pts = uniform_points(50, 2, 5);
    const SketchTensor a = sketch_shard_serial(Shard{0, view(pts)}, 2, 2);
    SketchTensor zero = a;
    zero.count = 0;
    for (std::size_t i = 0; i < zero.values.size(); ++i) zero.values[i] = 0.0;

    CHECK(bitwise_equal(merge(a, zero), a));

    const PointSet pts2 = uniform_points(30, 2, 6);
    const SketchTensor b = sketch_shard_serial(Shard{1, view(pts2)}, 2, 2);
    CHECK(bitwise_equal(merge(a, b), merge(b, a)));
    CHECK(merge(a, b).count == 80);

    SketchTensor wrong_shape = sketch_shard_serial(Shard{0, view(pts)}, 3, 2);
    CHECK_THROWS_AS(merge(a, wrong_shape), std::invalid_argument);
}

TEST_CASE("standardize divides by the count and pins the constant entry") {
    const std::vector<double> coords{0.5, 0.5};
    const PointSet pts(1, coords);  // two 1-d points at 0.5
    const SketchTensor raw = sketch_shard_serial(Shard{0, view(pts)}, 1, 1);
    CHECK(raw.values[0] == 2.0);
    const SketchTensor std1 = standardize(raw);
    CHECK(std1.values[0] == 1.0);
    CHECK(std1.values[1] == doctest::Approx(std::cos(0.5)).epsilon(1e-15));
    CHECK(std1.values[2] == doctest::Approx(std::sin(0.5)).epsilon(1e-15));
    // Idempotent once standardized.
    CHECK(bitwise_equal(standardize(std1), std1));
}

TEST_CASE("standardized entries stay within [-1, 1]") {
    const PointSet pts = uniform_points(1000, 2, 77);
    const SketchTensor t = standardize(sketch_shard_serial(Shard{0, view(pts)}, 4, 2));
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        CHECK(t.values[i] <= 1.0);
        CHECK(t.values[i] >= -1.0);
    }
}

TEST_CASE("approx_count on the full cube is exactly one") {
    const PointSet pts = uniform_points(500, 3, 9);
    const SketchTensor t = standardize(sketch_shard_serial(Shard{0, view(pts)}, 3, 3));
    CHECK(approx_count(t, Neighborhood::unit_cube(3)) == 1.0);
}

TEST_CASE("approx_count approximates the exact fraction") {
    const std::size_t n = 100'000;
    const PointSet pts = uniform_points(n, 2, 12345);
    const SketchTensor t = standardize(sketch_shard(Shard{0, view(pts)}, 64, 2));
    const Neighborhood nb({0.2, 0.0}, {0.7, 1.0});
    const double approx = approx_count(t, nb);
    const double exact = exact_fraction(view(pts), nb);
    CHECK(std::abs(approx - exact) < 0.01);
    CHECK(std::abs(approx - 0.5) < 0.01);
}

TEST_CASE("approx_count equals the mean of per-point partial sums") {
    const std::size_t n = 1000;
    const PointSet pts = uniform_points(n, 2, 99);
    const int order = 6;
    const SketchTensor t = standardize(sketch_shard_serial(Shard{0, view(pts)}, order, 2));
    const Neighborhood nb({0.1, 0.25}, {0.8, 0.9});
    long double mean = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        mean += indicator_partial_sum_pd(pts[i], nb, order);
    }
    mean /= static_cast<long double>(n);
    const double a = approx_count(t, nb);
    CHECK(std::abs(a - static_cast<double>(mean)) / std::abs(a) < 1e-10);
}

TEST_CASE("partition invariance across shard counts") {
    const std::size_t n = 10'000;
    const PointSet pts = uniform_points(n, 2, 31);
    const int order = 8;
    SketchTensor whole;
    bool first = true;
    for (int shards : {1, 2, 4, 16}) {
        const auto shard_list = split_shards(view(pts), shards);
        const SketchTensor t = map_reduce_build(shard_list, order, 2, 2);
        if (first) {
            whole = t;
            first = false;
        } else {
            CHECK(max_rel_diff(whole, t) < 1e-12);
        }
    }
}

TEST_CASE("map_reduce_build is bitwise independent of parallelism") {
    const std::size_t n = 5000;
    const PointSet pts = uniform_points(n, 2, 55);
    const auto shard_list = split_shards(view(pts), 16);
    const SketchTensor base = map_reduce_build(shard_list, 4, 2, 1);
    for (int parallelism : {2, 4, 8}) {
        CHECK(bitwise_equal(base, map_reduce_build(shard_list, 4, 2, parallelism)));
    }
    // One shard at parallelism one reduces to the serial kernel.
    const auto single = split_shards(view(pts), 1);
    const SketchTensor direct = standardize(sketch_shard_serial(single[0], 4, 2));
    CHECK(bitwise_equal(direct, map_reduce_build(single, 4, 2, 1)));
}

TEST_CASE("openmp kernel agrees with the serial reference") {
    const PointSet pts = uniform_points(20'000, 2, 14);
    const Shard shard{0, view(pts)};
    const SketchTensor serial = sketch_shard_serial(shard, 6, 2);
    CHECK(bitwise_equal(serial, sketch_shard(shard, 6, 2, 1)));
    for (int threads : {2, 3, 8}) {
        CHECK(max_rel_diff(serial, sketch_shard(shard, 6, 2, threads)) < 1e-12);
    }
}

TEST_CASE("read counter reports one read per point") {
    const std::size_t n = 4096;
    const PointSet pts = uniform_points(n, 2, 64);
    for (int shards : {1, 4, 16}) {
        for (int parallelism : {1, 4, 8}) {
            sketch_counters().reset();
            map_reduce_build(split_shards(view(pts), shards), 3, 2, parallelism);
            CHECK(sketch_counters().points_read.load() == n);
        }
    }
}

TEST_CASE("standard basis trig budget is 2Jp calls per point") {
    const std::size_t n = 100;
    const int order = 5, p = 3;
    const PointSet pts = uniform_points(n, 3, 8);
    sketch_counters().reset();
    sketch_shard_serial(Shard{0, view(pts)}, order, p);
    CHECK(sketch_counters().cos_calls.load() == n * order * p);
    CHECK(sketch_counters().sin_calls.load() == n * order * p);
}

TEST_CASE("empirical error vanishes on the full cube and decays in J") {
    const std::size_t n = 20'000;
    const PointSet pts = uniform_points(n, 1, 2024);
    const SketchTensor t8 = standardize(sketch_shard(Shard{0, view(pts)}, 8, 1));
    const SketchTensor t64 = standardize(sketch_shard(Shard{0, view(pts)}, 64, 1));
    CHECK(empirical_error(view(pts), t64, Neighborhood::unit_cube(1)) == 0.0);

    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    int improved = 0;
    for (int trial = 0; trial < 10; ++trial) {
        double a = unif(rng), b = unif(rng);
        if (a > b) std::swap(a, b);
        if (b - a < 0.05) b = std::min(0.95, a + 0.05);
        const Neighborhood nb({a}, {b});
        const double e8 = std::abs(empirical_error(view(pts), t8, nb));
        const double e64 = std::abs(empirical_error(view(pts), t64, nb));
        if (e64 <= e8) ++improved;
        CHECK(e64 <= 0.02);
    }
    CHECK(improved >= 8);
}

TEST_CASE("dimension mismatches are rejected") {
    const PointSet pts = uniform_points(10, 2, 3);
    CHECK_THROWS_AS(sketch_shard_serial(Shard{0, view(pts)}, 2, 3), std::invalid_argument);
    const SketchTensor t = standardize(sketch_shard_serial(Shard{0, view(pts)}, 2, 2));
    CHECK_THROWS_AS(approx_count(t, Neighborhood::unit_cube(3)), std::invalid_argument);
    const SketchTensor raw = sketch_shard_serial(Shard{0, view(pts)}, 2, 2);
    CHECK_THROWS_AS(approx_count(raw, Neighborhood::unit_cube(2)), std::invalid_argument);
}
