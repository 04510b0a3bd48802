// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "kdsketch/tensor.hpp"

using namespace kdsketch;

namespace {

// Naive full-grid contraction oracle.
double contract_oracle(const Tensor& t, const std::vector<std::vector<double>>& vecs) {
    const std::size_t p = t.modes();
    const std::size_t len = t.extent();
    std::vector<std::size_t> idx(p, 0);
    long double sum = 0.0L;
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        long double w = t[flat];
        std::size_t rem = flat;
        for (std::size_t l = p; l-- > 0;) {
            idx[l] = rem % len;
            rem /= len;
        }
        for (std::size_t l = 0; l < p; ++l) w *= vecs[l][idx[l]];
        sum += w;
    }
    return static_cast<double>(sum);
}

Tensor random_tensor(std::size_t extent, std::size_t modes, std::uint64_t seed) {
    Tensor t(extent, modes);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = unif(rng);
    return t;
}

std::vector<std::vector<double>> random_vectors(std::size_t extent, std::size_t count,
                                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<std::vector<double>> vecs(count, std::vector<double>(extent));
    for (auto& v : vecs) {
        for (auto& x : v) x = unif(rng);
    }
    return vecs;
}

}  // namespace

TEST_CASE("flat index is mixed radix with the last axis fastest") {
    Tensor t(5, 3);
    const std::size_t idx[] = {2, 0, 4};
    CHECK(t.flat_index(idx) == 2 * 25 + 0 * 5 + 4);
    const std::size_t first[] = {0, 0, 0};
    CHECK(t.flat_index(first) == 0);
    const std::size_t last[] = {4, 4, 4};
    CHECK(t.flat_index(last) == t.size() - 1);
}

TEST_CASE("contract_all matches the naive oracle") {
    for (std::size_t modes : {std::size_t{1}, std::size_t{2}, std::size_t{3}}) {
        const Tensor t = random_tensor(7, modes, 100 + modes);
        const auto vecs = random_vectors(7, modes, 200 + modes);
        CHECK(t.contract_all(vecs) == doctest::Approx(contract_oracle(t, vecs)).epsilon(1e-12));
    }
}

TEST_CASE("contract_except leaves the kept axis profile") {
    const std::size_t extent = 5;
    for (std::size_t modes : {std::size_t{2}, std::size_t{3}}) {
        const Tensor t = random_tensor(extent, modes, 7 + modes);
        auto vecs = random_vectors(extent, modes, 17 + modes);
        for (std::size_t keep = 0; keep < modes; ++keep) {
            const auto profile = t.contract_except(vecs, keep);
            REQUIRE(profile.size() == extent);
            // Dotting the profile with any vector along the kept axis must
            // equal the full contraction with that vector substituted in.
            auto probe = vecs;
            std::mt19937_64 rng(99);
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            for (auto& x : probe[keep]) x = unif(rng);
            double dot = 0.0;
            for (std::size_t j = 0; j < extent; ++j) dot += profile[j] * probe[keep][j];
            CHECK(dot == doctest::Approx(t.contract_all(probe)).epsilon(1e-12));
        }
    }
}

TEST_CASE("apply_matrix_all_modes matches per-index reconstruction") {
    const std::size_t extent = 4;
    const std::size_t modes = 2;
    const Tensor t = random_tensor(extent, modes, 31);
    std::vector<double> a(extent * extent);
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (auto& x : a) x = unif(rng);

    Tensor applied = t;
    applied.apply_matrix_all_modes(a.data());

    // out[r1][r2] = sum_{c1 c2} A[r1][c1] A[r2][c2] in[c1][c2]
    for (std::size_t r1 = 0; r1 < extent; ++r1) {
        for (std::size_t r2 = 0; r2 < extent; ++r2) {
            long double expect = 0.0L;
            for (std::size_t c1 = 0; c1 < extent; ++c1) {
                for (std::size_t c2 = 0; c2 < extent; ++c2) {
                    expect += static_cast<long double>(a[r1 * extent + c1]) * a[r2 * extent + c2] *
                              t[c1 * extent + c2];
                }
            }
            CHECK(applied[r1 * extent + r2] ==
                  doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
        }
    }
}

TEST_CASE("size guards") {
    CHECK_THROWS(Tensor(0, 1));
    CHECK_THROWS(Tensor(3, 0));
    CHECK_THROWS(Tensor(1 << 14, 3));
}
