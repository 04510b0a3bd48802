// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kdsketch {

/// Dense row-major tensor with `modes` axes of equal extent.
/// Flat index of (j_1,...,j_p) is sum_l j_l * extent^(p-l): the last
/// axis varies fastest.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t extent, std::size_t modes);  // zero-filled

    [[nodiscard]] std::size_t extent() const { return extent_; }
    [[nodiscard]] std::size_t modes() const { return modes_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }

    [[nodiscard]] double* data() { return values_.data(); }
    [[nodiscard]] const double* data() const { return values_.data(); }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    [[nodiscard]] std::size_t flat_index(std::span<const std::size_t> idx) const;

    /// Contract every axis against its coefficient vector (each of length
    /// `extent`), reducing to a scalar. Axes are contracted from the last
    /// (contiguous) one inward.
    [[nodiscard]] double contract_all(std::span<const std::vector<double>> vecs) const;

    /// Contract every axis except `keep`, returning the length-`extent`
    /// profile along the kept axis. vecs[keep] is ignored.
    [[nodiscard]] std::vector<double>
    contract_except(std::span<const std::vector<double>> vecs, std::size_t keep) const;

    /// Apply the extent x extent row-major matrix `a` along every axis
    /// (the Kronecker-power transform without materializing it).
    void apply_matrix_all_modes(const double* a);

private:
    std::size_t extent_ = 0;
    std::size_t modes_ = 0;
    std::vector<double> values_;
};

}  // namespace kdsketch
