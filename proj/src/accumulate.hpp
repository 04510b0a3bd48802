// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <vector>

#include "kdsketch/tensor.hpp"

namespace kdsketch::detail {

// Compensated (Kahan) tensor accumulator. Keeps every partition and
// thread-count configuration of a sketch within a few ulps of the exact
// real sum, which the 1e-12 relative partition-invariance contract needs
// at n = 1e6 and beyond.
class KahanTensor {
public:
    explicit KahanTensor(std::size_t n) : sum_(n, 0.0), comp_(n, 0.0) {}

    [[nodiscard]] std::size_t size() const { return sum_.size(); }

    void add(std::size_t i, double v) {
        const double y = v - comp_[i];
        const double t = sum_[i] + y;
        comp_[i] = (t - sum_[i]) - y;
        sum_[i] = t;
    }

    /// Accumulate the outer product of p coordinate vectors, each of
    /// length `len`, stored consecutively in `vecs` (p blocks).
    void accumulate_outer(const double* vecs, std::size_t len, std::size_t p) {
        const double* last = vecs + (p - 1) * len;
        if (p == 1) {
            for (std::size_t j = 0; j < len; ++j) kahan_update(j, last[j]);
            return;
        }
        const std::size_t outer = size() / len;
        std::vector<std::size_t> digit(p - 1, 0);
        double prefix = 1.0;
        for (std::size_t l = 0; l + 1 < p; ++l) prefix *= vecs[l * len];
        for (std::size_t o = 0;;) {
            double* s = sum_.data() + o * len;
            double* c = comp_.data() + o * len;
            for (std::size_t j = 0; j < len; ++j) {
                const double v = prefix * last[j];
                const double y = v - c[j];
                const double t = s[j] + y;
                c[j] = (t - s[j]) - y;
                s[j] = t;
            }
            if (++o == outer) break;
            // Advance the odometer over the leading p-1 digits (last digit
            // fastest) and rebuild the prefix product.
            std::size_t l = p - 1;
            while (l-- > 0) {
                if (++digit[l] < len) break;
                digit[l] = 0;
            }
            prefix = 1.0;
            for (std::size_t q = 0; q + 1 < p; ++q) prefix *= vecs[q * len + digit[q]];
        }
    }

    /// Fold another accumulator in (deterministic given call order).
    void merge_from(const KahanTensor& other) {
        for (std::size_t i = 0; i < sum_.size(); ++i) {
            add(i, other.sum_[i] - other.comp_[i]);
        }
    }

    void finalize_into(Tensor& out) const {
        for (std::size_t i = 0; i < sum_.size(); ++i) out[i] = sum_[i] - comp_[i];
    }

private:
    void kahan_update(std::size_t i, double v) { add(i, v); }

    std::vector<double> sum_;
    std::vector<double> comp_;
};

}  // namespace kdsketch::detail
