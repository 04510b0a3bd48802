// SPDX-License-Identifier: MIT
#include "kdsketch/tensor.hpp"

#include <stdexcept>

namespace kdsketch {

namespace {

std::size_t checked_size(std::size_t extent, std::size_t modes) {
    if (extent == 0 || modes == 0) throw std::invalid_argument("tensor extent and modes must be positive");
    std::size_t n = 1;
    for (std::size_t l = 0; l < modes; ++l) {
        if (n > (std::size_t{1} << 27) / extent) {
            throw std::invalid_argument("tensor too large: (2J+1)^p exceeds the supported size");
        }
        n *= extent;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::size_t extent, std::size_t modes)
    : extent_(extent), modes_(modes), values_(checked_size(extent, modes), 0.0) {}

std::size_t Tensor::flat_index(std::span<const std::size_t> idx) const {
    if (idx.size() != modes_) throw std::invalid_argument("index rank mismatch");
    std::size_t flat = 0;
    for (std::size_t l = 0; l < modes_; ++l) {
        if (idx[l] >= extent_) throw std::out_of_range("tensor index out of range");
        flat = flat * extent_ + idx[l];
    }
    return flat;
}

double Tensor::contract_all(std::span<const std::vector<double>> vecs) const {
    if (vecs.size() != modes_) throw std::invalid_argument("coefficient vector count mismatch");
    for (const auto& v : vecs) {
        if (v.size() != extent_) throw std::invalid_argument("coefficient vector length mismatch");
    }
    // Contract the last (contiguous) axis first, then work inward.
    std::vector<double> buf(values_);
    std::size_t n = buf.size();
    for (std::size_t mode = modes_; mode-- > 0;) {
        const double* coeff = vecs[mode].data();
        const std::size_t rows = n / extent_;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = buf.data() + r * extent_;
            double dot = 0.0;
            for (std::size_t j = 0; j < extent_; ++j) dot += row[j] * coeff[j];
            buf[r] = dot;
        }
        n = rows;
    }
    return buf[0];
}

std::vector<double> Tensor::contract_except(std::span<const std::vector<double>> vecs,
                                            std::size_t keep) const {
    if (vecs.size() != modes_) throw std::invalid_argument("coefficient vector count mismatch");
    if (keep >= modes_) throw std::invalid_argument("kept mode out of range");
    std::vector<double> buf(values_);
    std::size_t n = buf.size();
    // Trailing axes (after `keep`): contract the contiguous last axis.
    for (std::size_t mode = modes_; mode-- > keep + 1;) {
        const double* coeff = vecs[mode].data();
        if (vecs[mode].size() != extent_) throw std::invalid_argument("coefficient vector length mismatch");
        const std::size_t rows = n / extent_;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = buf.data() + r * extent_;
            double dot = 0.0;
            for (std::size_t j = 0; j < extent_; ++j) dot += row[j] * coeff[j];
            buf[r] = dot;
        }
        n = rows;
    }
    // Leading axes: repeatedly contract the first axis, whose slices are
    // contiguous blocks of length n/extent.
    for (std::size_t mode = 0; mode < keep; ++mode) {
        const double* coeff = vecs[mode].data();
        if (vecs[mode].size() != extent_) throw std::invalid_argument("coefficient vector length mismatch");
        const std::size_t block = n / extent_;
        std::vector<double> next(block, 0.0);
        for (std::size_t j = 0; j < extent_; ++j) {
            const double w = coeff[j];
            const double* slice = buf.data() + j * block;
            for (std::size_t r = 0; r < block; ++r) next[r] += w * slice[r];
        }
        buf = std::move(next);
        n = block;
    }
    buf.resize(extent_);
    return buf;
}

void Tensor::apply_matrix_all_modes(const double* a) {
    std::vector<double> scratch(values_.size());
    std::size_t inner = 1;  // product of extents of axes after `mode`
    for (std::size_t mode = modes_; mode-- > 0;) {
        const std::size_t outer = values_.size() / (inner * extent_);
        for (std::size_t o = 0; o < outer; ++o) {
            const double* in = values_.data() + o * extent_ * inner;
            double* out = scratch.data() + o * extent_ * inner;
            for (std::size_t r = 0; r < extent_; ++r) {
                const double* arow = a + r * extent_;
                double* dst = out + r * inner;
                for (std::size_t i = 0; i < inner; ++i) dst[i] = 0.0;
                for (std::size_t c = 0; c < extent_; ++c) {
                    const double w = arow[c];
                    if (w == 0.0) continue;
                    const double* src = in + c * inner;
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += w * src[i];
                }
            }
        }
        values_.swap(scratch);
        inner *= extent_;
    }
}

}  // namespace kdsketch
