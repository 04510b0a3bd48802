// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace kdsketch {

/// Open axis-aligned box (a, b) inside the closed unit cube.
/// Coordinate indices are 0-based throughout the API; the file formats
/// emitted by the CLI use 1-based coordinates.
struct Neighborhood {
    std::vector<double> lower;  // a, entries in [0, 1)
    std::vector<double> upper;  // b, entries in (0, 1]

    Neighborhood() = default;
    Neighborhood(std::vector<double> a, std::vector<double> b);

    static Neighborhood unit_cube(std::size_t p);

    [[nodiscard]] std::size_t dim() const { return lower.size(); }

    /// Left sub-box after splitting coordinate t at m: (a, b_{-t}(m)).
    [[nodiscard]] Neighborhood with_upper(std::size_t t, double m) const;
    /// Right sub-box after splitting coordinate t at m: (a_{-t}(m), b).
    [[nodiscard]] Neighborhood with_lower(std::size_t t, double m) const;

    /// Strict membership on every coordinate.
    [[nodiscard]] bool contains(std::span<const double> x) const;

    /// Throws std::invalid_argument on a malformed box.
    void validate() const;
};

/// Dense row-major storage for n points in (0,1)^p.
class PointSet {
public:
    explicit PointSet(std::size_t p);
    /// Takes ownership of a flat row-major buffer; throws if a coordinate
    /// lies outside the open unit interval.
    PointSet(std::size_t p, std::vector<double> coords);

    [[nodiscard]] std::size_t dim() const { return p_; }
    [[nodiscard]] std::size_t size() const { return p_ == 0 ? 0 : coords_.size() / p_; }
    [[nodiscard]] std::span<const double> operator[](std::size_t i) const {
        return {coords_.data() + i * p_, p_};
    }
    [[nodiscard]] const std::vector<double>& raw() const { return coords_; }

    void append(std::span<const double> x);

private:
    std::size_t p_ = 0;
    std::vector<double> coords_;
};

/// Non-owning view over contiguous row-major points.
struct PointsView {
    const double* data = nullptr;
    std::size_t n = 0;
    std::size_t p = 0;

    [[nodiscard]] std::span<const double> operator[](std::size_t i) const {
        return {data + i * p, p};
    }
};

[[nodiscard]] PointsView view(const PointSet& pts);

/// One block of a partitioned dataset.
struct Shard {
    int id = 0;
    PointsView points;
};

/// Split a point set into `shard_count` contiguous, disjoint shards whose
/// union is the full index set. Trailing shards may be one point shorter.
[[nodiscard]] std::vector<Shard> split_shards(PointsView pts, int shard_count);

/// Throws std::domain_error unless every coordinate is strictly in (0,1).
void validate_unit_point(std::span<const double> x);

}  // namespace kdsketch
