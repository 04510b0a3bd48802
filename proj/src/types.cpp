// SPDX-License-Identifier: MIT
#include "kdsketch/types.hpp"

#include <stdexcept>
#include <string>
#include <utility>

namespace kdsketch {

Neighborhood::Neighborhood(std::vector<double> a, std::vector<double> b)
    : lower(std::move(a)), upper(std::move(b)) {
    validate();
}

Neighborhood Neighborhood::unit_cube(std::size_t p) {
    Neighborhood nb;
    nb.lower.assign(p, 0.0);
    nb.upper.assign(p, 1.0);
    return nb;
}

Neighborhood Neighborhood::with_upper(std::size_t t, double m) const {
    Neighborhood nb = *this;
    nb.upper[t] = m;
    return nb;
}

Neighborhood Neighborhood::with_lower(std::size_t t, double m) const {
    Neighborhood nb = *this;
    nb.lower[t] = m;
    return nb;
}

bool Neighborhood::contains(std::span<const double> x) const {
    if (x.size() != dim()) throw std::invalid_argument("point/neighborhood dimension mismatch");
    for (std::size_t l = 0; l < x.size(); ++l) {
        if (!(lower[l] < x[l] && x[l] < upper[l])) return false;
    }
    return true;
}

void Neighborhood::validate() const {
    if (lower.size() != upper.size()) {
        throw std::invalid_argument("neighborhood bound dimensions differ");
    }
    if (lower.empty()) throw std::invalid_argument("neighborhood dimension must be positive");
    for (std::size_t l = 0; l < lower.size(); ++l) {
        if (!(lower[l] >= 0.0 && lower[l] < 1.0 && upper[l] > 0.0 && upper[l] <= 1.0 &&
              lower[l] < upper[l])) {
            throw std::invalid_argument("neighborhood bounds must satisfy 0 <= a < b <= 1 at coordinate " +
                                        std::to_string(l));
        }
    }
}

void validate_unit_point(std::span<const double> x) {
    for (double v : x) {
        if (!(v > 0.0 && v < 1.0)) {
            throw std::domain_error("coordinate " + std::to_string(v) +
                                    " outside the open unit interval");
        }
    }
}

PointSet::PointSet(std::size_t p) : p_(p) {
    if (p == 0) throw std::invalid_argument("point dimension must be positive");
}

PointSet::PointSet(std::size_t p, std::vector<double> coords) : p_(p), coords_(std::move(coords)) {
    if (p == 0) throw std::invalid_argument("point dimension must be positive");
    if (coords_.size() % p_ != 0) {
        throw std::invalid_argument("coordinate buffer length is not a multiple of the dimension");
    }
    validate_unit_point(coords_);
}

void PointSet::append(std::span<const double> x) {
    if (x.size() != p_) throw std::invalid_argument("appended point has wrong dimension");
    validate_unit_point(x);
    coords_.insert(coords_.end(), x.begin(), x.end());
}

PointsView view(const PointSet& pts) {
    return PointsView{pts.raw().data(), pts.size(), pts.dim()};
}

std::vector<Shard> split_shards(PointsView pts, int shard_count) {
    if (shard_count < 1) throw std::invalid_argument("shard count must be positive");
    std::vector<Shard> shards;
    shards.reserve(static_cast<std::size_t>(shard_count));
    const std::size_t r = static_cast<std::size_t>(shard_count);
    const std::size_t base = pts.n / r;
    const std::size_t extra = pts.n % r;  // first `extra` shards get one more point
    std::size_t offset = 0;
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t len = base + (i < extra ? 1 : 0);
        shards.push_back(Shard{static_cast<int>(i),
                               PointsView{pts.data + offset * pts.p, len, pts.p}});
        offset += len;
    }
    return shards;
}

}  // namespace kdsketch
