// SPDX-License-Identifier: MIT
#include "kdsketch/tree.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "kdsketch/basis.hpp"

namespace kdsketch {

namespace {

constexpr int kGridPoints = 256;
constexpr double kGridMargin = 1e-9;
constexpr double kBisectWidth = 1e-12;

// One-dimensional slice of the split equation: with the sketch contracted
// against every other coordinate's g vector, the imbalance at m is
//   h(m) = sum_j w[j] (g_j(a_t, m) - g_j(m, b_t)).
struct SplitFunction {
    const std::vector<double>& w;
    int order;
    double a, b;

    [[nodiscard]] double operator()(double m) const {
        const std::size_t len = w.size();
        std::vector<double> left(len), right(len);
        eval_g_vector(a, m, order, left);
        eval_g_vector(m, b, order, right);
        double h = 0.0;
        for (std::size_t j = 0; j < len; ++j) h += w[j] * (left[j] - right[j]);
        return h;
    }
};

int cycle_coordinate(int depth, int p) { return (depth - 1) % p; }

}  // namespace

MedianResult solve_median(const SketchTensor& sketch, const Neighborhood& nb,
                          std::size_t t_coord) {
    nb.validate();
    const std::vector<double> w = approx_count_profile(sketch, nb, t_coord);
    const double a = nb.lower[t_coord];
    const double b = nb.upper[t_coord];
    const SplitFunction h{w, sketch.order, a, b};

    const double lo = a + kGridMargin;
    const double hi = b - kGridMargin;
    if (!(lo < hi)) throw std::invalid_argument("degenerate split interval");

    std::vector<double> grid(kGridPoints), values(kGridPoints);
    for (int i = 0; i < kGridPoints; ++i) {
        grid[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kGridPoints - 1);
        values[static_cast<std::size_t>(i)] = h(grid[static_cast<std::size_t>(i)]);
    }

    struct Candidate {
        double m;
        double abs_h;
    };
    std::vector<Candidate> candidates;
    for (int i = 0; i + 1 < kGridPoints; ++i) {
        const double ha = values[static_cast<std::size_t>(i)];
        const double hb = values[static_cast<std::size_t>(i + 1)];
        if (ha == 0.0) {
            candidates.push_back({grid[static_cast<std::size_t>(i)], 0.0});
            continue;
        }
        if (!(ha * hb < 0.0)) continue;
        double xl = grid[static_cast<std::size_t>(i)];
        double xr = grid[static_cast<std::size_t>(i + 1)];
        double hl = ha;
        while (xr - xl > kBisectWidth) {
            const double mid = 0.5 * (xl + xr);
            const double hm = h(mid);
            if (hm == 0.0) {
                xl = xr = mid;
                break;
            }
            if ((hl < 0.0) == (hm < 0.0)) {
                xl = mid;
                hl = hm;
            } else {
                xr = mid;
            }
        }
        const double root = 0.5 * (xl + xr);
        candidates.push_back({root, std::abs(h(root))});
    }
    if (values.back() == 0.0) candidates.push_back({grid.back(), 0.0});

    if (candidates.empty()) {
        // No sign change on the grid: fail soft with the |h| argmin.
        std::size_t best = 0;
        for (std::size_t i = 1; i < values.size(); ++i) {
            if (std::abs(values[i]) < std::abs(values[best])) best = i;
        }
        return {grid[best], true};
    }

    const double midpoint = 0.5 * (a + b);
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        const auto& cb = candidates[best];
        if (c.abs_h < cb.abs_h ||
            (c.abs_h == cb.abs_h &&
             std::abs(c.m - midpoint) < std::abs(cb.m - midpoint))) {
            best = i;
        }
    }
    return {candidates[best].m, false};
}

KdTree build_tree(const SketchTensor& sketch, int depth, double leaf_floor) {
    if (depth < 1) throw std::invalid_argument("tree depth must be at least 1");
    if (!sketch.standardized) throw std::invalid_argument("build_tree requires a standardized sketch");
    if (depth >= 63) throw std::invalid_argument("tree depth too large");
    if (sketch.count > 0) {
        const double floor = leaf_floor >= 0.0 ? leaf_floor : 10.0 / static_cast<double>(sketch.count);
        if (std::ldexp(1.0, -depth) < floor) {
            throw std::invalid_argument("estimated leaf fraction 2^-D below the configured floor");
        }
    }

    KdTree tree;
    tree.depth = depth;
    tree.p = sketch.p;
    tree.source_count = sketch.count;
    tree.nodes.resize((std::size_t{1} << depth) - 1);

    tree.nodes[0].region = Neighborhood::unit_cube(static_cast<std::size_t>(sketch.p));
    for (int d = 1; d <= depth; ++d) {
        const std::size_t level_begin = (std::size_t{1} << (d - 1)) - 1;
        const std::size_t level_count = std::size_t{1} << (d - 1);
        const int t = cycle_coordinate(d, sketch.p);
        // Nodes within a level only depend on their parents; the solves are
        // pure, so the result is identical for any thread count.
#pragma omp parallel for schedule(dynamic)
        for (std::size_t k = 0; k < level_count; ++k) {
            KdNode& node = tree.nodes[level_begin + k];
            node.depth = d;
            node.cell = k + 1;
            node.split_coord = t;
            const MedianResult median =
                solve_median(sketch, node.region, static_cast<std::size_t>(t));
            node.split_value = median.value;
            node.degenerate = median.degenerate;
            if (d < depth) {
                const std::size_t child = 2 * (level_begin + k) + 1;
                tree.nodes[child].region = node.region.with_upper(static_cast<std::size_t>(t),
                                                                  median.value);
                tree.nodes[child + 1].region = node.region.with_lower(static_cast<std::size_t>(t),
                                                                      median.value);
            }
        }
    }
    return tree;
}

KdTree build_exact_tree(PointsView points, int depth) {
    if (depth < 1) throw std::invalid_argument("tree depth must be at least 1");
    if (depth >= 63) throw std::invalid_argument("tree depth too large");
    if (points.n < (std::uint64_t{1} << depth)) {
        throw std::invalid_argument("insufficient points for the requested depth");
    }
    const int p = static_cast<int>(points.p);

    KdTree tree;
    tree.depth = depth;
    tree.p = p;
    tree.source_count = points.n;
    tree.nodes.resize((std::size_t{1} << depth) - 1);
    tree.nodes[0].region = Neighborhood::unit_cube(points.p);

    // In-region index subsets, rebuilt level by level.
    std::vector<std::vector<std::size_t>> subsets(tree.nodes.size());
    subsets[0].resize(points.n);
    std::iota(subsets[0].begin(), subsets[0].end(), std::size_t{0});

    std::vector<double> keys;
    for (int d = 1; d <= depth; ++d) {
        const std::size_t level_begin = (std::size_t{1} << (d - 1)) - 1;
        const std::size_t level_count = std::size_t{1} << (d - 1);
        const int t = cycle_coordinate(d, p);
        for (std::size_t k = 0; k < level_count; ++k) {
            const std::size_t node_index = level_begin + k;
            KdNode& node = tree.nodes[node_index];
            node.depth = d;
            node.cell = k + 1;
            node.split_coord = t;
            auto& subset = subsets[node_index];

            if (subset.empty()) {
                // No points left in the cell; split at the interval midpoint.
                node.split_value = 0.5 * (node.region.lower[static_cast<std::size_t>(t)] +
                                          node.region.upper[static_cast<std::size_t>(t)]);
                node.degenerate = true;
            } else {
                keys.resize(subset.size());
                for (std::size_t i = 0; i < subset.size(); ++i) {
                    keys[i] = points[subset[i]][static_cast<std::size_t>(t)];
                }
                // Lower median: the floor((n+1)/2)-th order statistic.
                const std::size_t rank = (subset.size() + 1) / 2 - 1;
                std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(rank),
                                 keys.end());
                node.split_value = keys[rank];
                node.degenerate = false;
            }

            if (d < depth) {
                const std::size_t child = 2 * node_index + 1;
                tree.nodes[child].region =
                    node.region.with_upper(static_cast<std::size_t>(t), node.split_value);
                tree.nodes[child + 1].region =
                    node.region.with_lower(static_cast<std::size_t>(t), node.split_value);
                auto& left = subsets[child];
                auto& right = subsets[child + 1];
                for (std::size_t idx : subset) {
                    const double v = points[idx][static_cast<std::size_t>(t)];
                    if (v < node.split_value) {
                        left.push_back(idx);
                    } else if (v > node.split_value) {
                        right.push_back(idx);
                    }
                    // Points on the splitting hyperplane are discarded.
                }
            }
            subset.clear();
            subset.shrink_to_fit();
        }
    }
    return tree;
}

int KdTree::degenerate_count() const {
    int n = 0;
    for (const auto& node : nodes) n += node.degenerate ? 1 : 0;
    return n;
}

std::vector<Neighborhood> KdTree::leaf_regions(int d) const {
    const int use_depth = d == 0 ? depth : d;
    if (use_depth < 1 || use_depth > depth) throw std::invalid_argument("depth out of range");
    std::vector<Neighborhood> out;
    out.reserve(std::size_t{1} << use_depth);
    const std::size_t level_begin = (std::size_t{1} << (use_depth - 1)) - 1;
    const std::size_t level_count = std::size_t{1} << (use_depth - 1);
    for (std::size_t k = 0; k < level_count; ++k) {
        const KdNode& node = nodes[level_begin + k];
        const auto t = static_cast<std::size_t>(node.split_coord);
        out.push_back(node.region.with_upper(t, node.split_value));
        out.push_back(node.region.with_lower(t, node.split_value));
    }
    return out;
}

CellAudit audit_cells(const KdTree& tree, PointsView points, int depth) {
    const int use_depth = depth == 0 ? tree.depth : depth;
    if (use_depth < 1 || use_depth > tree.depth) throw std::invalid_argument("depth out of range");
    if (points.p != static_cast<std::size_t>(tree.p)) {
        throw std::invalid_argument("point/tree dimension mismatch");
    }

    CellAudit audit;
    audit.depth = use_depth;
    audit.total = points.n;
    const std::size_t leaves = std::size_t{1} << use_depth;
    audit.counts.assign(leaves, 0);

    std::uint64_t discarded = 0;
#pragma omp parallel reduction(+ : discarded)
    {
        std::vector<std::uint64_t> local(leaves, 0);
#pragma omp for schedule(static) nowait
        for (std::size_t i = 0; i < points.n; ++i) {
            const auto x = points[i];
            std::size_t node = 0;
            bool dropped = false;
            for (int d = 1; d <= use_depth; ++d) {
                const KdNode& nd = tree.nodes[node];
                const double v = x[static_cast<std::size_t>(nd.split_coord)];
                if (v == nd.split_value) {
                    dropped = true;
                    break;
                }
                node = 2 * node + (v < nd.split_value ? 1 : 2);
            }
            if (dropped) {
                ++discarded;
            } else {
                // After descending `use_depth` levels, `node` indexes the
                // level just past the audited one; recover the leaf slot.
                local[node - ((std::size_t{1} << use_depth) - 1)] += 1;
            }
        }
#pragma omp critical
        for (std::size_t k = 0; k < leaves; ++k) audit.counts[k] += local[k];
    }
    audit.discarded = discarded;

    const double ideal = static_cast<double>(points.n) / static_cast<double>(leaves);
    audit.log2_counts.resize(leaves);
    audit.rel_deviation.resize(leaves);
    audit.frac_of_n.resize(leaves);
    for (std::size_t k = 0; k < leaves; ++k) {
        const double c = static_cast<double>(audit.counts[k]);
        audit.log2_counts[k] = c > 0.0 ? std::log2(c) : -std::numeric_limits<double>::infinity();
        audit.rel_deviation[k] = (c - ideal) / ideal;
        audit.frac_of_n[k] = (c - ideal) / static_cast<double>(points.n);
    }
    return audit;
}

double CellAudit::max_abs_rel_deviation() const {
    double m = 0.0;
    for (double v : rel_deviation) m = std::max(m, std::abs(v));
    return m;
}

double CellAudit::mean_abs_rel_deviation() const {
    if (rel_deviation.empty()) return 0.0;
    double s = 0.0;
    for (double v : rel_deviation) s += std::abs(v);
    return s / static_cast<double>(rel_deviation.size());
}

}  // namespace kdsketch
