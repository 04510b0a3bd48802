// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <vector>

#include "kdsketch/sketch.hpp"
#include "kdsketch/types.hpp"

namespace kdsketch {

struct KdNode {
    int depth = 0;               // 1-based level
    std::uint64_t cell = 0;      // 1-based index within the level
    int split_coord = 0;         // 0-based coordinate t
    double split_value = 0.0;    // strictly inside the region's t-interval
    bool degenerate = false;     // no sign change found; value is the |h| argmin
    Neighborhood region;         // the box this node splits (not serialized)
};

/// Balanced k-d tree of depth D: 2^D - 1 internal nodes in level order,
/// node i has children 2i+1 and 2i+2. Coordinates cycle with depth:
/// t = (d-1) mod p.
struct KdTree {
    int depth = 0;
    int p = 0;
    std::uint64_t source_count = 0;  // points behind the sketch (0 if unknown)
    std::vector<KdNode> nodes;

    [[nodiscard]] std::size_t node_count() const { return nodes.size(); }
    [[nodiscard]] int degenerate_count() const;
    /// The 2^d leaf boxes of the tree truncated at depth d (default: full depth).
    [[nodiscard]] std::vector<Neighborhood> leaf_regions(int d = 0) const;
};

struct MedianResult {
    double value = 0.0;
    bool degenerate = false;
};

/// Solve for the approximate conditional median along coordinate t inside
/// nb: the m equalizing the approximate counts of the two sub-boxes.
/// Scans h on a 256-point grid, bisects every sign-change bracket to a
/// width of 1e-12, and returns the candidate minimizing |h|. When no sign
/// change exists the grid argmin of |h| is returned with degenerate set.
MedianResult solve_median(const SketchTensor& sketch, const Neighborhood& nb,
                          std::size_t t_coord);

/// Level-order construction of the depth-D tree from the sketch alone.
/// Nodes within a level are solved independently (parallelized; output is
/// identical regardless of thread count). leaf_floor < 0 uses the default
/// 10/count when the sketch count is known.
KdTree build_tree(const SketchTensor& sketch, int depth, double leaf_floor = -1.0);

/// Canonical construction: exact lower-median splits by selection on the
/// in-region subset per node. This is the multi-pass oracle baseline.
KdTree build_exact_tree(PointsView points, int depth);

/// Exact per-leaf recount with strict inequalities; points on any split
/// hyperplane are discarded and reported.
struct CellAudit {
    int depth = 0;
    std::uint64_t total = 0;      // points presented
    std::uint64_t discarded = 0;  // boundary hits
    std::vector<std::uint64_t> counts;
    std::vector<double> log2_counts;
    std::vector<double> rel_deviation;  // (count - ideal) / ideal, ideal = n / 2^d
    std::vector<double> frac_of_n;      // (count - ideal) / n

    [[nodiscard]] double max_abs_rel_deviation() const;
    [[nodiscard]] double mean_abs_rel_deviation() const;
};

CellAudit audit_cells(const KdTree& tree, PointsView points, int depth = 0);

}  // namespace kdsketch
