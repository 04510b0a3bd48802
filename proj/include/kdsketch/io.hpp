// SPDX-License-Identifier: MIT
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "kdsketch/factorized.hpp"
#include "kdsketch/sketch.hpp"
#include "kdsketch/tree.hpp"
#include "kdsketch/types.hpp"

namespace kdsketch {

/// Raised on malformed or inconsistent input files; what() carries
/// file and line context.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tensor container payload encoding: raw little-endian doubles or
/// full-precision decimal, one value per line.
enum class FileMode { binary, csv };

// Tensor container: one text header line
//   kdsketch-tensor v1 kind=<sketch|factorized|transform> p=<p>
//     Jbar=<J1,...> n=<count> standardized=<0|1> mode=<bin|csv>
// followed by the flat values in mixed-radix order.
void write_sketch(const std::string& path, const SketchTensor& t, FileMode mode);
SketchTensor read_sketch(const std::string& path);

void write_factorized(const std::string& path, const FactorizedTensor& t, FileMode mode);
FactorizedTensor read_factorized(const std::string& path);

void write_transform(const std::string& path, const Transform1D& tf, FileMode mode);
Transform1D read_transform(const std::string& path);

// Tree file: header "kdsketch-tree v1 D=<D> p=<p> n=<count>", then one
// level-order record "d,k,t,m,degenerate" per node with 1-based d, k, t
// and full-precision decimal m. Regions are reconstructed, not stored.
void write_tree(const std::string& path, const KdTree& tree);
KdTree read_tree(const std::string& path);

/// Audit CSV: depth,leaf_index,count,log2_count,rel_deviation
void write_audit_csv(std::ostream& out, const CellAudit& audit);
void write_audit_csv(const std::string& path, const CellAudit& audit);

/// Point files: one point per line, comma-separated coordinates in (0,1).
PointSet read_points_csv(const std::string& path, int expected_dim = 0);
void write_points_csv(const std::string& path, PointsView points);

}  // namespace kdsketch
