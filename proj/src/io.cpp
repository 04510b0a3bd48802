// SPDX-License-Identifier: MIT
#include "kdsketch/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace kdsketch {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// All writers go through a temp file renamed into place, so a failed
// command never leaves partial output behind.
class AtomicWriter {
public:
    explicit AtomicWriter(const std::string& path)
        : path_(path), tmp_(path + ".tmp"), out_(tmp_, std::ios::binary) {
        if (!out_) throw DataError(path + ": cannot open for writing");
    }

    std::ofstream& stream() { return out_; }

    void commit() {
        out_.flush();
        if (!out_) throw DataError(path_ + ": write failed");
        out_.close();
        std::error_code ec;
        std::filesystem::rename(tmp_, path_, ec);
        if (ec) throw DataError(path_ + ": rename failed: " + ec.message());
        committed_ = true;
    }

    ~AtomicWriter() {
        if (!committed_) {
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }

private:
    std::string path_;
    std::string tmp_;
    std::ofstream out_;
    bool committed_ = false;
};

struct TensorHeader {
    std::string kind;
    int p = 0;
    AccuracyParameter jbar;
    std::uint64_t n = 0;
    bool standardized = false;
    FileMode mode = FileMode::binary;
};

void write_tensor_file(const std::string& path, const TensorHeader& h,
                       std::span<const double> values) {
    AtomicWriter writer(path);
    auto& out = writer.stream();
    out << "kdsketch-tensor v1 kind=" << h.kind << " p=" << h.p << " Jbar=" << h.jbar.to_string()
        << " n=" << h.n << " standardized=" << (h.standardized ? 1 : 0)
        << " mode=" << (h.mode == FileMode::binary ? "bin" : "csv") << "\n";
    if (h.mode == FileMode::binary) {
        static_assert(sizeof(double) == 8);
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    } else {
        for (double v : values) out << format_double(v) << "\n";
    }
    writer.commit();
}

TensorHeader parse_tensor_header(const std::string& path, const std::string& line) {
    std::istringstream ss(line);
    std::string magic, version;
    ss >> magic >> version;
    if (magic != "kdsketch-tensor" || version != "v1") {
        throw DataError(path + ":1: not a kdsketch tensor file");
    }
    TensorHeader h;
    std::string token;
    while (ss >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw DataError(path + ":1: malformed header token " + token);
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        try {
            if (key == "kind") {
                h.kind = value;
            } else if (key == "p") {
                h.p = std::stoi(value);
            } else if (key == "Jbar") {
                h.jbar = AccuracyParameter::parse(value);
            } else if (key == "n") {
                h.n = std::stoull(value);
            } else if (key == "standardized") {
                h.standardized = value == "1";
            } else if (key == "mode") {
                if (value == "bin") {
                    h.mode = FileMode::binary;
                } else if (value == "csv") {
                    h.mode = FileMode::csv;
                } else {
                    throw DataError(path + ":1: unknown payload mode " + value);
                }
            } else {
                throw DataError(path + ":1: unknown header key " + key);
            }
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError(path + ":1: bad header value for " + key + ": " + e.what());
        }
    }
    if (h.kind.empty() || h.jbar.parts.empty()) throw DataError(path + ":1: incomplete header");
    if (h.kind != "transform" && h.p < 1) throw DataError(path + ":1: incomplete header");
    return h;
}

std::pair<TensorHeader, std::vector<double>> read_tensor_file(const std::string& path,
                                                              const std::string& expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open");
    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError(path + ": empty file");
    const TensorHeader h = parse_tensor_header(path, header_line);
    if (h.kind != expected_kind) {
        throw DataError(path + ": expected a " + expected_kind + " file, found kind=" + h.kind);
    }

    std::size_t count = h.jbar.basis_size();
    if (expected_kind == "transform") {
        count *= h.jbar.basis_size();
    } else {
        std::size_t total = 1;
        for (int l = 0; l < h.p; ++l) {
            if (total > (std::size_t{1} << 27) / count) {
                throw DataError(path + ":1: tensor dimensions exceed the supported size");
            }
            total *= count;
        }
        count = total;
    }

    std::vector<double> values(count);
    if (h.mode == FileMode::binary) {
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
            throw DataError(path + ": truncated payload");
        }
    } else {
        std::string line;
        for (std::size_t i = 0; i < count; ++i) {
            if (!std::getline(in, line)) {
                throw DataError(path + ":" + std::to_string(i + 2) + ": truncated payload");
            }
            char* end = nullptr;
            values[i] = std::strtod(line.c_str(), &end);
            if (end == line.c_str()) {
                throw DataError(path + ":" + std::to_string(i + 2) + ": bad value '" + line + "'");
            }
        }
    }
    return {h, std::move(values)};
}

}  // namespace

void write_sketch(const std::string& path, const SketchTensor& t, FileMode mode) {
    TensorHeader h;
    h.kind = "sketch";
    h.p = t.p;
    h.jbar = AccuracyParameter({t.order});
    h.n = t.count;
    h.standardized = t.standardized;
    h.mode = mode;
    write_tensor_file(path, h, {t.values.data(), t.values.size()});
}

SketchTensor read_sketch(const std::string& path) {
    auto [h, values] = read_tensor_file(path, "sketch");
    SketchTensor t;
    t.p = h.p;
    t.order = static_cast<int>(h.jbar.total());
    t.count = h.n;
    t.standardized = h.standardized;
    t.values = Tensor(t.basis_size(), static_cast<std::size_t>(t.p));
    for (std::size_t i = 0; i < values.size(); ++i) t.values[i] = values[i];
    return t;
}

void write_factorized(const std::string& path, const FactorizedTensor& t, FileMode mode) {
    TensorHeader h;
    h.kind = "factorized";
    h.p = t.p;
    h.jbar = t.acc;
    h.n = t.count;
    h.standardized = t.standardized;
    h.mode = mode;
    write_tensor_file(path, h, {t.values.data(), t.values.size()});
}

FactorizedTensor read_factorized(const std::string& path) {
    auto [h, values] = read_tensor_file(path, "factorized");
    FactorizedTensor t;
    t.acc = h.jbar;
    t.p = h.p;
    t.count = h.n;
    t.standardized = h.standardized;
    t.values = Tensor(t.acc.basis_size(), static_cast<std::size_t>(t.p));
    for (std::size_t i = 0; i < values.size(); ++i) t.values[i] = values[i];
    return t;
}

void write_transform(const std::string& path, const Transform1D& tf, FileMode mode) {
    TensorHeader h;
    h.kind = "transform";
    h.p = 1;
    h.jbar = tf.acc;
    h.n = 0;
    h.mode = mode;
    write_tensor_file(path, h, tf.matrix);
}

Transform1D read_transform(const std::string& path) {
    auto [h, values] = read_tensor_file(path, "transform");
    Transform1D tf;
    tf.acc = h.jbar;
    tf.matrix = std::move(values);
    return tf;
}

void write_tree(const std::string& path, const KdTree& tree) {
    AtomicWriter writer(path);
    auto& out = writer.stream();
    out << "kdsketch-tree v1 D=" << tree.depth << " p=" << tree.p << " n=" << tree.source_count
        << "\n";
    for (const auto& node : tree.nodes) {
        out << node.depth << ',' << node.cell << ',' << (node.split_coord + 1) << ','
            << format_double(node.split_value) << ',' << (node.degenerate ? 1 : 0) << "\n";
    }
    writer.commit();
}

KdTree read_tree(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    KdTree tree;
    {
        std::istringstream ss(line);
        std::string magic, version, tok;
        ss >> magic >> version;
        if (magic != "kdsketch-tree" || version != "v1") {
            throw DataError(path + ":1: not a kdsketch tree file");
        }
        while (ss >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw DataError(path + ":1: malformed header token " + tok);
            const std::string key = tok.substr(0, eq);
            const std::string value = tok.substr(eq + 1);
            if (key == "D") {
                tree.depth = std::stoi(value);
            } else if (key == "p") {
                tree.p = std::stoi(value);
            } else if (key == "n") {
                tree.source_count = std::stoull(value);
            } else {
                throw DataError(path + ":1: unknown header key " + key);
            }
        }
    }
    if (tree.depth < 1 || tree.depth >= 63 || tree.p < 1) {
        throw DataError(path + ":1: bad tree header");
    }
    const std::size_t node_count = (std::size_t{1} << tree.depth) - 1;
    tree.nodes.resize(node_count);
    tree.nodes[0].region = Neighborhood::unit_cube(static_cast<std::size_t>(tree.p));
    for (std::size_t i = 0; i < node_count; ++i) {
        if (!std::getline(in, line)) {
            throw DataError(path + ": truncated: expected " + std::to_string(node_count) + " nodes");
        }
        const int lineno = static_cast<int>(i) + 2;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 5) {
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 5 fields");
        }
        KdNode& node = tree.nodes[i];
        try {
            node.depth = std::stoi(fields[0]);
            node.cell = std::stoull(fields[1]);
            node.split_coord = std::stoi(fields[2]) - 1;
            node.split_value = std::stod(fields[3]);
            node.degenerate = fields[4] == "1";
        } catch (const std::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        const int expected_depth = static_cast<int>(std::bit_width(i + 1));
        const std::uint64_t expected_cell = (i + 1) - (std::uint64_t{1} << (expected_depth - 1)) + 1;
        if (node.depth != expected_depth || node.cell != expected_cell) {
            throw DataError(path + ":" + std::to_string(lineno) + ": node out of level order");
        }
        if (node.split_coord < 0 || node.split_coord >= tree.p) {
            throw DataError(path + ":" + std::to_string(lineno) + ": split coordinate out of range");
        }
        const auto t = static_cast<std::size_t>(node.split_coord);
        if (!(node.region.lower[t] < node.split_value && node.split_value < node.region.upper[t])) {
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": split value outside the node region");
        }
        if (node.depth < tree.depth) {
            tree.nodes[2 * i + 1].region = node.region.with_upper(t, node.split_value);
            tree.nodes[2 * i + 2].region = node.region.with_lower(t, node.split_value);
        }
    }
    return tree;
}

void write_audit_csv(std::ostream& out, const CellAudit& audit) {
    out << "depth,leaf_index,count,log2_count,rel_deviation\n";
    for (std::size_t k = 0; k < audit.counts.size(); ++k) {
        out << audit.depth << ',' << (k + 1) << ',' << audit.counts[k] << ','
            << format_double(audit.log2_counts[k]) << ','
            << format_double(audit.rel_deviation[k]) << "\n";
    }
}

void write_audit_csv(const std::string& path, const CellAudit& audit) {
    AtomicWriter writer(path);
    write_audit_csv(writer.stream(), audit);
    writer.commit();
}

PointSet read_points_csv(const std::string& path, int expected_dim) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open");
    std::string line;
    int lineno = 0;
    std::size_t dim = expected_dim > 0 ? static_cast<std::size_t>(expected_dim) : 0;
    std::vector<double> coords;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::size_t fields = 0;
        const char* cursor = line.c_str();
        while (true) {
            char* end = nullptr;
            const double v = std::strtod(cursor, &end);
            if (end == cursor) {
                throw DataError(path + ":" + std::to_string(lineno) + ": bad coordinate near '" +
                                std::string(cursor).substr(0, 16) + "'");
            }
            if (!(v > 0.0 && v < 1.0)) {
                throw DataError(path + ":" + std::to_string(lineno) + ": coordinate " +
                                format_double(v) + " outside (0,1)");
            }
            coords.push_back(v);
            ++fields;
            cursor = end;
            while (*cursor == ' ' || *cursor == '\t' || *cursor == '\r') ++cursor;
            if (*cursor == '\0') break;
            if (*cursor != ',') {
                throw DataError(path + ":" + std::to_string(lineno) + ": expected ',' near '" +
                                std::string(cursor).substr(0, 16) + "'");
            }
            ++cursor;
        }
        if (dim == 0) {
            dim = fields;
        } else if (fields != dim) {
            throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(dim) + " coordinates, found " + std::to_string(fields));
        }
    }
    if (coords.empty()) throw DataError(path + ": no points");
    return PointSet(dim, std::move(coords));
}

void write_points_csv(const std::string& path, PointsView points) {
    AtomicWriter writer(path);
    auto& out = writer.stream();
    for (std::size_t i = 0; i < points.n; ++i) {
        const auto x = points[i];
        for (std::size_t l = 0; l < points.p; ++l) {
            if (l > 0) out << ',';
            out << format_double(x[l]);
        }
        out << "\n";
    }
    writer.commit();
}

}  // namespace kdsketch
