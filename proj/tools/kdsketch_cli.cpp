// SPDX-License-Identifier: MIT
//
// Command-line surface for the sketch-based k-d tree pipeline:
//   sketch          one-pass sketch over sharded CSV files or generated data
//   transform       standalone factorized-to-standard basis transform
//   build           k-d tree from a standard sketch file
//   audit           exact per-leaf recount of a tree against data files
//   exact           canonical exact-median tree (the multi-pass baseline)
//   accuracy-study  cell-count accuracy study CSV
//   runtime-study   phase timing study CSV
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kdsketch/eval.hpp"
#include "kdsketch/factorized.hpp"
#include "kdsketch/io.hpp"
#include "kdsketch/sketch.hpp"
#include "kdsketch/tree.hpp"

namespace {

using kdsketch::AccuracyParameter;
using kdsketch::FileMode;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct SketchArgs {
    std::vector<std::string> inputs;
    std::string config;
    std::string output;
    std::string jbar;
    std::string format = "bin";
    int p = 0;
    int shards = 0;
    int parallelism = 0;
    std::optional<std::uint64_t> seed;
};

FileMode parse_mode(const std::string& format) {
    if (format == "bin") return FileMode::binary;
    if (format == "csv") return FileMode::csv;
    throw CLI::ValidationError("--format must be bin or csv");
}

// Load either the listed CSV files (one shard per file) or a generated,
// scaled dataset described by a config file. Returns the owning point
// sets plus shard views into them.
struct LoadedData {
    std::vector<kdsketch::PointSet> owners;
    std::vector<kdsketch::Shard> shards;
    std::uint64_t total = 0;
};

LoadedData load_inputs(const SketchArgs& args) {
    LoadedData data;
    if (!args.inputs.empty()) {
        for (const auto& path : args.inputs) {
            data.owners.push_back(kdsketch::read_points_csv(path, args.p));
        }
        // Re-split when a single file is given with an explicit shard count.
        if (data.owners.size() == 1 && args.shards > 1) {
            data.shards = kdsketch::split_shards(view(data.owners[0]), args.shards);
        } else {
            int id = 0;
            for (const auto& owner : data.owners) {
                data.shards.push_back(kdsketch::Shard{id++, view(owner)});
            }
        }
    } else {
        if (args.config.empty()) {
            throw CLI::ValidationError("sketch needs --input files or a generator --config");
        }
        if (!args.seed.has_value()) {
            throw CLI::ValidationError("generator-backed commands require --seed");
        }
        kdsketch::ExperimentConfig cfg = kdsketch::load_config(args.config);
        const double rho = cfg.rho.front();
        const auto raw = kdsketch::generate_correlated_normal(cfg.n, cfg.p, rho, *args.seed);
        auto [pts, rec] = kdsketch::scale_to_unit(raw);
        data.owners.push_back(std::move(pts));
        const int shard_count = args.shards > 0 ? args.shards : cfg.shards;
        data.shards = kdsketch::split_shards(view(data.owners[0]), shard_count);
    }
    for (const auto& shard : data.shards) data.total += shard.points.n;
    return data;
}

int cmd_sketch(const SketchArgs& args) {
    const AccuracyParameter acc = AccuracyParameter::parse(args.jbar);
    const FileMode mode = parse_mode(args.format);
    const LoadedData data = load_inputs(args);
    const int p = args.p > 0 ? args.p : static_cast<int>(data.shards.front().points.p);

    kdsketch::PhaseTimings timings;
    const auto factorized = kdsketch::map_reduce_build_factorized(
        data.shards, acc, p, args.parallelism, &timings);

    const auto transform_start = std::chrono::steady_clock::now();
    const auto transform = kdsketch::build_transform_1d(acc);
    const auto standard = kdsketch::recover_standard(factorized, transform);
    timings.transform_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - transform_start).count();

    kdsketch::write_factorized(args.output + ".fact", factorized, mode);
    kdsketch::write_transform(args.output + ".transform", transform, mode);
    kdsketch::write_sketch(args.output + ".sketch", standard, mode);

    std::printf("sketched %llu points over %zu shards (p=%d, Jbar=%s)\n",
                static_cast<unsigned long long>(data.total), data.shards.size(), p,
                acc.to_string().c_str());
    std::printf("phase seconds: map=%.6f reduce=%.6f transform=%.6f\n", timings.map_s,
                timings.reduce_s, timings.transform_s);
    return 0;
}

int cmd_transform(const std::string& jbar, const std::string& output, const std::string& format) {
    const AccuracyParameter acc = AccuracyParameter::parse(jbar);
    const auto transform = kdsketch::build_transform_1d(acc);
    kdsketch::write_transform(output, transform, parse_mode(format));
    std::printf("transform Jbar=%s residual=%.3e\n", acc.to_string().c_str(), transform.residual);
    return 0;
}

int cmd_build(const std::string& input, int depth, const std::string& output) {
    kdsketch::SketchTensor sketch = kdsketch::read_sketch(input);
    if (!sketch.standardized) sketch = kdsketch::standardize(std::move(sketch));
    const auto tree = kdsketch::build_tree(sketch, depth);
    kdsketch::write_tree(output, tree);
    std::printf("built depth-%d tree over p=%d (%d degenerate nodes)\n", tree.depth, tree.p,
                tree.degenerate_count());
    return 0;
}

int cmd_audit(const std::string& tree_path, const std::vector<std::string>& data_paths, int depth,
              const std::string& output) {
    const kdsketch::KdTree tree = kdsketch::read_tree(tree_path);
    std::vector<double> coords;
    std::size_t n = 0;
    for (const auto& path : data_paths) {
        const auto pts = kdsketch::read_points_csv(path, tree.p);
        coords.insert(coords.end(), pts.raw().begin(), pts.raw().end());
        n += pts.size();
    }
    const kdsketch::PointsView all{coords.data(), n, static_cast<std::size_t>(tree.p)};
    const auto audit = kdsketch::audit_cells(tree, all, depth);
    kdsketch::write_audit_csv(output, audit);
    std::printf("audited %llu points at depth %d: discarded=%llu max|rel|=%.6f\n",
                static_cast<unsigned long long>(audit.total), audit.depth,
                static_cast<unsigned long long>(audit.discarded), audit.max_abs_rel_deviation());
    return 0;
}

int cmd_exact(const std::vector<std::string>& data_paths, int depth, const std::string& output,
              int p_flag) {
    std::vector<double> coords;
    std::size_t n = 0;
    std::size_t p = p_flag > 0 ? static_cast<std::size_t>(p_flag) : 0;
    for (const auto& path : data_paths) {
        const auto pts = kdsketch::read_points_csv(path, static_cast<int>(p));
        if (p == 0) p = pts.dim();
        coords.insert(coords.end(), pts.raw().begin(), pts.raw().end());
        n += pts.size();
    }
    const kdsketch::PointsView all{coords.data(), n, p};
    const auto tree = kdsketch::build_exact_tree(all, depth);
    kdsketch::write_tree(output, tree);
    std::printf("built exact depth-%d tree over %zu points\n", tree.depth, n);
    return 0;
}

int cmd_study(const std::string& config_path, const std::string& output, bool runtime) {
    const auto cfg = kdsketch::load_config(config_path);
    std::ofstream out(output + ".tmp", std::ios::binary);
    if (!out) throw kdsketch::DataError(output + ": cannot open for writing");
    if (runtime) {
        kdsketch::run_runtime_study(cfg, out);
    } else {
        kdsketch::run_accuracy_study(cfg, out);
    }
    out.close();
    std::filesystem::rename(output + ".tmp", output);
    std::printf("%s study written to %s\n", runtime ? "runtime" : "accuracy", output.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Balanced k-d trees from one-pass trigonometric sketches"};
    app.require_subcommand(1);

    SketchArgs sketch_args;
    auto* sketch = app.add_subcommand("sketch", "Build sketch + transform + standard tensor files");
    sketch->add_option("--input", sketch_args.inputs, "Point CSV files (one shard per file)");
    sketch->add_option("--config", sketch_args.config, "Generator config (flat key=value)");
    sketch->add_option("--output", sketch_args.output, "Output basename")->required();
    sketch->add_option("--Jbar", sketch_args.jbar, "Accuracy factors, comma separated")->required();
    sketch->add_option("--p", sketch_args.p, "Point dimension");
    sketch->add_option("--shards", sketch_args.shards, "Shard count when re-splitting one input");
    sketch->add_option("--parallelism", sketch_args.parallelism, "Worker threads (0 = default)");
    sketch->add_option("--seed", sketch_args.seed, "RNG seed (required with --config)");
    sketch->add_option("--format", sketch_args.format, "bin or csv");

    std::string tf_jbar, tf_output, tf_format = "bin";
    auto* transform = app.add_subcommand("transform", "Build the 1D basis transform");
    transform->add_option("--Jbar", tf_jbar, "Accuracy factors")->required();
    transform->add_option("--output", tf_output, "Output file")->required();
    transform->add_option("--format", tf_format, "bin or csv");

    std::string build_input, build_output;
    int build_depth = 0;
    auto* build = app.add_subcommand("build", "Build a k-d tree from a sketch file");
    build->add_option("--input", build_input, "Standard sketch file")->required();
    build->add_option("--depth", build_depth, "Tree depth D")->required();
    build->add_option("--output", build_output, "Tree file")->required();

    std::string audit_tree, audit_output;
    std::vector<std::string> audit_data;
    int audit_depth = 0;
    auto* audit = app.add_subcommand("audit", "Audit per-leaf counts of a tree");
    audit->add_option("--input", audit_tree, "Tree file")->required();
    audit->add_option("--data", audit_data, "Point CSV files")->required();
    audit->add_option("--depth", audit_depth, "Audit depth (default: tree depth)");
    audit->add_option("--output", audit_output, "Audit CSV")->required();

    std::vector<std::string> exact_inputs;
    std::string exact_output;
    int exact_depth = 0, exact_p = 0;
    auto* exact = app.add_subcommand("exact", "Build the exact-median tree");
    exact->add_option("--input", exact_inputs, "Point CSV files")->required();
    exact->add_option("--depth", exact_depth, "Tree depth D")->required();
    exact->add_option("--p", exact_p, "Point dimension");
    exact->add_option("--output", exact_output, "Tree file")->required();

    std::string acc_config, acc_output;
    auto* acc_study = app.add_subcommand("accuracy-study", "Run the cell-count accuracy study");
    acc_study->add_option("--config", acc_config, "Experiment config")->required();
    acc_study->add_option("--output", acc_output, "CSV output")->required();

    std::string run_config, run_output;
    auto* run_study = app.add_subcommand("runtime-study", "Run the phase timing study");
    run_study->add_option("--config", run_config, "Experiment config")->required();
    run_study->add_option("--output", run_output, "CSV output")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (sketch->parsed()) return cmd_sketch(sketch_args);
        if (transform->parsed()) return cmd_transform(tf_jbar, tf_output, tf_format);
        if (build->parsed()) return cmd_build(build_input, build_depth, build_output);
        if (audit->parsed()) return cmd_audit(audit_tree, audit_data, audit_depth, audit_output);
        if (exact->parsed()) return cmd_exact(exact_inputs, exact_depth, exact_output, exact_p);
        if (acc_study->parsed()) return cmd_study(acc_config, acc_output, false);
        if (run_study->parsed()) return cmd_study(run_config, run_output, true);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const kdsketch::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
