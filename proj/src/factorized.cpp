// SPDX-License-Identifier: MIT
#include "kdsketch/factorized.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "accumulate.hpp"
#include "kdsketch/basis.hpp"

namespace kdsketch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr double kNodeMargin = 1e-3;       // keeps sample nodes inside (0,1)
constexpr double kResidualBound = 1e-8;
constexpr double kConditionLimit = 1e12;

std::vector<double> chebyshev_nodes(std::size_t count) {
    std::vector<double> nodes(count);
    for (std::size_t m = 0; m < count; ++m) {
        const double c = std::cos(std::numbers::pi * (2.0 * static_cast<double>(m) + 1.0) /
                                  (2.0 * static_cast<double>(count)));
        nodes[m] = 0.5 * (1.0 + c) * (1.0 - 2.0 * kNodeMargin) + kNodeMargin;
    }
    return nodes;
}

// Sampled factorized-basis matrix: row m holds ctilde(z_m).
Eigen::MatrixXd sample_factorized(const AccuracyParameter& acc, const std::vector<double>& nodes) {
    const std::size_t dim = acc.basis_size();
    Eigen::MatrixXd b(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(dim));
    std::vector<double> row(dim);
    for (std::size_t m = 0; m < nodes.size(); ++m) {
        factorized_basis_vector(nodes[m], acc, row);
        for (std::size_t i = 0; i < dim; ++i) {
            b(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = row[i];
        }
    }
    return b;
}

Eigen::MatrixXd sample_standard(int order, const std::vector<double>& nodes) {
    const std::size_t dim = 2 * static_cast<std::size_t>(order) + 1;
    Eigen::MatrixXd c(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(dim));
    std::vector<double> row(dim);
    for (std::size_t m = 0; m < nodes.size(); ++m) {
        eval_c_vector(nodes[m], order, row);
        for (std::size_t j = 0; j < dim; ++j) {
            c(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = row[j];
        }
    }
    return c;
}

}  // namespace

AccuracyParameter::AccuracyParameter(std::vector<int> factors) : parts(std::move(factors)) {
    if (parts.empty()) throw std::invalid_argument("accuracy parameter needs at least one factor");
    for (int f : parts) {
        if (f < 1) throw std::invalid_argument("accuracy factors must be positive");
    }
    if (total() > (1 << 20)) throw std::invalid_argument("accuracy parameter too large");
}

AccuracyParameter AccuracyParameter::parse(const std::string& text) {
    std::vector<int> factors;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        int value = 0;
        try {
            value = std::stoi(item, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("cannot parse accuracy factor '" + item + "'");
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (used != item.size()) {
            throw std::invalid_argument("cannot parse accuracy factor '" + item + "'");
        }
        factors.push_back(value);
    }
    return AccuracyParameter(std::move(factors));
}

long long AccuracyParameter::total() const {
    long long j = 1;
    for (int f : parts) j *= f;
    return j;
}

std::size_t AccuracyParameter::basis_size() const {
    return 2 * static_cast<std::size_t>(total()) + 1;
}

long long AccuracyParameter::prefix_product(int k) const {
    if (k < 1 || k > this->k()) throw std::invalid_argument("prefix index out of range");
    long long l = 1;
    for (int i = 0; i < k; ++i) l *= parts[static_cast<std::size_t>(i)];
    return l;
}

std::string AccuracyParameter::to_string(char sep) const {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out.push_back(sep);
        out += std::to_string(parts[i]);
    }
    return out;
}

void factorized_basis_vector(double z, const AccuracyParameter& acc, std::span<double> out,
                             TrigTally* tally) {
    if (!(z > 0.0 && z < 1.0)) throw std::domain_error("z must lie strictly in (0,1)");
    const std::size_t dim = acc.basis_size();
    if (out.size() != dim) throw std::invalid_argument("output span has wrong length");
    const int k = acc.k();

    const double cz = std::cos(z);
    const double sz = std::sqrt(1.0 - cz * cz);  // z in (0,1) subset of (0,pi): sin > 0
    std::uint64_t cos_calls = 1;

    // First factor: 1-based index j1 in 1..2J1; odd j1 -> cz^j1,
    // even j1 -> sz * cz^(j1-2). Powers by repeated multiplication.
    const std::size_t first_len = 2 * static_cast<std::size_t>(acc.parts[0]);
    std::vector<double> first(first_len);
    {
        double odd_pow = cz;  // cz^1
        double even_pow = 1.0;  // cz^0
        for (std::size_t d = 0; d < first_len; ++d) {
            const std::size_t j1 = d + 1;
            if (j1 % 2 == 1) {
                first[d] = odd_pow;
                odd_pow *= cz * cz;
            } else {
                first[d] = sz * even_pow;
                even_pow *= cz * cz;
            }
        }
    }

    // Later factors: index j in 1..J_k maps to cos(2 L_{k-1} z)^(j-1).
    std::vector<std::vector<double>> later;
    later.reserve(static_cast<std::size_t>(k > 1 ? k - 1 : 0));
    for (int kk = 2; kk <= k; ++kk) {
        const double ck = std::cos(2.0 * static_cast<double>(acc.prefix_product(kk - 1)) * z);
        ++cos_calls;
        std::vector<double> f(static_cast<std::size_t>(acc.parts[static_cast<std::size_t>(kk - 1)]));
        double pw = 1.0;
        for (double& v : f) {
            v = pw;
            pw *= ck;
        }
        later.push_back(std::move(f));
    }

    out[0] = 1.0;
    // Row-major odometer over (j1, j2, ..., jK), last index fastest.
    std::size_t flat = 1;
    std::vector<std::size_t> digit(static_cast<std::size_t>(k), 0);
    while (true) {
        double value = first[digit[0]];
        for (int kk = 1; kk < k; ++kk) {
            value *= later[static_cast<std::size_t>(kk - 1)][digit[static_cast<std::size_t>(kk)]];
        }
        out[flat++] = value;
        int l = k;
        while (l-- > 0) {
            const std::size_t range = (l == 0) ? first_len
                                               : later[static_cast<std::size_t>(l - 1)].size();
            if (++digit[static_cast<std::size_t>(l)] < range) break;
            digit[static_cast<std::size_t>(l)] = 0;
        }
        if (l < 0) break;
    }
    if (flat != dim) throw std::logic_error("factorized index enumeration out of step");

    if (tally != nullptr) tally->cos_calls += cos_calls;
}

void factorized_point_basis(std::span<const double> x, const AccuracyParameter& acc,
                            std::span<double> out, TrigTally* tally) {
    const std::size_t dim = acc.basis_size();
    if (out.size() != x.size() * dim) throw std::invalid_argument("output span has wrong length");
    for (std::size_t l = 0; l < x.size(); ++l) {
        factorized_basis_vector(x[l], acc, {out.data() + l * dim, dim}, tally);
    }
}

Transform1D build_transform_1d(const AccuracyParameter& acc) {
    const std::size_t dim = acc.basis_size();
    const int order = static_cast<int>(acc.total());

    // Solve B a_j = y_j per standard row j, where B samples the factorized
    // basis at the nodes and y_j samples c_j. Row 0 is the exact constant
    // selector since c_0 = ctilde_0 = 1.
    const auto solve_rows = [&](const Eigen::MatrixXd& b,
                                const Eigen::MatrixXd& c) -> Eigen::MatrixXd {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                  static_cast<Eigen::Index>(dim));
        a(0, 0) = 1.0;
        if (b.rows() == b.cols()) {
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
            for (std::size_t j = 1; j < dim; ++j) {
                Eigen::VectorXd y = c.col(static_cast<Eigen::Index>(j));
                Eigen::VectorXd sol = lu.solve(y);
                // Two rounds of iterative refinement with long double residuals.
                for (int round = 0; round < 2; ++round) {
                    Eigen::VectorXd r(y.size());
                    for (Eigen::Index m = 0; m < y.size(); ++m) {
                        long double acc_r = static_cast<long double>(y(m));
                        for (Eigen::Index i = 0; i < b.cols(); ++i) {
                            acc_r -= static_cast<long double>(b(m, i)) *
                                     static_cast<long double>(sol(i));
                        }
                        r(m) = static_cast<double>(acc_r);
                    }
                    sol += lu.solve(r);
                }
                a.row(static_cast<Eigen::Index>(j)) = sol.transpose();
            }
        } else {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b);
            if (qr.rank() < static_cast<Eigen::Index>(dim)) {
                throw NumericError("sampled factorized basis is rank deficient for Jbar=" +
                                   acc.to_string());
            }
            for (std::size_t j = 1; j < dim; ++j) {
                a.row(static_cast<Eigen::Index>(j)) =
                    qr.solve(c.col(static_cast<Eigen::Index>(j))).transpose();
            }
        }
        return a;
    };

    const auto nodes = chebyshev_nodes(dim);
    const Eigen::MatrixXd b = sample_factorized(acc, nodes);
    const Eigen::MatrixXd c = sample_standard(order, nodes);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    const double smax = svd.singularValues()(0);
    if (smin <= 0.0) {
        throw NumericError("sampled factorized basis is singular for Jbar=" + acc.to_string());
    }

    Eigen::MatrixXd a;
    if (smax / smin > kConditionLimit) {
        // Ill-conditioned square system: least squares over twice the nodes.
        const auto ls_nodes = chebyshev_nodes(2 * dim);
        a = solve_rows(sample_factorized(acc, ls_nodes), sample_standard(order, ls_nodes));
    } else {
        a = solve_rows(b, c);
    }

    // Residual check on a held-out interior grid of 4J+7 points.
    const std::size_t holdout = 4 * static_cast<std::size_t>(order) + 7;
    std::vector<double> fact_row(dim), std_row(dim);
    double residual = 0.0;
    for (std::size_t i = 0; i < holdout; ++i) {
        const double z = static_cast<double>(i + 1) / static_cast<double>(holdout + 1);
        factorized_basis_vector(z, acc, fact_row);
        eval_c_vector(z, order, std_row);
        for (std::size_t j = 0; j < dim; ++j) {
            double recon = 0.0;
            for (std::size_t i2 = 0; i2 < dim; ++i2) {
                recon += a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i2)) * fact_row[i2];
            }
            residual = std::max(residual, std::abs(recon - std_row[j]));
        }
    }
    if (!(residual < kResidualBound)) {
        throw NumericError("transform residual " + std::to_string(residual) +
                           " exceeds bound for Jbar=" + acc.to_string() +
                           " (factor the accuracy parameter, e.g. two smaller factors)");
    }

    Transform1D tf;
    tf.acc = acc;
    tf.residual = residual;
    tf.matrix.resize(dim * dim);
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t i = 0; i < dim; ++i) {
            tf.matrix[j * dim + i] = a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
        }
    }
    return tf;
}

SketchTensor recover_standard(const FactorizedTensor& ft, const Transform1D& tf) {
    if (!(ft.acc == tf.acc)) throw std::invalid_argument("transform/sketch accuracy mismatch");
    SketchTensor out;
    out.p = ft.p;
    out.order = static_cast<int>(ft.acc.total());
    out.count = ft.count;
    out.standardized = ft.standardized;
    out.values = ft.values;
    out.values.apply_matrix_all_modes(tf.matrix.data());
    return out;
}

namespace {

void accumulate_range_factorized(const Shard& shard, const AccuracyParameter& acc, int p,
                                 std::size_t begin, std::size_t end, detail::KahanTensor& kacc,
                                 TrigTally& tally, std::uint64_t& reads) {
    const std::size_t len = acc.basis_size();
    std::vector<double> vecs(static_cast<std::size_t>(p) * len);
    for (std::size_t i = begin; i < end; ++i) {
        factorized_point_basis(shard.points[i], acc, vecs, &tally);
        kacc.accumulate_outer(vecs.data(), len, static_cast<std::size_t>(p));
        ++reads;
    }
}

FactorizedTensor make_tensor(const AccuracyParameter& acc, int p, std::uint64_t count) {
    FactorizedTensor t;
    t.acc = acc;
    t.p = p;
    t.count = count;
    t.values = Tensor(acc.basis_size(), static_cast<std::size_t>(p));
    return t;
}

}  // namespace

FactorizedTensor sketch_shard_factorized_serial(const Shard& shard, const AccuracyParameter& acc,
                                                int p) {
    if (p < 1) throw std::invalid_argument("dimension must be positive");
    if (shard.points.n > 0 && shard.points.p != static_cast<std::size_t>(p)) {
        throw std::invalid_argument("shard dimension mismatch");
    }
    FactorizedTensor t = make_tensor(acc, p, shard.points.n);
    detail::KahanTensor kacc(t.values.size());
    TrigTally tally;
    std::uint64_t reads = 0;
    accumulate_range_factorized(shard, acc, p, 0, shard.points.n, kacc, tally, reads);
    kacc.finalize_into(t.values);

    auto& counters = sketch_counters();
    counters.points_read.fetch_add(reads, std::memory_order_relaxed);
    counters.cos_calls.fetch_add(tally.cos_calls, std::memory_order_relaxed);
    counters.sin_calls.fetch_add(tally.sin_calls, std::memory_order_relaxed);
    return t;
}

FactorizedTensor sketch_shard_factorized(const Shard& shard, const AccuracyParameter& acc, int p,
                                         int threads) {
    if (p < 1) throw std::invalid_argument("dimension must be positive");
    if (shard.points.n > 0 && shard.points.p != static_cast<std::size_t>(p)) {
        throw std::invalid_argument("shard dimension mismatch");
    }
    FactorizedTensor t = make_tensor(acc, p, shard.points.n);
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
    const std::size_t n = shard.points.n;
    std::vector<detail::KahanTensor> partials(static_cast<std::size_t>(nthreads),
                                              detail::KahanTensor(t.values.size()));

#pragma omp parallel num_threads(nthreads)
    {
        const int tid = omp_get_thread_num();
        const std::size_t per = n / static_cast<std::size_t>(nthreads);
        const std::size_t extra = n % static_cast<std::size_t>(nthreads);
        const std::size_t begin =
            per * static_cast<std::size_t>(tid) + std::min<std::size_t>(tid, extra);
        const std::size_t end = begin + per + (static_cast<std::size_t>(tid) < extra ? 1 : 0);
        TrigTally tally;
        std::uint64_t reads = 0;
        accumulate_range_factorized(shard, acc, p, begin, end,
                                    partials[static_cast<std::size_t>(tid)], tally, reads);
        auto& counters = sketch_counters();
        counters.points_read.fetch_add(reads, std::memory_order_relaxed);
        counters.cos_calls.fetch_add(tally.cos_calls, std::memory_order_relaxed);
        counters.sin_calls.fetch_add(tally.sin_calls, std::memory_order_relaxed);
    }
    for (int tid = 1; tid < nthreads; ++tid) {
        partials[0].merge_from(partials[static_cast<std::size_t>(tid)]);
    }
    partials[0].finalize_into(t.values);
    return t;
}

FactorizedTensor merge(const FactorizedTensor& a, const FactorizedTensor& b) {
    if (!(a.acc == b.acc) || a.p != b.p) throw std::invalid_argument("sketch shape mismatch");
    if (a.standardized || b.standardized) {
        throw std::invalid_argument("merge operates on raw (unstandardized) sketches");
    }
    FactorizedTensor out = a;
    out.count += b.count;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
    return out;
}

FactorizedTensor standardize(FactorizedTensor t) {
    if (t.standardized) return t;
    if (t.count == 0) throw std::invalid_argument("cannot standardize an empty sketch");
    const double inv = 1.0 / static_cast<double>(t.count);
    for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] *= inv;
    t.values[0] = 1.0;
    t.standardized = true;
    return t;
}

FactorizedTensor map_reduce_build_factorized(std::span<const Shard> shards,
                                             const AccuracyParameter& acc, int p, int parallelism,
                                             PhaseTimings* timings) {
    if (shards.empty()) throw std::invalid_argument("no shards given");
    if (parallelism < 0) throw std::invalid_argument("parallelism must be nonnegative");
    const int nthreads = parallelism > 0 ? parallelism : omp_get_max_threads();

    const auto map_start = Clock::now();
    std::vector<FactorizedTensor> mapped(shards.size());
#pragma omp parallel for num_threads(nthreads) schedule(dynamic)
    for (std::size_t r = 0; r < shards.size(); ++r) {
        mapped[r] = sketch_shard_factorized_serial(shards[r], acc, p);
    }
    const double map_s = seconds_since(map_start);

    const auto reduce_start = Clock::now();
    std::size_t width = shards.size();
    while (width > 1) {
        const std::size_t half = (width + 1) / 2;
        for (std::size_t i = 0; i + half < width; ++i) {
            mapped[i] = merge(mapped[i], mapped[i + half]);
        }
        width = half;
    }
    if (mapped[0].count == 0) throw std::invalid_argument("all shards are empty");
    FactorizedTensor out = standardize(std::move(mapped[0]));
    const double reduce_s = seconds_since(reduce_start);

    if (timings != nullptr) {
        timings->map_s = map_s;
        timings->reduce_s = reduce_s;
    }
    return out;
}

}  // namespace kdsketch
