#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "takvar/bundle.hpp"
#include "takvar/cholesky.hpp"
#include "takvar/gmrf.hpp"
#include "takvar/matrix_market.hpp"
#include "takvar/model.hpp"
#include "takvar/ordering.hpp"
#include "takvar/takahashi.hpp"
#include "takvar/telemetry.hpp"
#include "takvar/variance.hpp"

namespace takvar {

enum class OrderingChoice { natural, rcm };

inline const char* ordering_name(OrderingChoice o) {
    return o == OrderingChoice::natural ? "natural" : "rcm";
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0,
                              std::uint64_t d = 0) {
    std::uint64_t h = detail::splitmix64(a);
    h = detail::splitmix64(h ^ detail::splitmix64(b + 0x100));
    h = detail::splitmix64(h ^ detail::splitmix64(c + 0x10000));
    h = detail::splitmix64(h ^ detail::splitmix64(d + 0x1000000));
    return h;
}

/// Ordering + symbolic + numeric factorization of an assembled precision,
/// timed together as the Cholesky phase (the benchmark legend counts the
/// permutation as part of the decomposition).
inline NumericFactor factorize_precision(const SparseMatrix& pc, OrderingChoice ordering,
                                         PhaseStats& stats) {
    PhaseTimer t(stats, Phase::cholesky);
    const SparsePattern pattern = ones(pc, PatternMode::structural);
    const Permutation perm = ordering == OrderingChoice::rcm ? rcm_ordering(pattern)
                                                             : Permutation::identity(pc.nrows());
    const SymbolicFactor sym = symbolic_cholesky(pattern, perm);
    NumericFactor f = numeric_cholesky(pc, sym);
    stats.op_count(Phase::cholesky) += f.mult_ops;
    return f;
}

/// Takahashi sweep, timed as the PartInv phase.
inline SparseInverseSubset takahashi_timed(const NumericFactor& f, PhaseStats& stats) {
    PhaseTimer t(stats, Phase::partinv);
    SparseInverseSubset s = takahashi(f);
    stats.op_count(Phase::partinv) += s.mult_ops;
    return s;
}

/// The synthetic 1-D study model: n bisquare basis functions with a
/// second-order CAR prior, observed at m uniform locations with error
/// variance 0.1 (R = 10 I), predicted at N equispaced locations.
inline HierarchicalModel build_car1d_model(index_t n, index_t big_n, index_t m,
                                           std::uint64_t seed, double rho = 1.0 / 12.0,
                                           double tau = 12.0, double r_precision = 10.0) {
    const Basis1D basis = Basis1D::equispaced(n);
    std::vector<double> pred(static_cast<std::size_t>(big_n));
    if (big_n == 1) {
        pred[0] = 0.5;
    } else {
        for (index_t i = 0; i < big_n; ++i)
            pred[static_cast<std::size_t>(i)] =
                static_cast<double>(i) / static_cast<double>(big_n - 1);
    }
    std::mt19937_64 rng(mix_seed(seed, 0xca21d));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> obs(static_cast<std::size_t>(m));
    for (double& s : obs) s = unif(rng);

    HierarchicalModel model;
    model.A = bisquare_eval(basis, pred);
    model.B = bisquare_eval(basis, obs);
    model.Q = car1d_second_order(n, rho, tau);
    model.R = SparseMatrix::diagonal(
        std::vector<double>(static_cast<std::size_t>(m), r_precision));
    validate_model(model);
    return model;
}

/// Random two-level nested partition of a 1-D path of units: contiguous fine
/// regions, grouped contiguously into coarse regions, with positive random
/// weights. Nested by construction.
inline RegionGraph random_nested_partition(index_t n_units, index_t n_fine, index_t n_coarse,
                                           std::uint64_t seed) {
    if (n_units < n_fine || n_fine < n_coarse || n_coarse < 1)
        throw std::invalid_argument("random_nested_partition: need units >= fine >= coarse >= 1");
    std::mt19937_64 rng(mix_seed(seed, 0xae57ed));

    auto random_partition = [&rng](index_t total, index_t parts) {
        // sizes >= 1 summing to total
        std::vector<index_t> sizes(static_cast<std::size_t>(parts), 1);
        std::uniform_int_distribution<index_t> pick(0, parts - 1);
        for (index_t extra = total - parts; extra > 0; --extra)
            ++sizes[static_cast<std::size_t>(pick(rng))];
        return sizes;
    };

    RegionGraph g;
    g.n = n_units;
    for (index_t i = 0; i + 1 < n_units; ++i) g.edges.emplace_back(i, i + 1);
    std::uniform_real_distribution<double> wdist(0.5, 2.0);
    g.weights.resize(static_cast<std::size_t>(n_units));
    for (double& w : g.weights) w = wdist(rng);

    std::vector<index_t> fine(static_cast<std::size_t>(n_units));
    {
        const auto sizes = random_partition(n_units, n_fine);
        index_t u = 0;
        for (index_t r = 0; r < n_fine; ++r)
            for (index_t k = 0; k < sizes[static_cast<std::size_t>(r)]; ++k)
                fine[static_cast<std::size_t>(u++)] = r;
    }
    std::vector<index_t> coarse_of_fine(static_cast<std::size_t>(n_fine));
    {
        const auto sizes = random_partition(n_fine, n_coarse);
        index_t f = 0;
        for (index_t r = 0; r < n_coarse; ++r)
            for (index_t k = 0; k < sizes[static_cast<std::size_t>(r)]; ++k)
                coarse_of_fine[static_cast<std::size_t>(f++)] = r;
    }
    std::vector<index_t> coarse(static_cast<std::size_t>(n_units));
    for (index_t u = 0; u < n_units; ++u)
        coarse[static_cast<std::size_t>(u)] =
            coarse_of_fine[static_cast<std::size_t>(fine[static_cast<std::size_t>(u)])];
    g.memberships = {std::move(fine), std::move(coarse)};
    g.validate();
    return g;
}

/// Downscaling-style model: observe coarse aggregates, predict fine
/// aggregates, first-order CAR prior on the unit graph.
inline HierarchicalModel build_nested_model(index_t n_units, index_t n_fine, index_t n_coarse,
                                            std::uint64_t seed, double rho = 0.9,
                                            double tau = 1.0, double r_precision = 10.0) {
    const RegionGraph g = random_nested_partition(n_units, n_fine, n_coarse, seed);
    HierarchicalModel model;
    model.A = aggregation_matrix(g, 0);
    model.B = aggregation_matrix(g, 1);
    model.Q = car_first_order(g, rho, tau);
    model.R = SparseMatrix::diagonal(
        std::vector<double>(static_cast<std::size_t>(n_coarse), r_precision));
    validate_model(model);
    return model;
}

/// Synthetic 1-D FRK-CAR instance: `rank` wide bisquare functions with a
/// dense exponential-covariance K, a first-order CAR fine-scale term on a
/// path of n_xi cells, observations at a random subset of m cells.
/// `padded = false` leaves the block-diagonal prior untouched (the case-2
/// condition then fails, which is the whole point of the padding workflow).
inline HierarchicalModel build_frk_model(index_t n_xi, index_t rank, index_t m,
                                         std::uint64_t seed, bool padded) {
    if (m > n_xi) throw std::invalid_argument("build_frk_model: m cannot exceed the grid size");
    std::mt19937_64 rng(mix_seed(seed, 0xf2c));

    Basis1D basis;
    basis.centroids.resize(static_cast<std::size_t>(rank));
    for (index_t i = 0; i < rank; ++i)
        basis.centroids[static_cast<std::size_t>(i)] =
            (static_cast<double>(i) + 0.5) / static_cast<double>(rank);
    basis.aperture = 1.5 / static_cast<double>(rank);

    std::vector<double> cells(static_cast<std::size_t>(n_xi));
    for (index_t i = 0; i < n_xi; ++i)
        cells[static_cast<std::size_t>(i)] =
            (static_cast<double>(i) + 0.5) / static_cast<double>(n_xi);

    std::vector<index_t> all_cells(static_cast<std::size_t>(n_xi));
    for (index_t i = 0; i < n_xi; ++i) all_cells[static_cast<std::size_t>(i)] = i;
    std::shuffle(all_cells.begin(), all_cells.end(), rng);
    std::vector<index_t> obs_cells(all_cells.begin(), all_cells.begin() + m);
    std::sort(obs_cells.begin(), obs_cells.end());
    std::vector<double> obs_locs(static_cast<std::size_t>(m));
    for (index_t k = 0; k < m; ++k)
        obs_locs[static_cast<std::size_t>(k)] =
            cells[static_cast<std::size_t>(obs_cells[static_cast<std::size_t>(k)])];

    DenseMatrix k_cov(rank, rank);
    for (index_t i = 0; i < rank; ++i)
        for (index_t j = 0; j < rank; ++j)
            k_cov(i, j) = std::exp(-std::abs(basis.centroids[static_cast<std::size_t>(i)] -
                                             basis.centroids[static_cast<std::size_t>(j)]) /
                                   0.3);

    RegionGraph grid;
    grid.n = n_xi;
    for (index_t i = 0; i + 1 < n_xi; ++i) grid.edges.emplace_back(i, i + 1);
    const SparseMatrix q_xi = car_first_order(grid, 0.5, 4.0);

    const SparseMatrix a_tilde = bisquare_eval(basis, cells);
    const SparseMatrix b_tilde = bisquare_eval(basis, obs_locs);
    return frk_car_assemble(a_tilde, b_tilde, k_cov, q_xi, /*r_precision=*/10.0, obs_cells,
                            padded);
}

/// The timing-study grid.
struct ExperimentGrid {
    std::vector<index_t> n_values;
    std::vector<index_t> N_values;
    index_t m = 10000;
    std::vector<Method> methods{Method::direct, Method::sparse_inv, Method::cond_sim};
    index_t sim_count = 50;
    std::uint64_t seed = 1;
    index_t repetitions = 1;
    OrderingChoice ordering = OrderingChoice::rcm;
    double memory_cap_bytes = 4e9;
    // Run cells concurrently. Timings then contend and are only good for
    // correctness runs; cell seeds depend on (n, N, rep) alone, so results
    // are schedule-independent.
    bool parallel_cells = false;

    void validate() const {
        if (n_values.empty() || N_values.empty())
            throw std::invalid_argument("ExperimentGrid: empty n or N list");
        for (index_t v : n_values)
            if (v < 3) throw std::invalid_argument("ExperimentGrid: n must be >= 3");
        for (index_t v : N_values)
            if (v < 1) throw std::invalid_argument("ExperimentGrid: N must be >= 1");
        if (m < 0) throw std::invalid_argument("ExperimentGrid: m must be nonnegative");
        if (repetitions < 1) throw std::invalid_argument("ExperimentGrid: repetitions >= 1");
        if (sim_count < 2) throw std::invalid_argument("ExperimentGrid: M >= 2");
        if (methods.empty()) throw std::invalid_argument("ExperimentGrid: no methods");
    }
};

struct TimingRow {
    index_t n = 0;
    index_t N = 0;
    index_t m = 0;
    Method method = Method::direct;
    index_t rep = 0;
    index_t factor_bandwidth = 0;
    PhaseStats phases;
    std::vector<double> d;  // populated only when the runner keeps variances
    double total_seconds() const { return phases.total_seconds(); }
    std::string dominant() const { return phase_name(phases.dominant_phase()); }
};

struct GridRunResult {
    std::vector<TimingRow> rows;
    std::vector<std::string> skipped;  // cells refused by the memory guard
};

/// Run the timing grid over the car1d study model. One row per
/// (n, N, method, repetition). Cells whose estimated working set exceeds the
/// memory cap are skipped and reported in `skipped`. Row order is fixed by
/// the grid definition, never by scheduling.
inline GridRunResult run_car1d_grid(const ExperimentGrid& grid, bool keep_variances = false) {
    grid.validate();

    struct Cell {
        index_t n, N, rep;
    };
    std::vector<Cell> cells;
    for (index_t n : grid.n_values)
        for (index_t big_n : grid.N_values)
            for (index_t rep = 0; rep < grid.repetitions; ++rep) cells.push_back({n, big_n, rep});

    std::vector<std::vector<TimingRow>> cell_rows(cells.size());
    std::vector<std::vector<std::string>> cell_skips(cells.size());

    auto run_cell = [&](std::size_t ci) {
        const auto [n, big_n, rep] = cells[ci];
        const std::uint64_t cell_seed =
            mix_seed(grid.seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(big_n),
                     static_cast<std::uint64_t>(rep));
        const HierarchicalModel model = build_car1d_model(n, big_n, grid.m, cell_seed);
        const SparseMatrix pc = assemble_precision(model);
        const ConditionReport condition = check_theorem(model.A, model.B, model.Q);

        for (Method method : grid.methods) {
            const double est = 16.0 * static_cast<double>(pc.nnz()) * 3.0 +
                               40.0 * static_cast<double>(n) * 8.0 +
                               (method == Method::cond_sim
                                    ? 8.0 * static_cast<double>(n + big_n) *
                                          static_cast<double>(grid.sim_count)
                                    : 0.0);
            if (est > grid.memory_cap_bytes) {
                cell_skips[ci].push_back("n=" + std::to_string(n) + " N=" + std::to_string(big_n) +
                                         " method=" + method_name(method) +
                                         ": estimated working set " + std::to_string(est / 1e9) +
                                         " GB over cap");
                continue;
            }

            TimingRow row;
            row.n = n;
            row.N = big_n;
            row.m = grid.m;
            row.method = method;
            row.rep = rep;

            NumericFactor factor = factorize_precision(pc, grid.ordering, row.phases);
            row.factor_bandwidth = factor.bandwidth();

            VarianceReport rep_v;
            switch (method) {
                case Method::direct:
                    rep_v = variances_direct(model, factor);
                    break;
                case Method::sparse_inv: {
                    const SparseInverseSubset subset = takahashi_timed(factor, row.phases);
                    rep_v = variances_sparse_inv(model, subset, /*skip_check=*/false, &condition);
                    break;
                }
                case Method::cond_sim:
                    rep_v = variances_cond_sim(model, factor, grid.sim_count, cell_seed);
                    break;
            }
            row.phases.merge(rep_v.phases);
            if (keep_variances) row.d = std::move(rep_v.d);
            cell_rows[ci].push_back(std::move(row));
        }
    };

    if (grid.parallel_cells && cells.size() > 1) {
        const char* env = std::getenv("TAKVAR_THREADS");
        const index_t workers = std::min<index_t>(
            env ? thread_count() : static_cast<index_t>(std::thread::hardware_concurrency()),
            static_cast<index_t>(cells.size()));
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (index_t w = 0; w < std::max<index_t>(workers, 1); ++w)
            pool.emplace_back([&] {
                for (std::size_t ci = next.fetch_add(1); ci < cells.size();
                     ci = next.fetch_add(1))
                    run_cell(ci);
            });
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t ci = 0; ci < cells.size(); ++ci) run_cell(ci);
    }

    GridRunResult out;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        for (TimingRow& r : cell_rows[ci]) out.rows.push_back(std::move(r));
        for (std::string& s : cell_skips[ci]) out.skipped.push_back(std::move(s));
    }
    return out;
}

inline void write_timing_csv(const std::string& path, const std::vector<TimingRow>& rows) {
    std::ofstream out(path);
    if (!out) throw io_error("write_timing_csv: cannot open " + path);
    out << "schema,n,N,m,method,rep,bandwidth,total_s,cholesky_s,solve_s,hadamard_s,partinv_s,"
           "sim_s,interp_s,dominant,ops_cholesky,ops_solve,ops_hadamard,ops_partinv,ops_sim,"
           "ops_interp\r\n";
    out << std::setprecision(9);
    for (const TimingRow& r : rows) {
        out << "timing-v1," << r.n << "," << r.N << "," << r.m << "," << method_name(r.method)
            << "," << r.rep << "," << r.factor_bandwidth << "," << r.total_seconds();
        for (int p = 0; p < kPhaseCount; ++p)
            out << "," << r.phases.seconds[static_cast<std::size_t>(p)];
        out << "," << r.dominant();
        for (int p = 0; p < kPhaseCount; ++p)
            out << "," << r.phases.ops[static_cast<std::size_t>(p)];
        out << "\r\n";
    }
}

struct RelErrRow {
    index_t sims = 0;  // M
    double r_hat = 0.0;
    double s_hat = 0.0;
};

/// Relative-error study: exact d once, then conditional-simulation estimates
/// for each M. With `reuse_draws` the largest ensemble is drawn once and each
/// M uses its first M columns; otherwise every M redraws independently
/// (the default).
inline std::vector<RelErrRow> run_relerr_study(const HierarchicalModel& model,
                                               const std::vector<index_t>& sims_list,
                                               std::uint64_t seed, bool reuse_draws = false,
                                               OrderingChoice ordering = OrderingChoice::rcm) {
    if (sims_list.empty()) throw std::invalid_argument("run_relerr_study: empty M list");
    const SparseMatrix pc = assemble_precision(model);
    PhaseStats stats;
    const NumericFactor factor = factorize_precision(pc, ordering, stats);

    std::vector<double> d_exact;
    const ConditionReport condition = check_theorem(model.A, model.B, model.Q);
    if (condition.theorem) {
        const SparseInverseSubset subset = takahashi_timed(factor, stats);
        d_exact = variances_sparse_inv(model, subset, false, &condition).d;
    } else {
        d_exact = variances_direct(model, factor).d;
    }

    std::vector<RelErrRow> rows;
    rows.reserve(sims_list.size());
    if (reuse_draws) {
        const index_t max_m = *std::max_element(sims_list.begin(), sims_list.end());
        const DenseMatrix ens = conditional_ensemble(model, factor, max_m, seed);
        for (index_t m_sims : sims_list) {
            const std::vector<double> d_hat = sample_row_variances(ens, m_sims);
            const RelativeErrorSummary s = relative_error_summary(d_exact, d_hat);
            rows.push_back({m_sims, s.r_hat, s.s_hat});
        }
    } else {
        for (index_t m_sims : sims_list) {
            const VarianceReport rep = variances_cond_sim(
                model, factor, m_sims, mix_seed(seed, static_cast<std::uint64_t>(m_sims)));
            const RelativeErrorSummary s = relative_error_summary(d_exact, rep.d);
            rows.push_back({m_sims, s.r_hat, s.s_hat});
        }
    }
    return rows;
}

inline void write_relerr_csv(const std::string& path, const std::vector<RelErrRow>& rows) {
    std::ofstream out(path);
    if (!out) throw io_error("write_relerr_csv: cannot open " + path);
    out << "schema,M,r_hat,s_hat\r\n";
    out << std::setprecision(9);
    for (const RelErrRow& r : rows)
        out << "relerr-v1," << r.sims << "," << r.r_hat << "," << r.s_hat << "\r\n";
}

inline void write_d_csv(const std::string& path, const std::vector<double>& d) {
    std::ofstream out(path);
    if (!out) throw io_error("write_d_csv: cannot open " + path);
    out << "index,d\r\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < d.size(); ++i) out << i << "," << d[i] << "\r\n";
}

inline nlohmann::json condition_report_json(const ConditionReport& rep) {
    auto coords = [](const std::vector<Coord>& v) {
        nlohmann::json arr = nlohmann::json::array();
        std::size_t cap = std::min<std::size_t>(v.size(), 64);  // keep reports readable
        for (std::size_t i = 0; i < cap; ++i) arr.push_back({v[i].row, v[i].col});
        return arr;
    };
    return nlohmann::json{{"case1", rep.case1},
                          {"case2", rep.case2},
                          {"theorem", rep.theorem},
                          {"a_is_permutation", rep.a_is_permutation},
                          {"padding_required", rep.padding_required},
                          {"witness_count_case1", rep.witnesses_case1.size()},
                          {"witness_count_case2", rep.witnesses_case2.size()},
                          {"witness_count_theorem", rep.witnesses_theorem.size()},
                          {"witnesses_case1", coords(rep.witnesses_case1)},
                          {"witnesses_case2", coords(rep.witnesses_case2)},
                          {"witnesses_theorem", coords(rep.witnesses_theorem)}};
}

inline nlohmann::json telemetry_json(const VarianceReport& rep, index_t n, index_t m, index_t N,
                                     index_t factor_bandwidth, OrderingChoice ordering) {
    nlohmann::json timings, ops;
    for (int p = 0; p < kPhaseCount; ++p) {
        timings[phase_name(static_cast<Phase>(p))] =
            rep.phases.seconds[static_cast<std::size_t>(p)];
        ops[phase_name(static_cast<Phase>(p))] = rep.phases.ops[static_cast<std::size_t>(p)];
    }
    nlohmann::json j{{"schema", "takvar-telemetry-v1"},
                     {"method", method_name(rep.method)},
                     {"n", n},
                     {"m", m},
                     {"N", N},
                     {"bandwidth", factor_bandwidth},
                     {"ordering", ordering_name(ordering)},
                     {"total_s", rep.phases.total_seconds()},
                     {"dominant", phase_name(rep.phases.dominant_phase())},
                     {"timings_s", timings},
                     {"op_counts", ops}};
    if (rep.method == Method::cond_sim) {
        j["M"] = rep.sim_count;
        j["seed"] = rep.seed;
        j["rng"] = rep.rng;
    }
    if (rep.condition) j["condition"] = condition_report_json(*rep.condition);
    return j;
}

struct CheckOutcome {
    ConditionReport report;
    int exit_code = 0;   // 0 theorem holds, 2 padding would fix, 3 inapplicable
    std::string error;   // set when exit_code == 3
};

/// Condition check for a bundle on disk. Exit code contract: 0 when the
/// theorem condition holds; 2 when it fails but padding Q would establish
/// case 2 (always true for a valid nonnegative model); 3 when the model
/// violates the theory's preconditions (negative A or B, non-diagonal R,
/// asymmetric Q), where padding cannot help. I/O and parse failures throw.
inline CheckOutcome check_bundle(const std::string& dir) {
    const LoadedBundle bundle = load_bundle(dir);
    CheckOutcome out;
    try {
        validate_model(bundle.model);
        out.report = check_theorem(bundle.model.A, bundle.model.B, bundle.model.Q);
    } catch (const std::invalid_argument& e) {
        out.exit_code = 3;
        out.error = e.what();
        return out;
    }
    out.exit_code = out.report.theorem ? 0 : 2;
    return out;
}

struct VariancesCommandOptions {
    std::string bundle_dir;
    Method method = Method::direct;
    index_t sim_count = 50;
    std::uint64_t seed = 1;
    bool pad = false;
    bool unsafe_skip_check = false;
    OrderingChoice ordering = OrderingChoice::rcm;
    std::string out_dir = ".";
};

struct VariancesCommandResult {
    VarianceReport report;
    index_t factor_bandwidth = 0;
    bool padded = false;
};

/// Load a bundle, optionally pad Q, factorize, run the requested variance
/// method, and write d.csv + telemetry.json into out_dir.
inline VariancesCommandResult run_variances_command(const VariancesCommandOptions& opts) {
    namespace fs = std::filesystem;
    LoadedBundle bundle = load_bundle(opts.bundle_dir);
    validate_model(bundle.model);

    VariancesCommandResult res;
    if (opts.pad) {
        SparseMatrix padded = pad_q(bundle.model.Q, bundle.model.A);
        res.padded = padded.nnz() != bundle.model.Q.nnz();
        bundle.model.Q = std::move(padded);
    }

    const ConditionReport condition =
        check_theorem(bundle.model.A, bundle.model.B, bundle.model.Q);
    const SparseMatrix pc = assemble_precision(bundle.model);
    PhaseStats stats;
    const NumericFactor factor = factorize_precision(pc, opts.ordering, stats);
    res.factor_bandwidth = factor.bandwidth();

    VarianceReport rep;
    switch (opts.method) {
        case Method::direct:
            rep = variances_direct(bundle.model, factor);
            break;
        case Method::sparse_inv: {
            const SparseInverseSubset subset = takahashi_timed(factor, stats);
            rep = variances_sparse_inv(bundle.model, subset, opts.unsafe_skip_check,
                                       &condition);
            break;
        }
        case Method::cond_sim:
            rep = variances_cond_sim(bundle.model, factor, opts.sim_count, opts.seed);
            break;
    }
    rep.phases.merge(stats);
    rep.condition = condition;

    fs::create_directories(opts.out_dir);
    write_d_csv((fs::path(opts.out_dir) / "d.csv").string(), rep.d);
    const nlohmann::json telemetry =
        telemetry_json(rep, bundle.model.n(), bundle.model.m(), bundle.model.N(),
                       res.factor_bandwidth, opts.ordering);
    std::ofstream out(fs::path(opts.out_dir) / "telemetry.json");
    if (!out) throw io_error("run_variances_command: cannot write telemetry.json");
    out << telemetry.dump(2) << "\n";

    res.report = std::move(rep);
    return res;
}

/// Write a synthetic bundle of the given kind. Dimension knobs reuse the CLI
/// names: n (state dimension / units / grid cells), N (predictions / fine
/// regions), m (observations / coarse regions / observed cells).
inline BundleManifest generate_bundle(const std::string& kind, index_t n, index_t big_n,
                                      index_t m, index_t rank, std::uint64_t seed,
                                      const std::string& out_dir) {
    HierarchicalModel model;
    BundleManifest manifest;
    manifest.kind = kind;
    manifest.seed = seed;
    if (kind == "car1d") {
        model = build_car1d_model(n, big_n, m, seed);
        manifest.extra = {{"rho", 1.0 / 12.0}, {"tau", 12.0}};
    } else if (kind == "nested-aggregation") {
        model = build_nested_model(n, big_n, m, seed);
        manifest.extra = {{"rho", 0.9}, {"tau", 1.0}};
    } else if (kind == "frk-car") {
        model = build_frk_model(n, rank, m, seed, /*padded=*/false);
        manifest.extra = {{"rank", rank}, {"grid_cells", n}};
    } else {
        throw std::invalid_argument("generate_bundle: unknown kind '" + kind +
                                    "' (expected car1d, nested-aggregation, frk-car)");
    }
    manifest.n = model.n();
    manifest.m = model.m();
    manifest.N = model.N();
    manifest.padded = false;
    save_bundle(out_dir, model, manifest);
    return manifest;
}

}  // namespace takvar
