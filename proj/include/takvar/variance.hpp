#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "takvar/cholesky.hpp"
#include "takvar/model.hpp"
#include "takvar/parallel.hpp"
#include "takvar/takahashi.hpp"
#include "takvar/telemetry.hpp"
#include "takvar/types.hpp"

namespace takvar {

enum class Method { direct, sparse_inv, cond_sim };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::direct: return "direct";
        case Method::sparse_inv: return "sparse_inv";
        case Method::cond_sim: return "cond_sim";
    }
    return "?";
}

inline std::optional<Method> method_from_name(const std::string& s) {
    if (s == "direct") return Method::direct;
    if (s == "sparse_inv") return Method::sparse_inv;
    if (s == "cond_sim") return Method::cond_sim;
    return std::nullopt;
}

/// Prediction variances plus how they were obtained.
struct VarianceReport {
    std::vector<double> d;
    Method method = Method::direct;
    index_t sim_count = 0;   // cond_sim only
    std::uint64_t seed = 0;  // cond_sim only
    std::string rng;         // cond_sim only
    PhaseStats phases;
    std::optional<ConditionReport> condition;
};

namespace detail {

/// A^T with rows mapped into the factor's permuted index space; column i
/// holds prediction row i of A.
inline SparseMatrix permuted_prediction_columns(const SparseMatrix& a, const Permutation& perm) {
    SparseMatrix at = a.transposed();
    return perm.is_identity() ? at : permute_rows(at, perm);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Direct (exact) route: solve L G = (P A^T) column by column and accumulate
/// d_i = sum_k G_ki^2. Columns stream through a per-worker buffer, so G is
/// never materialized. Exact for any nonnegative A; no pattern conditions
/// are required.
inline VarianceReport variances_direct(const HierarchicalModel& model,
                                       const NumericFactor& factor) {
    if (factor.size() != model.n())
        throw std::invalid_argument("variances_direct: factor/model dimension mismatch");
    const index_t n = model.n();
    const index_t N = model.N();
    const SparseMatrix atp = detail::permuted_prediction_columns(model.A, factor.symbolic.perm);

    VarianceReport rep;
    rep.method = Method::direct;
    rep.d.assign(static_cast<std::size_t>(N), 0.0);

    std::vector<PhaseStats> worker_stats(static_cast<std::size_t>(thread_count()));
    parallel_for(N, [&](index_t begin, index_t end, index_t w) {
        PhaseStats& st = worker_stats[static_cast<std::size_t>(w)];
        std::vector<double> x(static_cast<std::size_t>(n), 0.0);
        for (index_t i = begin; i < end; ++i) {
            auto rows = atp.col_rows(i);
            auto vals = atp.col_values(i);
            if (rows.empty()) continue;
            {
                PhaseTimer t(st, Phase::solve);
                for (std::size_t k = 0; k < rows.size(); ++k)
                    x[static_cast<std::size_t>(rows[k])] = vals[k];
                st.op_count(Phase::solve) += forward_solve_column(
                    factor, {x.data(), static_cast<std::size_t>(n)}, rows.front());
            }
            {
                PhaseTimer t(st, Phase::hadamard);
                double acc = 0.0;
                for (index_t j = rows.front(); j < n; ++j) {
                    const double v = x[static_cast<std::size_t>(j)];
                    acc += v * v;
                    x[static_cast<std::size_t>(j)] = 0.0;
                }
                rep.d[static_cast<std::size_t>(i)] = acc;
                st.op_count(Phase::hadamard) += static_cast<std::uint64_t>(n - rows.front());
            }
        }
    });
    // Wall attribution under parallelism: workers run the same mix, so the
    // max across workers approximates elapsed wall time per phase.
    for (const auto& st : worker_stats) {
        for (int p = 0; p < kPhaseCount; ++p) {
            rep.phases.seconds[static_cast<std::size_t>(p)] = std::max(
                rep.phases.seconds[static_cast<std::size_t>(p)], st.seconds[static_cast<std::size_t>(p)]);
            rep.phases.ops[static_cast<std::size_t>(p)] += st.ops[static_cast<std::size_t>(p)];
        }
    }
    return rep;
}

/// Sparse-inverse-subset (exact under the theorem condition) route:
/// d = row sums of A o (A S~).
///
/// Refuses to compute when the condition check fails — the subset then does
/// not necessarily contain every entry of S the quadratic forms touch, and
/// the result would be silently approximate. Callers must pad Q (and
/// reassemble/refactor) first, or explicitly opt out of the check.
inline VarianceReport variances_sparse_inv(const HierarchicalModel& model,
                                           const SparseInverseSubset& subset,
                                           bool skip_check = false,
                                           const ConditionReport* precomputed = nullptr) {
    if (subset.size() != model.n())
        throw std::invalid_argument("variances_sparse_inv: subset/model dimension mismatch");

    VarianceReport rep;
    rep.method = Method::sparse_inv;
    if (!skip_check) {
        rep.condition = precomputed ? *precomputed : check_theorem(model.A, model.B, model.Q);
        if (!rep.condition->theorem) {
            const Coord w = rep.condition->witnesses_theorem.front();
            throw condition_error(
                "variances_sparse_inv: condition check failed; exactness is not guaranteed. "
                "ones(A^T A) entry (" + std::to_string(w.row) + ", " + std::to_string(w.col) +
                ") is covered by neither ones(B^T B) nor ones(Q); pad_q would add " +
                std::to_string(rep.condition->padding_required) + " entries");
        }
    }

    const index_t N = model.N();
    const SparseMatrix atp = detail::permuted_prediction_columns(model.A, subset.perm);
    rep.d.assign(static_cast<std::size_t>(N), 0.0);

    const auto& sp = subset.pattern.col_ptr();
    const auto& sr = subset.pattern.row_indices();

    std::vector<PhaseStats> worker_stats(static_cast<std::size_t>(thread_count()));
    parallel_for(N, [&](index_t begin, index_t end, index_t w) {
        PhaseStats& st = worker_stats[static_cast<std::size_t>(w)];
        PhaseTimer t(st, Phase::hadamard);
        std::uint64_t ops = 0;
        for (index_t i = begin; i < end; ++i) {
            auto rows = atp.col_rows(i);
            auto vals = atp.col_values(i);
            double di = 0.0;
            for (std::size_t jj = 0; jj < rows.size(); ++jj) {
                const index_t j = rows[jj];
                // t_j = sum_k a_k S~_kj, walking closure column j against the
                // prediction row's indices (both ascending).
                double tj = 0.0;
                index_t e = sp[static_cast<std::size_t>(j)];
                const index_t eend = sp[static_cast<std::size_t>(j) + 1];
                for (std::size_t kk = 0; kk < rows.size(); ++kk) {
                    const index_t k = rows[kk];
                    while (e < eend && sr[static_cast<std::size_t>(e)] < k) ++e;
                    if (e < eend && sr[static_cast<std::size_t>(e)] == k)
                        tj += vals[kk] * subset.values[static_cast<std::size_t>(e)];
                }
                ops += static_cast<std::uint64_t>(rows.size()) + 1;
                di += vals[jj] * tj;
            }
            rep.d[static_cast<std::size_t>(i)] = di;
        }
        st.op_count(Phase::hadamard) += ops;
    });
    for (const auto& st : worker_stats) {
        for (int p = 0; p < kPhaseCount; ++p) {
            rep.phases.seconds[static_cast<std::size_t>(p)] = std::max(
                rep.phases.seconds[static_cast<std::size_t>(p)], st.seconds[static_cast<std::size_t>(p)]);
            rep.phases.ops[static_cast<std::size_t>(p)] += st.ops[static_cast<std::size_t>(p)];
        }
    }
    return rep;
}

/// Draw M posterior-fluctuation samples v_r (each solving L^T v = w,
/// w ~ Gau(0, I)) and map them through A. Returns the N x M prediction
/// ensemble. Each replicate's noise stream is derived from (seed, r), so the
/// ensemble is bit-identical for a fixed seed regardless of threading.
inline DenseMatrix conditional_ensemble(const HierarchicalModel& model,
                                        const NumericFactor& factor, index_t m_sims,
                                        std::uint64_t seed, PhaseStats* stats = nullptr) {
    if (factor.size() != model.n())
        throw std::invalid_argument("conditional_ensemble: factor/model dimension mismatch");
    const index_t n = model.n();
    const index_t N = model.N();
    const SparseMatrix atp = detail::permuted_prediction_columns(model.A, factor.symbolic.perm);

    DenseMatrix coeff(n, m_sims);
    std::vector<PhaseStats> worker_stats(static_cast<std::size_t>(thread_count()));
    parallel_for(m_sims, [&](index_t begin, index_t end, index_t w) {
        PhaseStats& st = worker_stats[static_cast<std::size_t>(w)];
        PhaseTimer t(st, Phase::sim);
        std::uint64_t ops = 0;
        for (index_t r = begin; r < end; ++r) {
            std::mt19937_64 rng(detail::splitmix64(seed) ^
                                detail::splitmix64(static_cast<std::uint64_t>(r) + 1));
            std::normal_distribution<double> gauss(0.0, 1.0);
            double* v = coeff.col_data(r);
            for (index_t j = 0; j < n; ++j) v[static_cast<std::size_t>(j)] = gauss(rng);
            ops += backward_solve_column(factor, {v, static_cast<std::size_t>(n)});
        }
        st.op_count(Phase::sim) += ops;
    });

    DenseMatrix ens(N, m_sims);
    {
        PhaseStats interp_stats;
        PhaseTimer t(interp_stats, Phase::interp);
        std::uint64_t ops = 0;
        for (index_t r = 0; r < m_sims; ++r) {
            const double* v = coeff.col_data(r);
            double* y = ens.col_data(r);
            for (index_t i = 0; i < N; ++i) {
                auto rows = atp.col_rows(i);
                auto vals = atp.col_values(i);
                double acc = 0.0;
                for (std::size_t k = 0; k < rows.size(); ++k)
                    acc += vals[k] * v[static_cast<std::size_t>(rows[k])];
                y[static_cast<std::size_t>(i)] = acc;
                ops += static_cast<std::uint64_t>(rows.size());
            }
        }
        interp_stats.op_count(Phase::interp) = ops;
        t.stop();
        if (stats) stats->merge(interp_stats);
    }
    if (stats) {
        for (const auto& st : worker_stats) {
            stats->time(Phase::sim) = std::max(stats->time(Phase::sim), st.time(Phase::sim));
            stats->op_count(Phase::sim) += st.op_count(Phase::sim);
        }
    }
    return ens;
}

/// Per-row sample variances over the first `use_cols` columns (divisor M-1).
inline std::vector<double> sample_row_variances(const DenseMatrix& ens, index_t use_cols) {
    if (use_cols < 2 || use_cols > ens.ncols())
        throw std::invalid_argument("sample_row_variances: need 2 <= M <= columns");
    const index_t N = ens.nrows();
    std::vector<double> mean(static_cast<std::size_t>(N), 0.0);
    for (index_t r = 0; r < use_cols; ++r) {
        const double* col = ens.col_data(r);
        for (index_t i = 0; i < N; ++i) mean[static_cast<std::size_t>(i)] += col[static_cast<std::size_t>(i)];
    }
    for (double& v : mean) v /= static_cast<double>(use_cols);
    std::vector<double> var(static_cast<std::size_t>(N), 0.0);
    for (index_t r = 0; r < use_cols; ++r) {
        const double* col = ens.col_data(r);
        for (index_t i = 0; i < N; ++i) {
            const double dev = col[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)];
            var[static_cast<std::size_t>(i)] += dev * dev;
        }
    }
    for (double& v : var) v /= static_cast<double>(use_cols - 1);
    return var;
}

/// Conditional-simulation (approximate) route: empirical variances of M
/// posterior samples mapped through A.
inline VarianceReport variances_cond_sim(const HierarchicalModel& model,
                                         const NumericFactor& factor, index_t m_sims,
                                         std::uint64_t seed) {
    if (m_sims < 2) throw std::invalid_argument("variances_cond_sim: M must be at least 2");
    VarianceReport rep;
    rep.method = Method::cond_sim;
    rep.sim_count = m_sims;
    rep.seed = seed;
    rep.rng = "mt19937_64/normal_distribution, replicate streams split from seed";
    const DenseMatrix ens = conditional_ensemble(model, factor, m_sims, seed, &rep.phases);
    {
        PhaseTimer t(rep.phases, Phase::interp);
        rep.d = sample_row_variances(ens, m_sims);
    }
    return rep;
}

/// Bias and spread of the relative error of simulated prediction standard
/// errors: R_i = (sigma_hat_i - sigma_i) / sigma_i with sigma_i = sqrt(d_i).
struct RelativeErrorSummary {
    double r_hat = 0.0;  // mean of R_i
    double s_hat = 0.0;  // sample standard deviation of R_i (divisor N-1)
};

inline RelativeErrorSummary relative_error_summary(std::span<const double> d_exact,
                                                   std::span<const double> d_hat) {
    if (d_exact.size() != d_hat.size() || d_exact.empty())
        throw std::invalid_argument("relative_error_summary: size mismatch");
    const std::size_t N = d_exact.size();
    std::vector<double> rel(N);
    for (std::size_t i = 0; i < N; ++i) {
        if (!(d_exact[i] > 0.0))
            throw std::invalid_argument("relative_error_summary: zero exact variance");
        const double s_true = std::sqrt(d_exact[i]);
        rel[i] = (std::sqrt(d_hat[i]) - s_true) / s_true;
    }
    RelativeErrorSummary out;
    for (double r : rel) out.r_hat += r;
    out.r_hat /= static_cast<double>(N);
    if (N > 1) {
        double ss = 0.0;
        for (double r : rel) ss += (r - out.r_hat) * (r - out.r_hat);
        out.s_hat = std::sqrt(ss / static_cast<double>(N - 1));
    }
    return out;
}

}  // namespace takvar
