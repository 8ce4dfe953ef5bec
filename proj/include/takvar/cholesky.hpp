#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "takvar/sparse_matrix.hpp"
#include "takvar/symbolic.hpp"
#include "takvar/types.hpp"

namespace takvar {

// Pivots at or below this are treated as a loss of positive definiteness.
inline constexpr double kPivotTolerance = 1e-300;

/// Cholesky values stored on exactly the symbolic pattern L^s.
///
/// Entries that happen to compute to zero stay stored: the Takahashi sweep
/// and the exactness conditions reason about the structural pattern, not the
/// numeric one.
struct NumericFactor {
    SymbolicFactor symbolic;
    std::vector<double> values;  // aligned with symbolic.pattern entries
    std::uint64_t mult_ops = 0;

    index_t size() const { return symbolic.size(); }
    index_t bandwidth() const { return takvar::bandwidth(symbolic.pattern); }

    double value_at(index_t r, index_t c) const {
        const index_t k = symbolic.pattern.find(r, c);
        return k < 0 ? 0.0 : values[static_cast<std::size_t>(k)];
    }
};

/// L as a standalone matrix (structural zeros included), for I/O and tests.
inline SparseMatrix factor_matrix(const NumericFactor& f) {
    return SparseMatrix::from_csc(f.size(), f.size(), f.symbolic.pattern.col_ptr(),
                                  f.symbolic.pattern.row_indices(), f.values);
}

/// Numeric Cholesky factorization P = L L^T on the scaffold's pattern.
///
/// Left-looking over columns; the cursor array tracks, per already-factored
/// column k, the entry (j, k) so each update streams the tail of column k
/// exactly once per structural entry of row j.
inline NumericFactor numeric_cholesky(const SparseMatrix& p, const SymbolicFactor& sym) {
    const index_t n = sym.size();
    if (p.nrows() != n || p.ncols() != n)
        throw std::invalid_argument("numeric_cholesky: dimension mismatch");
    if (!p.is_pattern_symmetric())
        throw std::invalid_argument("numeric_cholesky: pattern not symmetric");

    const SparseMatrix pp =
        sym.perm.is_identity() ? p : permute_symmetric(p, sym.perm);
    const SparsePattern& ls = sym.pattern;

    // Every structural entry of the permuted input must be covered by L^s.
    for (index_t j = 0; j < n; ++j)
        for (index_t r : pp.col_rows(j))
            if (r >= j && !ls.has(r, j))
                throw std::invalid_argument("numeric_cholesky: pattern mismatch with scaffold");

    const SparsePattern upper = ls.transposed();  // upper.col(j) = columns of row j

    NumericFactor f;
    f.symbolic = sym;
    f.values.assign(static_cast<std::size_t>(ls.nnz()), 0.0);

    const auto& ls_ptr = ls.col_ptr();
    const auto& ls_rows = ls.row_indices();
    std::vector<index_t> cursor(static_cast<std::size_t>(n));
    for (index_t k = 0; k < n; ++k)
        cursor[static_cast<std::size_t>(k)] = ls_ptr[static_cast<std::size_t>(k)];  // diagonal slot

    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    std::uint64_t ops = 0;

    for (index_t j = 0; j < n; ++j) {
        auto prows = pp.col_rows(j);
        auto pvals = pp.col_values(j);
        for (std::size_t q = 0; q < prows.size(); ++q)
            if (prows[q] >= j) x[static_cast<std::size_t>(prows[q])] = pvals[q];

        for (index_t k : upper.col(j)) {
            if (k == j) break;
            const index_t pos = ++cursor[static_cast<std::size_t>(k)];  // entry (j, k)
            const double ljk = f.values[static_cast<std::size_t>(pos)];
            const index_t end = ls_ptr[static_cast<std::size_t>(k) + 1];
            for (index_t q = pos; q < end; ++q)
                x[static_cast<std::size_t>(ls_rows[static_cast<std::size_t>(q)])] -=
                    ljk * f.values[static_cast<std::size_t>(q)];
            ops += static_cast<std::uint64_t>(end - pos);
        }

        const index_t diag_pos = ls_ptr[static_cast<std::size_t>(j)];
        const double pivot = x[static_cast<std::size_t>(j)];
        if (!(pivot > kPivotTolerance))
            throw not_spd_error("numeric_cholesky: non-positive pivot at column " +
                                std::to_string(j));
        const double ljj = std::sqrt(pivot);
        f.values[static_cast<std::size_t>(diag_pos)] = ljj;
        const index_t end = ls_ptr[static_cast<std::size_t>(j) + 1];
        for (index_t q = diag_pos + 1; q < end; ++q) {
            const index_t r = ls_rows[static_cast<std::size_t>(q)];
            f.values[static_cast<std::size_t>(q)] = x[static_cast<std::size_t>(r)] / ljj;
            x[static_cast<std::size_t>(r)] = 0.0;
        }
        x[static_cast<std::size_t>(j)] = 0.0;
        ops += static_cast<std::uint64_t>(end - diag_pos);
    }

    f.mult_ops = ops;
    return f;
}

/// Solve L x = b for one right-hand side already scattered into `x`.
/// `first_nonzero` bounds where the solution can start; returns the number of
/// multiplicative operations performed. Exact zeros in x are skipped, which
/// both matches the structural analysis and keeps the cost within the banded
/// operation bound.
inline std::uint64_t forward_solve_column(const NumericFactor& f, std::span<double> x,
                                          index_t first_nonzero = 0) {
    const SparsePattern& ls = f.symbolic.pattern;
    const auto& ptr = ls.col_ptr();
    const auto& rows = ls.row_indices();
    const index_t n = f.size();
    std::uint64_t ops = 0;
    for (index_t j = first_nonzero; j < n; ++j) {
        const double xj = x[static_cast<std::size_t>(j)];
        if (xj == 0.0) continue;
        const index_t diag_pos = ptr[static_cast<std::size_t>(j)];
        const double v = xj / f.values[static_cast<std::size_t>(diag_pos)];
        x[static_cast<std::size_t>(j)] = v;
        const index_t end = ptr[static_cast<std::size_t>(j) + 1];
        for (index_t q = diag_pos + 1; q < end; ++q)
            x[static_cast<std::size_t>(rows[static_cast<std::size_t>(q)])] -=
                f.values[static_cast<std::size_t>(q)] * v;
        ops += static_cast<std::uint64_t>(end - diag_pos);
    }
    return ops;
}

/// Solve L^T x = b in place for one right-hand side; returns multiplicative
/// operation count.
inline std::uint64_t backward_solve_column(const NumericFactor& f, std::span<double> x) {
    const SparsePattern& ls = f.symbolic.pattern;
    const auto& ptr = ls.col_ptr();
    const auto& rows = ls.row_indices();
    std::uint64_t ops = 0;
    for (index_t j = f.size() - 1; j >= 0; --j) {
        const index_t diag_pos = ptr[static_cast<std::size_t>(j)];
        const index_t end = ptr[static_cast<std::size_t>(j) + 1];
        double s = x[static_cast<std::size_t>(j)];
        for (index_t q = diag_pos + 1; q < end; ++q)
            s -= f.values[static_cast<std::size_t>(q)] *
                 x[static_cast<std::size_t>(rows[static_cast<std::size_t>(q)])];
        x[static_cast<std::size_t>(j)] = s / f.values[static_cast<std::size_t>(diag_pos)];
        ops += static_cast<std::uint64_t>(end - diag_pos);
    }
    return ops;
}

/// Solve L G = B for a sparse right-hand side, returning G dense.
/// Right-hand-side columns are solved independently; leading zeros in each
/// column are exploited.
inline DenseMatrix forward_solve(const NumericFactor& f, const SparseMatrix& rhs) {
    if (rhs.nrows() != f.size())
        throw std::invalid_argument("forward_solve: dimension mismatch");
    DenseMatrix g(rhs.nrows(), rhs.ncols());
    for (index_t c = 0; c < rhs.ncols(); ++c) {
        auto rows = rhs.col_rows(c);
        auto vals = rhs.col_values(c);
        if (rows.empty()) continue;
        double* x = g.col_data(c);
        for (std::size_t k = 0; k < rows.size(); ++k)
            x[static_cast<std::size_t>(rows[k])] = vals[k];
        forward_solve_column(f, {x, static_cast<std::size_t>(f.size())}, rows.front());
    }
    return g;
}

/// Solve L^T V = W for a dense right-hand side.
inline DenseMatrix backward_solve(const NumericFactor& f, const DenseMatrix& w) {
    if (w.nrows() != f.size())
        throw std::invalid_argument("backward_solve: dimension mismatch");
    DenseMatrix v = w;
    for (index_t c = 0; c < w.ncols(); ++c)
        backward_solve_column(f, {v.col_data(c), static_cast<std::size_t>(f.size())});
    return v;
}

}  // namespace takvar
