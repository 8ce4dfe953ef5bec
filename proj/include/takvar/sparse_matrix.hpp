#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "takvar/sparse_pattern.hpp"
#include "takvar/types.hpp"

namespace takvar {

/// Selects which entries of a matrix the `ones` function reports.
///
/// `value` is the plain sparsity pattern: entries whose stored value is
/// nonzero. `structural` reports every explicitly stored entry, including
/// stored zeros — the pattern of a *computed* operation, which is what all
/// pattern composition and condition checking acts on.
enum class PatternMode { value, structural };

struct Triplet {
    index_t row = 0;
    index_t col = 0;
    double value = 0.0;
};

/// Compressed-column real sparse matrix.
///
/// Explicit entries may hold the value 0: structural zeros are first-class
/// and survive every operation in this library (products, sums, permutations,
/// factorization, file I/O). Dropping them would silently break the
/// computed-operation pattern algebra everything downstream relies on.
class SparseMatrix {
public:
    SparseMatrix() = default;

    SparseMatrix(index_t nrows, index_t ncols)
        : nrows_(nrows), ncols_(ncols), col_ptr_(static_cast<std::size_t>(ncols) + 1, 0) {
        if (nrows < 0 || ncols < 0)
            throw std::invalid_argument("SparseMatrix: negative dimension");
    }

    /// Build from triplets. Duplicate coordinates are summed; zero values are
    /// kept as structural entries.
    static SparseMatrix from_triplets(index_t nrows, index_t ncols, std::vector<Triplet> t) {
        std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
            return a.col != b.col ? a.col < b.col : a.row < b.row;
        });
        SparseMatrix m(nrows, ncols);
        m.rows_.reserve(t.size());
        m.values_.reserve(t.size());
        index_t last_row = -1, last_col = -1;
        for (const Triplet& e : t) {
            if (e.row < 0 || e.row >= nrows || e.col < 0 || e.col >= ncols)
                throw std::invalid_argument("SparseMatrix: triplet out of bounds");
            if (e.col == last_col && e.row == last_row) {
                m.values_.back() += e.value;
            } else {
                ++m.col_ptr_[static_cast<std::size_t>(e.col) + 1];
                m.rows_.push_back(e.row);
                m.values_.push_back(e.value);
                last_row = e.row;
                last_col = e.col;
            }
        }
        for (std::size_t j = 0; j < static_cast<std::size_t>(ncols); ++j)
            m.col_ptr_[j + 1] += m.col_ptr_[j];
        return m;
    }

    static SparseMatrix from_csc(index_t nrows, index_t ncols, std::vector<index_t> col_ptr,
                                 std::vector<index_t> rows, std::vector<double> values) {
        if (rows.size() != values.size())
            throw std::invalid_argument("SparseMatrix: rows/values length mismatch");
        SparsePattern check =
            SparsePattern::from_csc(nrows, ncols, col_ptr, rows);  // validates structure
        SparseMatrix m(nrows, ncols);
        m.col_ptr_ = std::move(col_ptr);
        m.rows_ = std::move(rows);
        m.values_ = std::move(values);
        (void)check;
        return m;
    }

    static SparseMatrix identity(index_t n) {
        return diagonal(std::vector<double>(static_cast<std::size_t>(n), 1.0));
    }

    static SparseMatrix diagonal(std::vector<double> d) {
        const index_t n = static_cast<index_t>(d.size());
        std::vector<index_t> ptr(static_cast<std::size_t>(n) + 1);
        std::vector<index_t> rows(static_cast<std::size_t>(n));
        for (index_t i = 0; i <= n; ++i) ptr[static_cast<std::size_t>(i)] = i;
        for (index_t i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
        return from_csc(n, n, std::move(ptr), std::move(rows), std::move(d));
    }

    index_t nrows() const { return nrows_; }
    index_t ncols() const { return ncols_; }
    index_t nnz() const { return static_cast<index_t>(rows_.size()); }

    const std::vector<index_t>& col_ptr() const { return col_ptr_; }
    const std::vector<index_t>& row_indices() const { return rows_; }
    const std::vector<double>& values() const { return values_; }

    std::span<const index_t> col_rows(index_t j) const {
        const auto lo = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j)]);
        const auto hi = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j) + 1]);
        return {rows_.data() + lo, hi - lo};
    }
    std::span<const double> col_values(index_t j) const {
        const auto lo = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j)]);
        const auto hi = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j) + 1]);
        return {values_.data() + lo, hi - lo};
    }

    /// Stored value at (r, c), or 0 when the entry is absent.
    double get(index_t r, index_t c) const {
        auto rows = col_rows(c);
        auto it = std::lower_bound(rows.begin(), rows.end(), r);
        if (it == rows.end() || *it != r) return 0.0;
        return values_[static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(c)] +
                                                (it - rows.begin()))];
    }

    bool has_entry(index_t r, index_t c) const {
        auto rows = col_rows(c);
        return std::binary_search(rows.begin(), rows.end(), r);
    }

    SparseMatrix transposed() const {
        std::vector<index_t> ptr(static_cast<std::size_t>(nrows_) + 1, 0);
        for (index_t r : rows_) ++ptr[static_cast<std::size_t>(r) + 1];
        for (std::size_t i = 0; i < static_cast<std::size_t>(nrows_); ++i) ptr[i + 1] += ptr[i];
        std::vector<index_t> out_rows(rows_.size());
        std::vector<double> out_vals(values_.size());
        std::vector<index_t> next(ptr.begin(), ptr.end() - 1);
        for (index_t j = 0; j < ncols_; ++j) {
            auto rows = col_rows(j);
            auto vals = col_values(j);
            for (std::size_t k = 0; k < rows.size(); ++k) {
                const auto pos =
                    static_cast<std::size_t>(next[static_cast<std::size_t>(rows[k])]++);
                out_rows[pos] = j;
                out_vals[pos] = vals[k];
            }
        }
        SparseMatrix t(ncols_, nrows_);
        t.col_ptr_ = std::move(ptr);
        t.rows_ = std::move(out_rows);
        t.values_ = std::move(out_vals);
        return t;
    }

    bool is_pattern_symmetric() const {
        if (nrows_ != ncols_) return false;
        for (index_t j = 0; j < ncols_; ++j)
            for (index_t r : col_rows(j))
                if (!has_entry(j, r)) return false;
        return true;
    }

    bool is_value_symmetric() const {
        if (!is_pattern_symmetric()) return false;
        for (index_t j = 0; j < ncols_; ++j) {
            auto rows = col_rows(j);
            auto vals = col_values(j);
            for (std::size_t k = 0; k < rows.size(); ++k)
                if (get(j, rows[k]) != vals[k]) return false;
        }
        return true;
    }

    bool is_diagonal() const {
        for (index_t j = 0; j < ncols_; ++j)
            for (index_t r : col_rows(j))
                if (r != j) return false;
        return true;
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(nrows_, ncols_);
        for (index_t j = 0; j < ncols_; ++j) {
            auto rows = col_rows(j);
            auto vals = col_values(j);
            for (std::size_t k = 0; k < rows.size(); ++k) d(rows[k], j) = vals[k];
        }
        return d;
    }

private:
    index_t nrows_ = 0;
    index_t ncols_ = 0;
    std::vector<index_t> col_ptr_{0};
    std::vector<index_t> rows_;
    std::vector<double> values_;
};

/// The sparsity pattern of a matrix. Value mode reports entries whose stored
/// value is nonzero; structural mode reports every explicit entry.
inline SparsePattern ones(const SparseMatrix& m, PatternMode mode = PatternMode::value) {
    std::vector<index_t> ptr(static_cast<std::size_t>(m.ncols()) + 1, 0);
    std::vector<index_t> rows;
    rows.reserve(static_cast<std::size_t>(m.nnz()));
    for (index_t j = 0; j < m.ncols(); ++j) {
        auto r = m.col_rows(j);
        auto v = m.col_values(j);
        for (std::size_t k = 0; k < r.size(); ++k)
            if (mode == PatternMode::structural || v[k] != 0.0) rows.push_back(r[k]);
        ptr[static_cast<std::size_t>(j) + 1] = static_cast<index_t>(rows.size());
    }
    return SparsePattern::from_csc(m.nrows(), m.ncols(), std::move(ptr), std::move(rows));
}

/// First stored negative entry, if any.
inline std::optional<Coord> find_negative_entry(const SparseMatrix& m) {
    for (index_t j = 0; j < m.ncols(); ++j) {
        auto rows = m.col_rows(j);
        auto vals = m.col_values(j);
        for (std::size_t k = 0; k < rows.size(); ++k)
            if (vals[k] < 0.0) return Coord{rows[k], j};
    }
    return std::nullopt;
}

inline void require_nonnegative(const SparseMatrix& m, const char* name) {
    if (auto neg = find_negative_entry(m)) {
        throw std::invalid_argument(std::string(name) + ": negative entry at (" +
                                    std::to_string(neg->row) + ", " + std::to_string(neg->col) +
                                    ")");
    }
}

/// Computed sparse product A * B: the result holds an explicit entry at every
/// position the boolean pattern product has, even where values cancel to 0.
inline SparseMatrix matmul(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.ncols() != b.nrows())
        throw std::invalid_argument("matmul: inner dimension mismatch");
    std::vector<index_t> ptr(static_cast<std::size_t>(b.ncols()) + 1, 0);
    std::vector<index_t> rows;
    std::vector<double> values;
    std::vector<double> acc(static_cast<std::size_t>(a.nrows()), 0.0);
    std::vector<index_t> mark(static_cast<std::size_t>(a.nrows()), -1);
    std::vector<index_t> col_rows;
    for (index_t j = 0; j < b.ncols(); ++j) {
        col_rows.clear();
        auto brows = b.col_rows(j);
        auto bvals = b.col_values(j);
        for (std::size_t kb = 0; kb < brows.size(); ++kb) {
            const index_t k = brows[kb];
            const double bv = bvals[kb];
            auto arows = a.col_rows(k);
            auto avals = a.col_values(k);
            for (std::size_t ka = 0; ka < arows.size(); ++ka) {
                const index_t i = arows[ka];
                if (mark[static_cast<std::size_t>(i)] != j) {
                    mark[static_cast<std::size_t>(i)] = j;
                    acc[static_cast<std::size_t>(i)] = 0.0;
                    col_rows.push_back(i);
                }
                acc[static_cast<std::size_t>(i)] += avals[ka] * bv;
            }
        }
        std::sort(col_rows.begin(), col_rows.end());
        for (index_t i : col_rows) {
            rows.push_back(i);
            values.push_back(acc[static_cast<std::size_t>(i)]);
        }
        ptr[static_cast<std::size_t>(j) + 1] = static_cast<index_t>(rows.size());
    }
    return SparseMatrix::from_csc(a.nrows(), b.ncols(), std::move(ptr), std::move(rows),
                                  std::move(values));
}

/// Computed sparse sum A + B: union of entry sets, values added; entries that
/// cancel stay stored as explicit zeros.
inline SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.nrows() != b.nrows() || a.ncols() != b.ncols())
        throw std::invalid_argument("add: dimension mismatch");
    std::vector<index_t> ptr(static_cast<std::size_t>(a.ncols()) + 1, 0);
    std::vector<index_t> rows;
    std::vector<double> values;
    for (index_t j = 0; j < a.ncols(); ++j) {
        auto ra = a.col_rows(j);
        auto va = a.col_values(j);
        auto rb = b.col_rows(j);
        auto vb = b.col_values(j);
        std::size_t ia = 0, ib = 0;
        while (ia < ra.size() || ib < rb.size()) {
            if (ib == rb.size() || (ia < ra.size() && ra[ia] < rb[ib])) {
                rows.push_back(ra[ia]);
                values.push_back(va[ia]);
                ++ia;
            } else if (ia == ra.size() || rb[ib] < ra[ia]) {
                rows.push_back(rb[ib]);
                values.push_back(vb[ib]);
                ++ib;
            } else {
                rows.push_back(ra[ia]);
                values.push_back(va[ia] + vb[ib]);
                ++ia;
                ++ib;
            }
        }
        ptr[static_cast<std::size_t>(j) + 1] = static_cast<index_t>(rows.size());
    }
    return SparseMatrix::from_csc(a.nrows(), a.ncols(), std::move(ptr), std::move(rows),
                                  std::move(values));
}

/// Scale row i of M by d[i] (left-multiplication by diag(d)).
inline SparseMatrix scale_rows(const SparseMatrix& m, std::span<const double> d) {
    if (static_cast<index_t>(d.size()) != m.nrows())
        throw std::invalid_argument("scale_rows: dimension mismatch");
    std::vector<double> values(m.values());
    const auto& rows = m.row_indices();
    for (std::size_t k = 0; k < values.size(); ++k)
        values[k] *= d[static_cast<std::size_t>(rows[k])];
    return SparseMatrix::from_csc(m.nrows(), m.ncols(), m.col_ptr(), m.row_indices(),
                                  std::move(values));
}

/// Symmetric reindexing PMP^T: entry (i, j) moves to (fwd(i), fwd(j)).
/// Structural entries are carried through unchanged.
inline SparseMatrix permute_symmetric(const SparseMatrix& m, const Permutation& p) {
    if (m.nrows() != m.ncols() || p.size() != m.nrows())
        throw std::invalid_argument("permute_symmetric: dimension mismatch");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(m.nnz()));
    for (index_t j = 0; j < m.ncols(); ++j) {
        auto rows = m.col_rows(j);
        auto vals = m.col_values(j);
        for (std::size_t k = 0; k < rows.size(); ++k)
            t.push_back({p.fwd(rows[k]), p.fwd(j), vals[k]});
    }
    return SparseMatrix::from_triplets(m.nrows(), m.ncols(), std::move(t));
}

/// Row reindexing PM: row i moves to row fwd(i).
inline SparseMatrix permute_rows(const SparseMatrix& m, const Permutation& p) {
    if (p.size() != m.nrows()) throw std::invalid_argument("permute_rows: dimension mismatch");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(m.nnz()));
    for (index_t j = 0; j < m.ncols(); ++j) {
        auto rows = m.col_rows(j);
        auto vals = m.col_values(j);
        for (std::size_t k = 0; k < rows.size(); ++k) t.push_back({p.fwd(rows[k]), j, vals[k]});
    }
    return SparseMatrix::from_triplets(m.nrows(), m.ncols(), std::move(t));
}

/// ones(A^T A) for nonnegative A, computed as the boolean pattern product
/// ones(A^T) * ones(A). Nonnegativity rules out cancellation, so the boolean
/// product is exact; a negative entry is a precondition violation.
inline SparsePattern gram_pattern(const SparseMatrix& a) {
    require_nonnegative(a, "gram_pattern");
    SparsePattern pa = ones(a, PatternMode::structural);
    return pattern_mul(pa.transposed(), pa);
}

}  // namespace takvar
