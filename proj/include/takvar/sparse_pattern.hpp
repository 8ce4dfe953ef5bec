#pragma once

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "takvar/types.hpp"

namespace takvar {

/// Binary sparsity structure of a matrix, stored as a compressed-column
/// skeleton (column pointers + sorted row indices, no values).
///
/// This is the codomain of the `ones` function: a pattern records which
/// entries of a matrix are explicitly stored/computed, independent of their
/// numeric values.
class SparsePattern {
public:
    SparsePattern() = default;

    SparsePattern(index_t nrows, index_t ncols)
        : nrows_(nrows), ncols_(ncols), col_ptr_(static_cast<std::size_t>(ncols) + 1, 0) {
        if (nrows < 0 || ncols < 0)
            throw std::invalid_argument("SparsePattern: negative dimension");
    }

    /// Build from an unsorted entry list; duplicates are collapsed.
    static SparsePattern from_entries(index_t nrows, index_t ncols, std::vector<Coord> entries) {
        std::sort(entries.begin(), entries.end());
        entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
        SparsePattern p(nrows, ncols);
        p.rows_.reserve(entries.size());
        for (const Coord& e : entries) {
            if (e.row < 0 || e.row >= nrows || e.col < 0 || e.col >= ncols)
                throw std::invalid_argument("SparsePattern: entry out of bounds");
            ++p.col_ptr_[static_cast<std::size_t>(e.col) + 1];
            p.rows_.push_back(e.row);
        }
        for (std::size_t j = 0; j < static_cast<std::size_t>(ncols); ++j)
            p.col_ptr_[j + 1] += p.col_ptr_[j];
        return p;
    }

    /// Adopt prebuilt CSC arrays. Row indices must be sorted within each column.
    static SparsePattern from_csc(index_t nrows, index_t ncols, std::vector<index_t> col_ptr,
                                  std::vector<index_t> rows) {
        SparsePattern p(nrows, ncols);
        if (col_ptr.size() != static_cast<std::size_t>(ncols) + 1 || col_ptr.front() != 0 ||
            col_ptr.back() != static_cast<index_t>(rows.size()))
            throw std::invalid_argument("SparsePattern: malformed column pointers");
        p.col_ptr_ = std::move(col_ptr);
        p.rows_ = std::move(rows);
        for (index_t j = 0; j < ncols; ++j) {
            auto c = p.col(j);
            for (std::size_t k = 0; k < c.size(); ++k) {
                if (c[k] < 0 || c[k] >= nrows)
                    throw std::invalid_argument("SparsePattern: row index out of bounds");
                if (k > 0 && c[k] <= c[k - 1])
                    throw std::invalid_argument("SparsePattern: rows not strictly sorted");
            }
        }
        return p;
    }

    index_t nrows() const { return nrows_; }
    index_t ncols() const { return ncols_; }
    index_t nnz() const { return static_cast<index_t>(rows_.size()); }

    std::span<const index_t> col(index_t j) const {
        const auto lo = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j)]);
        const auto hi = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j) + 1]);
        return {rows_.data() + lo, hi - lo};
    }

    const std::vector<index_t>& col_ptr() const { return col_ptr_; }
    const std::vector<index_t>& row_indices() const { return rows_; }

    bool has(index_t r, index_t c) const {
        auto span = col(c);
        return std::binary_search(span.begin(), span.end(), r);
    }

    /// Position of entry (r, c) in the flat entry array, or -1.
    index_t find(index_t r, index_t c) const {
        auto span = col(c);
        auto it = std::lower_bound(span.begin(), span.end(), r);
        if (it == span.end() || *it != r) return -1;
        return col_ptr_[static_cast<std::size_t>(c)] + (it - span.begin());
    }

    /// Entries in column-major order.
    std::vector<Coord> entries() const {
        std::vector<Coord> out;
        out.reserve(rows_.size());
        for (index_t j = 0; j < ncols_; ++j)
            for (index_t r : col(j)) out.push_back({r, j});
        return out;
    }

    bool is_symmetric() const {
        if (nrows_ != ncols_) return false;
        for (index_t j = 0; j < ncols_; ++j)
            for (index_t r : col(j))
                if (!has(j, r)) return false;
        return true;
    }

    bool has_full_diagonal() const {
        if (nrows_ != ncols_) return false;
        for (index_t j = 0; j < ncols_; ++j)
            if (!has(j, j)) return false;
        return true;
    }

    SparsePattern transposed() const {
        std::vector<index_t> ptr(static_cast<std::size_t>(nrows_) + 1, 0);
        for (index_t r : rows_) ++ptr[static_cast<std::size_t>(r) + 1];
        for (std::size_t i = 0; i < static_cast<std::size_t>(nrows_); ++i) ptr[i + 1] += ptr[i];
        std::vector<index_t> out_rows(rows_.size());
        std::vector<index_t> next(ptr.begin(), ptr.end() - 1);
        for (index_t j = 0; j < ncols_; ++j)
            for (index_t r : col(j))
                out_rows[static_cast<std::size_t>(next[static_cast<std::size_t>(r)]++)] = j;
        SparsePattern t(ncols_, nrows_);
        t.col_ptr_ = std::move(ptr);
        t.rows_ = std::move(out_rows);
        return t;
    }

private:
    index_t nrows_ = 0;
    index_t ncols_ = 0;
    std::vector<index_t> col_ptr_{0};
    std::vector<index_t> rows_;
};

namespace detail {

inline void require_same_shape(const SparsePattern& a, const SparsePattern& b, const char* op) {
    if (a.nrows() != b.nrows() || a.ncols() != b.ncols())
        throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}

}  // namespace detail

/// Computed-sum pattern: the set union of the two entry sets. No cancellation
/// can remove an entry, so this is exact for any computed A + B.
inline SparsePattern pattern_add(const SparsePattern& a, const SparsePattern& b) {
    detail::require_same_shape(a, b, "pattern_add");
    std::vector<index_t> ptr(static_cast<std::size_t>(a.ncols()) + 1, 0);
    std::vector<index_t> rows;
    rows.reserve(static_cast<std::size_t>(a.nnz() + b.nnz()));
    for (index_t j = 0; j < a.ncols(); ++j) {
        auto ca = a.col(j);
        auto cb = b.col(j);
        std::set_union(ca.begin(), ca.end(), cb.begin(), cb.end(), std::back_inserter(rows));
        ptr[static_cast<std::size_t>(j) + 1] = static_cast<index_t>(rows.size());
    }
    return SparsePattern::from_csc(a.nrows(), a.ncols(), std::move(ptr), std::move(rows));
}

/// Computed-product pattern: boolean matrix product. Entry (i, j) is present
/// iff some k has (i, k) in `a` and (k, j) in `b`.
inline SparsePattern pattern_mul(const SparsePattern& a, const SparsePattern& b) {
    if (a.ncols() != b.nrows())
        throw std::invalid_argument("pattern_mul: inner dimension mismatch");
    std::vector<index_t> ptr(static_cast<std::size_t>(b.ncols()) + 1, 0);
    std::vector<index_t> rows;
    std::vector<index_t> mark(static_cast<std::size_t>(a.nrows()), -1);
    std::vector<index_t> col_rows;
    for (index_t j = 0; j < b.ncols(); ++j) {
        col_rows.clear();
        for (index_t k : b.col(j)) {
            for (index_t i : a.col(k)) {
                if (mark[static_cast<std::size_t>(i)] != j) {
                    mark[static_cast<std::size_t>(i)] = j;
                    col_rows.push_back(i);
                }
            }
        }
        std::sort(col_rows.begin(), col_rows.end());
        rows.insert(rows.end(), col_rows.begin(), col_rows.end());
        ptr[static_cast<std::size_t>(j) + 1] = static_cast<index_t>(rows.size());
    }
    return SparsePattern::from_csc(a.nrows(), b.ncols(), std::move(ptr), std::move(rows));
}

struct PatternGeq {
    bool holds = true;
    /// One entry of `small` missing from `big`, when !holds.
    std::optional<Coord> witness;
};

/// Elementwise `big >= small` on binary patterns: every entry of `small` must
/// be present in `big`.
inline PatternGeq pattern_geq(const SparsePattern& big, const SparsePattern& small) {
    detail::require_same_shape(big, small, "pattern_geq");
    for (index_t j = 0; j < small.ncols(); ++j) {
        auto cs = small.col(j);
        auto cb = big.col(j);
        std::size_t ib = 0;
        for (index_t r : cs) {
            while (ib < cb.size() && cb[ib] < r) ++ib;
            if (ib == cb.size() || cb[ib] != r) return {false, Coord{r, j}};
        }
    }
    return {true, std::nullopt};
}

/// Entries of `a` that are not in `b`, column-major.
inline std::vector<Coord> pattern_difference(const SparsePattern& a, const SparsePattern& b) {
    detail::require_same_shape(a, b, "pattern_difference");
    std::vector<Coord> out;
    for (index_t j = 0; j < a.ncols(); ++j) {
        auto ca = a.col(j);
        auto cb = b.col(j);
        std::size_t ib = 0;
        for (index_t r : ca) {
            while (ib < cb.size() && cb[ib] < r) ++ib;
            if (ib == cb.size() || cb[ib] != r) out.push_back({r, j});
        }
    }
    return out;
}

inline SparsePattern symmetric_closure(const SparsePattern& p) {
    if (p.nrows() != p.ncols())
        throw std::invalid_argument("symmetric_closure: pattern not square");
    return pattern_add(p, p.transposed());
}

inline SparsePattern lower_triangle(const SparsePattern& p) {
    std::vector<index_t> ptr(static_cast<std::size_t>(p.ncols()) + 1, 0);
    std::vector<index_t> rows;
    for (index_t j = 0; j < p.ncols(); ++j) {
        for (index_t r : p.col(j))
            if (r >= j) rows.push_back(r);
        ptr[static_cast<std::size_t>(j) + 1] = static_cast<index_t>(rows.size());
    }
    return SparsePattern::from_csc(p.nrows(), p.ncols(), std::move(ptr), std::move(rows));
}

/// Max |row - col| over entries; 0 for diagonal or empty patterns.
inline index_t bandwidth(const SparsePattern& p) {
    index_t b = 0;
    for (index_t j = 0; j < p.ncols(); ++j)
        for (index_t r : p.col(j)) b = std::max(b, std::abs(r - j));
    return b;
}

inline SparsePattern identity_pattern(index_t n) {
    std::vector<index_t> ptr(static_cast<std::size_t>(n) + 1);
    std::vector<index_t> rows(static_cast<std::size_t>(n));
    for (index_t i = 0; i <= n; ++i) ptr[static_cast<std::size_t>(i)] = i;
    for (index_t i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
    return SparsePattern::from_csc(n, n, std::move(ptr), std::move(rows));
}

/// True if every row and every column holds exactly one entry (requires square).
inline bool is_permutation_pattern(const SparsePattern& p) {
    if (p.nrows() != p.ncols()) return false;
    std::vector<char> row_seen(static_cast<std::size_t>(p.nrows()), 0);
    for (index_t j = 0; j < p.ncols(); ++j) {
        auto c = p.col(j);
        if (c.size() != 1) return false;
        if (row_seen[static_cast<std::size_t>(c[0])]) return false;
        row_seen[static_cast<std::size_t>(c[0])] = 1;
    }
    return true;
}

}  // namespace takvar
