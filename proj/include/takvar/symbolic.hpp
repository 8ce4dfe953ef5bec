#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "takvar/sparse_pattern.hpp"
#include "takvar/types.hpp"

namespace takvar {

/// Elimination tree of a symmetric pattern: parent[j] is the first row index
/// above j in column j of the Cholesky factor, -1 for roots.
inline std::vector<index_t> elimination_tree(const SparsePattern& p) {
    const index_t n = p.ncols();
    std::vector<index_t> parent(static_cast<std::size_t>(n), -1);
    std::vector<index_t> ancestor(static_cast<std::size_t>(n), -1);
    for (index_t k = 0; k < n; ++k) {
        for (index_t i : p.col(k)) {
            if (i >= k) break;  // upper-triangle entries only (rows sorted)
            index_t node = i;
            while (node != -1 && node < k) {
                const index_t next = ancestor[static_cast<std::size_t>(node)];
                ancestor[static_cast<std::size_t>(node)] = k;  // path compression
                if (next == -1) parent[static_cast<std::size_t>(node)] = k;
                node = next;
            }
        }
    }
    return parent;
}

/// Fill-reducing permutation, elimination tree, and the full structural
/// pattern L^s of the Cholesky factor (lower triangular, diagonal included).
///
/// L^s is a property of the sparsity pattern alone: it marks every entry that
/// is nonzero in the factor of a generic SPD matrix with this pattern, and it
/// is what the numeric factorization and the Takahashi sweep allocate. All
/// index data is in the permuted space.
struct SymbolicFactor {
    Permutation perm;
    std::vector<index_t> etree;
    SparsePattern pattern;

    index_t size() const { return pattern.ncols(); }
    index_t fill_nnz() const { return pattern.nnz(); }
};

namespace detail {

inline SparsePattern permute_pattern_symmetric(const SparsePattern& p, const Permutation& perm) {
    std::vector<Coord> entries;
    entries.reserve(static_cast<std::size_t>(p.nnz()));
    for (index_t j = 0; j < p.ncols(); ++j)
        for (index_t r : p.col(j)) entries.push_back({perm.fwd(r), perm.fwd(j)});
    return SparsePattern::from_entries(p.nrows(), p.ncols(), std::move(entries));
}

}  // namespace detail

/// Symbolic Cholesky factorization of a symmetric pattern under a given
/// permutation.
///
/// Row i of L^s is computed by walking the elimination tree upward from each
/// column k < i adjacent to i, stopping at already-visited nodes; this is the
/// row-subtree characterization of fill and is equivalent to testing, for
/// each pair i > k, whether the "future" index set separates i from k in the
/// pattern graph.
inline SymbolicFactor symbolic_cholesky(const SparsePattern& p, const Permutation& perm) {
    if (!p.is_symmetric())
        throw std::invalid_argument("symbolic_cholesky: pattern not symmetric");
    if (!p.has_full_diagonal())
        throw std::invalid_argument("symbolic_cholesky: missing diagonal entry");
    if (perm.size() != p.ncols())
        throw std::invalid_argument("symbolic_cholesky: permutation size mismatch");

    const index_t n = p.ncols();
    const SparsePattern pp =
        perm.is_identity() ? p : detail::permute_pattern_symmetric(p, perm);

    SymbolicFactor sym;
    sym.perm = perm;
    sym.etree = elimination_tree(pp);

    // rows_of[i] = column indices of row i of L^s (ascending, diagonal last)
    std::vector<index_t> mark(static_cast<std::size_t>(n), -1);
    std::vector<index_t> col_counts(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<index_t>> rows_of(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i) {
        auto& row = rows_of[static_cast<std::size_t>(i)];
        mark[static_cast<std::size_t>(i)] = i;
        for (index_t k : pp.col(i)) {
            if (k >= i) break;
            index_t node = k;
            while (node != -1 && node < i && mark[static_cast<std::size_t>(node)] != i) {
                mark[static_cast<std::size_t>(node)] = i;
                row.push_back(node);
                node = sym.etree[static_cast<std::size_t>(node)];
            }
        }
        std::sort(row.begin(), row.end());
        row.push_back(i);
        for (index_t c : row) ++col_counts[static_cast<std::size_t>(c)];
    }

    std::vector<index_t> ptr(static_cast<std::size_t>(n) + 1, 0);
    for (index_t j = 0; j < n; ++j)
        ptr[static_cast<std::size_t>(j) + 1] =
            ptr[static_cast<std::size_t>(j)] + col_counts[static_cast<std::size_t>(j)];
    std::vector<index_t> rows(static_cast<std::size_t>(ptr[static_cast<std::size_t>(n)]));
    std::vector<index_t> next(ptr.begin(), ptr.end() - 1);
    for (index_t i = 0; i < n; ++i)
        for (index_t c : rows_of[static_cast<std::size_t>(i)])
            rows[static_cast<std::size_t>(next[static_cast<std::size_t>(c)]++)] = i;

    sym.pattern = SparsePattern::from_csc(n, n, std::move(ptr), std::move(rows));
    return sym;
}

}  // namespace takvar
