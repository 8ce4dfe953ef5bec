#pragma once

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "takvar/cholesky.hpp"
#include "takvar/sparse_pattern.hpp"
#include "takvar/types.hpp"

namespace takvar {

/// The sparse inverse subset: entries of P^{-1} on the symmetric closure of
/// the factor pattern L^s, computed without ever forming the full inverse.
///
/// Index data lives in the permuted space of the factor; `get` translates
/// from original indices. Entries outside the subset read as 0 — callers that
/// need exact values must first establish that the entries they touch are
/// inside the subset (that is the whole point of the condition checks).
struct SparseInverseSubset {
    Permutation perm;
    SparsePattern pattern;       // symmetric closure of L^s
    std::vector<double> values;  // aligned with pattern entries
    std::uint64_t mult_ops = 0;

    index_t size() const { return pattern.ncols(); }

    double get_permuted(index_t i, index_t j) const {
        const index_t k = pattern.find(i, j);
        return k < 0 ? 0.0 : values[static_cast<std::size_t>(k)];
    }

    double get(index_t i, index_t j) const {
        return get_permuted(perm.fwd(i), perm.fwd(j));
    }
};

/// Takahashi recursions.
///
/// Sweeps columns i = n-1, ..., 0 of the factor. For the rows j > i of
/// column i (descending), the off-diagonal terms are
///     S~_ij = -(1/L_ii) * sum_{k > i, L_ki != 0} L_ki S~_kj,
/// and then the diagonal term
///     S~_ii = 1/L_ii^2 - (1/L_ii) * sum_{k > i} L_ki S~_ki.
/// Every S~_kj the sums read has min(k, j) > i and both k and j in the
/// closure of column i's pattern, so it was produced by an earlier step of
/// the sweep — the elimination-tree closure of L^s guarantees the entry is
/// stored. Both symmetric halves are written via a precomputed transpose map.
inline SparseInverseSubset takahashi(const NumericFactor& f) {
    const index_t n = f.size();
    const SparsePattern& ls = f.symbolic.pattern;

    SparseInverseSubset s;
    s.perm = f.symbolic.perm;
    s.pattern = symmetric_closure(ls);
    s.values.assign(static_cast<std::size_t>(s.pattern.nnz()), 0.0);

    const auto& cp = s.pattern.col_ptr();
    const auto& cr = s.pattern.row_indices();

    // trans[e] = flat position of the mirrored entry of e
    std::vector<index_t> trans(static_cast<std::size_t>(s.pattern.nnz()));
    {
        std::vector<index_t> next(cp.begin(), cp.end() - 1);
        for (index_t j = 0; j < n; ++j) {
            const index_t end = cp[static_cast<std::size_t>(j) + 1];
            for (index_t e = cp[static_cast<std::size_t>(j)]; e < end; ++e) {
                const index_t r = cr[static_cast<std::size_t>(e)];
                trans[static_cast<std::size_t>(next[static_cast<std::size_t>(r)]++)] = e;
            }
        }
    }

    const auto& lp = ls.col_ptr();
    const auto& lr = ls.row_indices();
    std::uint64_t ops = 0;

    for (index_t i = n - 1; i >= 0; --i) {
        const index_t lbeg = lp[static_cast<std::size_t>(i)];
        const index_t lend = lp[static_cast<std::size_t>(i) + 1];
        const double lii = f.values[static_cast<std::size_t>(lbeg)];
        if (!(lii > 0.0)) throw not_spd_error("takahashi: zero diagonal in factor");
        const double inv_d = 1.0 / lii;
        const index_t below = lend - lbeg - 1;  // structural entries under the diagonal

        // positions of rows >= i within closure column i: its suffix
        const index_t cend = cp[static_cast<std::size_t>(i) + 1];
        const index_t cdiag = cend - below - 1;  // diagonal slot of closure column i
        assert(cr[static_cast<std::size_t>(cdiag)] == i);

        for (index_t t = below; t >= 1; --t) {
            const index_t j = lr[static_cast<std::size_t>(lbeg + t)];
            // sum_{k} L_ki * S~_kj over the below-diagonal rows k of column i,
            // walking closure column j in step with them.
            double sum = 0.0;
            index_t e = cp[static_cast<std::size_t>(j)];
            const index_t eend = cp[static_cast<std::size_t>(j) + 1];
            for (index_t q = lbeg + 1; q < lend; ++q) {
                const index_t k = lr[static_cast<std::size_t>(q)];
                while (e < eend && cr[static_cast<std::size_t>(e)] < k) ++e;
                assert(e < eend && cr[static_cast<std::size_t>(e)] == k);
                sum += f.values[static_cast<std::size_t>(q)] *
                       s.values[static_cast<std::size_t>(e)];
            }
            ops += static_cast<std::uint64_t>(below);
            const double sij = -inv_d * sum;
            const index_t pos = cdiag + t;  // entry (j, i) in closure column i
            s.values[static_cast<std::size_t>(pos)] = sij;
            s.values[static_cast<std::size_t>(trans[static_cast<std::size_t>(pos)])] = sij;
        }

        double dsum = 0.0;
        for (index_t t = 1; t <= below; ++t)
            dsum += f.values[static_cast<std::size_t>(lbeg + t)] *
                    s.values[static_cast<std::size_t>(cdiag + t)];
        ops += static_cast<std::uint64_t>(below);
        s.values[static_cast<std::size_t>(cdiag)] = inv_d * inv_d - inv_d * dsum;
    }

    s.mult_ops = ops;
    return s;
}

}  // namespace takvar
