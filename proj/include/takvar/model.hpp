#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "takvar/sparse_matrix.hpp"
#include "takvar/sparse_pattern.hpp"
#include "takvar/types.hpp"

namespace takvar {

/// The quadruple every variance engine consumes, for the model
///   Z = B eta + eps,   eta ~ Gau(0, Q^{-1}),   eps ~ Gau(0, R^{-1}),
/// with predictions Y = A eta. A is N x n, B is m x n, Q is the n x n prior
/// precision, R the m x m diagonal error precision.
struct HierarchicalModel {
    SparseMatrix A;
    SparseMatrix B;
    SparseMatrix Q;
    SparseMatrix R;

    index_t n() const { return Q.nrows(); }
    index_t m() const { return B.nrows(); }
    index_t N() const { return A.nrows(); }
};

inline void validate_model(const HierarchicalModel& model) {
    const index_t n = model.Q.nrows();
    if (model.Q.ncols() != n) throw std::invalid_argument("model: Q not square");
    if (model.A.ncols() != n) throw std::invalid_argument("model: A column count != dim(Q)");
    if (model.B.ncols() != n) throw std::invalid_argument("model: B column count != dim(Q)");
    if (model.R.nrows() != model.B.nrows() || model.R.ncols() != model.B.nrows())
        throw std::invalid_argument("model: R must be m x m");
    require_nonnegative(model.A, "model A");
    require_nonnegative(model.B, "model B");
    if (!model.Q.is_value_symmetric()) throw std::invalid_argument("model: Q not symmetric");
    for (index_t j = 0; j < n; ++j)
        if (!(model.Q.get(j, j) > 0.0))
            throw std::invalid_argument("model: Q diagonal not positive");
    if (!model.R.is_diagonal()) throw std::invalid_argument("model: R not diagonal");
    for (index_t j = 0; j < model.R.ncols(); ++j)
        if (!(model.R.get(j, j) > 0.0))
            throw std::invalid_argument("model: R diagonal not positive");
}

inline HierarchicalModel make_model(SparseMatrix A, SparseMatrix B, SparseMatrix Q,
                                    SparseMatrix R) {
    HierarchicalModel model{std::move(A), std::move(B), std::move(Q), std::move(R)};
    validate_model(model);
    return model;
}

/// Assemble the computed posterior precision P^c = B^T R B + Q.
///
/// The result's structural pattern is the computed-operation pattern (boolean
/// product union ones(Q)); entries that cancel algebraically remain stored as
/// zeros. The product values are symmetrized pairwise so P^c is
/// value-symmetric to the bit, which the factorization's symmetry assumptions
/// rely on; this perturbs nothing beyond roundoff already present.
inline SparseMatrix assemble_precision(const HierarchicalModel& model) {
    validate_model(model);
    std::vector<double> r_diag(static_cast<std::size_t>(model.m()));
    for (index_t j = 0; j < model.m(); ++j) r_diag[static_cast<std::size_t>(j)] = model.R.get(j, j);

    SparseMatrix c = matmul(model.B.transposed(), scale_rows(model.B, r_diag));
    SparseMatrix ct = c.transposed();  // same pattern: gram products are pattern-symmetric
    std::vector<double> sym_vals(c.values().size());
    for (std::size_t k = 0; k < sym_vals.size(); ++k)
        sym_vals[k] = 0.5 * (c.values()[k] + ct.values()[k]);
    c = SparseMatrix::from_csc(c.nrows(), c.ncols(), c.col_ptr(), c.row_indices(),
                               std::move(sym_vals));
    return add(c, model.Q);
}

/// Result of one sufficient-condition check: does the covering pattern
/// dominate ones(A^T A)?
struct ConditionCheck {
    bool holds = true;
    std::vector<Coord> witnesses;  // entries of ones(A^T A) missing from the cover
};

/// Case 1: every pair of coefficients co-active in a row of A is co-observed
/// in some row of B, i.e. ones(B^T B) >= ones(A^T A).
inline ConditionCheck check_case1(const SparseMatrix& a, const SparseMatrix& b) {
    const SparsePattern ga = gram_pattern(a);
    const SparsePattern gb = gram_pattern(b);
    ConditionCheck res;
    res.witnesses = pattern_difference(ga, gb);
    res.holds = res.witnesses.empty();
    return res;
}

struct Case2Check : ConditionCheck {
    /// Corollary special case: ones(A) is a permutation pattern, which makes
    /// A^T A diagonal and the condition automatic.
    bool a_is_permutation = false;
};

/// Case 2: every pair of coefficients co-active in a row of A is an edge of
/// the precision graph, i.e. ones(Q) >= ones(A^T A). Patterns are taken in
/// structural mode, so padded zero entries of Q count.
inline Case2Check check_case2(const SparseMatrix& a, const SparseMatrix& q) {
    if (!q.is_pattern_symmetric()) throw std::invalid_argument("check_case2: Q not symmetric");
    Case2Check res;
    res.a_is_permutation = is_permutation_pattern(ones(a, PatternMode::structural));
    res.witnesses = pattern_difference(gram_pattern(a), ones(q, PatternMode::structural));
    res.holds = res.witnesses.empty();
    return res;
}

/// The full exactness report for a model.
struct ConditionReport {
    bool case1 = false;    // ones(B^T B) >= ones(A^T A)
    bool case2 = false;    // ones(Q)     >= ones(A^T A)
    bool theorem = false;  // ones(B^T B) union ones(Q) >= ones(A^T A)
    bool a_is_permutation = false;
    std::vector<Coord> witnesses_case1;
    std::vector<Coord> witnesses_case2;
    std::vector<Coord> witnesses_theorem;
    /// Entries (both orientations) that pad_q would force into ones(Q).
    index_t padding_required = 0;
};

/// Check the theorem condition: every (j, k) in ones(A^T A) must be covered
/// by ones(B^T B) or ones(Q). The two sufficient cases are reported alongside.
inline ConditionReport check_theorem(const SparseMatrix& a, const SparseMatrix& b,
                                     const SparseMatrix& q) {
    if (!q.is_pattern_symmetric()) throw std::invalid_argument("check_theorem: Q not symmetric");
    const SparsePattern ga = gram_pattern(a);
    const SparsePattern gb = gram_pattern(b);
    const SparsePattern pq = ones(q, PatternMode::structural);

    ConditionReport rep;
    rep.a_is_permutation = is_permutation_pattern(ones(a, PatternMode::structural));
    rep.witnesses_case1 = pattern_difference(ga, gb);
    rep.case1 = rep.witnesses_case1.empty();
    rep.witnesses_case2 = pattern_difference(ga, pq);
    rep.case2 = rep.witnesses_case2.empty();
    rep.padding_required = static_cast<index_t>(rep.witnesses_case2.size());
    rep.witnesses_theorem = pattern_difference(ga, pattern_add(gb, pq));
    rep.theorem = rep.witnesses_theorem.empty();
    return rep;
}

/// Insert explicit zero-valued entries into Q at every position of
/// ones(A^T A) missing from ones(Q), symmetrized. Numeric values of Q are
/// untouched, so assembled precisions and variances are unchanged; only the
/// structural pattern (and hence L^s) grows, which is exactly what makes the
/// sparse-inverse-subset route applicable.
inline SparseMatrix pad_q(const SparseMatrix& q, const SparseMatrix& a) {
    if (!q.is_pattern_symmetric()) throw std::invalid_argument("pad_q: Q not symmetric");
    const std::vector<Coord> missing =
        pattern_difference(gram_pattern(a), ones(q, PatternMode::structural));
    if (missing.empty()) return q;

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(q.nnz()) + 2 * missing.size());
    for (index_t j = 0; j < q.ncols(); ++j) {
        auto rows = q.col_rows(j);
        auto vals = q.col_values(j);
        for (std::size_t k = 0; k < rows.size(); ++k) t.push_back({rows[k], j, vals[k]});
    }
    for (const Coord& c : missing) {
        t.push_back({c.row, c.col, 0.0});
        if (c.row != c.col && !q.has_entry(c.col, c.row)) t.push_back({c.col, c.row, 0.0});
    }
    return SparseMatrix::from_triplets(q.nrows(), q.ncols(), std::move(t));
}

}  // namespace takvar
