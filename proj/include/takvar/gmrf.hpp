#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "takvar/cholesky.hpp"
#include "takvar/model.hpp"
#include "takvar/sparse_matrix.hpp"
#include "takvar/symbolic.hpp"
#include "takvar/types.hpp"

namespace takvar {

namespace detail {

/// SPD sanity check by attempted factorization in natural order.
inline void require_spd_by_factorization(const SparseMatrix& q, const char* what) {
    try {
        const SymbolicFactor sym =
            symbolic_cholesky(ones(q, PatternMode::structural), Permutation::identity(q.nrows()));
        (void)numeric_cholesky(q, sym);
    } catch (const not_spd_error&) {
        throw not_spd_error(std::string(what) + ": parameters give a non-SPD precision matrix");
    }
}

}  // namespace detail

/// Second-order CAR precision on a 1-D lattice: Q = tau (I - rho W) with
/// proximity weights 4 at lag 1 and 1 at lag 2 (out-of-range lags truncate at
/// the boundary). Pentadiagonal; at most 5 entries per row.
inline SparseMatrix car1d_second_order(index_t n, double rho, double tau) {
    if (n < 3) throw std::invalid_argument("car1d_second_order: n must be at least 3");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(5 * n));
    for (index_t i = 0; i < n; ++i) {
        if (i >= 2) t.push_back({i, i - 2, -tau * rho});
        if (i >= 1) t.push_back({i, i - 1, -tau * rho * 4.0});
        t.push_back({i, i, tau});
        if (i + 1 < n) t.push_back({i, i + 1, -tau * rho * 4.0});
        if (i + 2 < n) t.push_back({i, i + 2, -tau * rho});
    }
    SparseMatrix q = SparseMatrix::from_triplets(n, n, std::move(t));
    detail::require_spd_by_factorization(q, "car1d_second_order");
    return q;
}

/// Lattice of regions with optional population weights and per-level
/// membership maps (memberships[l][unit] = region index at aggregation
/// level l; levels ordered fine to coarse).
struct RegionGraph {
    index_t n = 0;
    std::vector<std::pair<index_t, index_t>> edges;  // undirected, no self-edges
    std::vector<double> weights;                     // size n, or empty
    std::vector<std::vector<index_t>> memberships;

    index_t level_count() const { return static_cast<index_t>(memberships.size()); }

    index_t regions_at(index_t level) const {
        const auto& m = memberships.at(static_cast<std::size_t>(level));
        index_t mx = -1;
        for (index_t r : m) mx = std::max(mx, r);
        return mx + 1;
    }

    std::vector<std::vector<index_t>> adjacency() const {
        std::vector<std::vector<index_t>> adj(static_cast<std::size_t>(n));
        for (auto [i, j] : edges) {
            adj[static_cast<std::size_t>(i)].push_back(j);
            adj[static_cast<std::size_t>(j)].push_back(i);
        }
        for (auto& a : adj) {
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
        }
        return adj;
    }

    /// Every fine-level region must map inside a single coarse-level region.
    bool is_nested(index_t fine_level, index_t coarse_level) const {
        const auto& fine = memberships.at(static_cast<std::size_t>(fine_level));
        const auto& coarse = memberships.at(static_cast<std::size_t>(coarse_level));
        std::vector<index_t> rep(static_cast<std::size_t>(regions_at(fine_level)), -1);
        for (index_t u = 0; u < n; ++u) {
            const index_t f = fine[static_cast<std::size_t>(u)];
            const index_t c = coarse[static_cast<std::size_t>(u)];
            if (rep[static_cast<std::size_t>(f)] == -1) {
                rep[static_cast<std::size_t>(f)] = c;
            } else if (rep[static_cast<std::size_t>(f)] != c) {
                return false;
            }
        }
        return true;
    }

    /// Nesting across all consecutive level pairs.
    bool is_nested() const {
        for (index_t l = 0; l + 1 < level_count(); ++l)
            if (!is_nested(l, l + 1)) return false;
        return true;
    }

    void validate() const {
        for (auto [i, j] : edges) {
            if (i < 0 || i >= n || j < 0 || j >= n)
                throw std::invalid_argument("RegionGraph: edge endpoint out of range");
            if (i == j) throw std::invalid_argument("RegionGraph: self-edge");
        }
        if (!weights.empty() && static_cast<index_t>(weights.size()) != n)
            throw std::invalid_argument("RegionGraph: weights size mismatch");
        for (double w : weights)
            if (w < 0.0) throw std::invalid_argument("RegionGraph: negative weight");
        for (const auto& m : memberships) {
            if (static_cast<index_t>(m.size()) != n)
                throw std::invalid_argument("RegionGraph: membership map not total");
            for (index_t r : m)
                if (r < 0) throw std::invalid_argument("RegionGraph: negative region index");
        }
    }
};

inline bool is_connected(const RegionGraph& g) {
    if (g.n == 0) return true;
    const auto adj = g.adjacency();
    std::vector<char> seen(static_cast<std::size_t>(g.n), 0);
    std::vector<index_t> stack{0};
    seen[0] = 1;
    index_t count = 1;
    while (!stack.empty()) {
        const index_t v = stack.back();
        stack.pop_back();
        for (index_t u : adj[static_cast<std::size_t>(v)]) {
            if (!seen[static_cast<std::size_t>(u)]) {
                seen[static_cast<std::size_t>(u)] = 1;
                ++count;
                stack.push_back(u);
            }
        }
    }
    return count == g.n;
}

/// First-order CAR precision Q = tau D_w (I - rho W~) on a region graph:
/// Q_jj = tau deg(j), Q_jk = -tau rho for j ~ k. Symmetric by construction;
/// SPD for |rho| < 1 (validated by factorization).
inline SparseMatrix car_first_order(const RegionGraph& graph, double rho, double tau) {
    graph.validate();
    if (!(std::abs(rho) < 1.0))
        throw std::invalid_argument("car_first_order: |rho| must be below 1");
    const auto adj = graph.adjacency();
    for (index_t v = 0; v < graph.n; ++v)
        if (adj[static_cast<std::size_t>(v)].empty())
            throw std::invalid_argument("car_first_order: isolated region " + std::to_string(v) +
                                        " makes the precision singular");
    std::vector<Triplet> t;
    for (index_t j = 0; j < graph.n; ++j) {
        t.push_back({j, j, tau * static_cast<double>(adj[static_cast<std::size_t>(j)].size())});
        for (index_t k : adj[static_cast<std::size_t>(j)]) t.push_back({k, j, -tau * rho});
    }
    SparseMatrix q = SparseMatrix::from_triplets(graph.n, graph.n, std::move(t));
    detail::require_spd_by_factorization(q, "car_first_order");
    return q;
}

/// Compactly supported bisquare basis on [0, 1].
struct Basis1D {
    std::vector<double> centroids;  // strictly increasing
    double aperture = 0.0;

    static Basis1D equispaced(index_t n) {
        if (n < 2) throw std::invalid_argument("Basis1D: need at least 2 functions");
        Basis1D b;
        b.centroids.resize(static_cast<std::size_t>(n));
        for (index_t i = 0; i < n; ++i)
            b.centroids[static_cast<std::size_t>(i)] =
                static_cast<double>(i) / static_cast<double>(n - 1);
        b.aperture = 1.0 / static_cast<double>(n);
        return b;
    }

    void validate() const {
        if (!(aperture > 0.0)) throw std::invalid_argument("Basis1D: aperture must be positive");
        for (std::size_t i = 1; i < centroids.size(); ++i)
            if (!(centroids[i] > centroids[i - 1]))
                throw std::invalid_argument("Basis1D: centroids not strictly increasing");
    }

    index_t size() const { return static_cast<index_t>(centroids.size()); }
};

/// phi(s; c, r) = (1 - (|s - c| / r)^2)^2 for |s - c| <= r, else no entry.
/// The support boundary |s - c| = r stores an explicit 0: the evaluation was
/// computed there, and the pattern algebra must see it.
inline SparseMatrix bisquare_eval(const Basis1D& basis, std::span<const double> locations) {
    basis.validate();
    for (double s : locations)
        if (s < 0.0 || s > 1.0)
            throw std::invalid_argument("bisquare_eval: location outside [0, 1]");
    const double r = basis.aperture;
    std::vector<Triplet> t;
    t.reserve(2 * locations.size());
    for (std::size_t k = 0; k < locations.size(); ++k) {
        const double s = locations[k];
        auto lo = std::lower_bound(basis.centroids.begin(), basis.centroids.end(), s - r);
        auto hi = std::upper_bound(basis.centroids.begin(), basis.centroids.end(), s + r);
        for (auto it = lo; it != hi; ++it) {
            const double u = std::abs(s - *it) / r;
            if (u > 1.0) continue;
            const double w = (1.0 - u * u);
            t.push_back({static_cast<index_t>(k),
                         static_cast<index_t>(it - basis.centroids.begin()), w * w});
        }
    }
    return SparseMatrix::from_triplets(static_cast<index_t>(locations.size()), basis.size(),
                                       std::move(t));
}

/// Row-stochastic weighted aggregation operator for one membership level:
/// row k averages the units of region k with weights w_i / sum of w over the
/// region's members.
inline SparseMatrix aggregation_matrix(const RegionGraph& graph, index_t level) {
    graph.validate();
    if (graph.weights.empty())
        throw std::invalid_argument("aggregation_matrix: graph has no weights");
    if (level < 0 || level >= graph.level_count())
        throw std::invalid_argument("aggregation_matrix: no such level");
    const auto& member = graph.memberships[static_cast<std::size_t>(level)];
    const index_t nregions = graph.regions_at(level);

    std::vector<double> totals(static_cast<std::size_t>(nregions), 0.0);
    for (index_t u = 0; u < graph.n; ++u)
        totals[static_cast<std::size_t>(member[static_cast<std::size_t>(u)])] +=
            graph.weights[static_cast<std::size_t>(u)];
    for (index_t k = 0; k < nregions; ++k)
        if (!(totals[static_cast<std::size_t>(k)] > 0.0))
            throw std::invalid_argument("aggregation_matrix: region " + std::to_string(k) +
                                        " has zero total weight");

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(graph.n));
    for (index_t u = 0; u < graph.n; ++u) {
        const index_t k = member[static_cast<std::size_t>(u)];
        t.push_back({k, u, graph.weights[static_cast<std::size_t>(u)] /
                               totals[static_cast<std::size_t>(k)]});
    }
    return SparseMatrix::from_triplets(nregions, graph.n, std::move(t));
}

/// Dense SPD inverse via Cholesky, for the low-rank FRK block only.
inline DenseMatrix dense_spd_inverse(const DenseMatrix& k) {
    const index_t r = k.nrows();
    if (k.ncols() != r) throw std::invalid_argument("dense_spd_inverse: not square");
    DenseMatrix chol(r, r);
    for (index_t j = 0; j < r; ++j) {
        for (index_t i = j; i < r; ++i) {
            double s = k(i, j);
            for (index_t p = 0; p < j; ++p) s -= chol(i, p) * chol(j, p);
            if (i == j) {
                if (!(s > kPivotTolerance)) throw not_spd_error("dense_spd_inverse: K is not SPD");
                chol(j, j) = std::sqrt(s);
            } else {
                chol(i, j) = s / chol(j, j);
            }
        }
    }
    // columns of the inverse: solve L L^T x = e_c
    DenseMatrix inv(r, r);
    std::vector<double> x(static_cast<std::size_t>(r));
    for (index_t c = 0; c < r; ++c) {
        std::fill(x.begin(), x.end(), 0.0);
        x[static_cast<std::size_t>(c)] = 1.0;
        for (index_t i = 0; i < r; ++i) {
            double s = x[static_cast<std::size_t>(i)];
            for (index_t p = 0; p < i; ++p) s -= chol(i, p) * x[static_cast<std::size_t>(p)];
            x[static_cast<std::size_t>(i)] = s / chol(i, i);
        }
        for (index_t i = r - 1; i >= 0; --i) {
            double s = x[static_cast<std::size_t>(i)];
            for (index_t p = i + 1; p < r; ++p) s -= chol(p, i) * x[static_cast<std::size_t>(p)];
            x[static_cast<std::size_t>(i)] = s / chol(i, i);
        }
        for (index_t i = 0; i < r; ++i) inv(i, c) = x[static_cast<std::size_t>(i)];
    }
    // enforce exact symmetry
    for (index_t c = 0; c < r; ++c)
        for (index_t i = c + 1; i < r; ++i) {
            const double v = 0.5 * (inv(i, c) + inv(c, i));
            inv(i, c) = v;
            inv(c, i) = v;
        }
    return inv;
}

/// Horizontal concatenation (A | B).
inline SparseMatrix hstack(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.nrows() != b.nrows()) throw std::invalid_argument("hstack: row count mismatch");
    std::vector<index_t> ptr;
    ptr.reserve(static_cast<std::size_t>(a.ncols() + b.ncols()) + 1);
    ptr.insert(ptr.end(), a.col_ptr().begin(), a.col_ptr().end());
    const index_t base = a.nnz();
    for (std::size_t j = 1; j < b.col_ptr().size(); ++j) ptr.push_back(base + b.col_ptr()[j]);
    std::vector<index_t> rows(a.row_indices());
    rows.insert(rows.end(), b.row_indices().begin(), b.row_indices().end());
    std::vector<double> vals(a.values());
    vals.insert(vals.end(), b.values().begin(), b.values().end());
    return SparseMatrix::from_csc(a.nrows(), a.ncols() + b.ncols(), std::move(ptr),
                                  std::move(rows), std::move(vals));
}

/// Assemble the FRK-CAR hierarchical model
///   Q = bdiag(K^{-1}, Q_xi),  A = (A~, I),  B = (B~, Sel),
/// where A~ and B~ hold basis evaluations at the n_xi prediction cells and
/// the m observations, and Sel maps each observation to its grid cell
/// (identity when every cell is observed, i.e. obs_cells empty and m = n_xi).
/// The prior is padded so the case-2 condition holds: the dense K^{-1} block
/// already covers ones(A~^T A~), so only the off-diagonal blocks gain entries,
/// at the pattern of A~ and its transpose. Pass pad = false for the raw
/// block-diagonal prior.
inline HierarchicalModel frk_car_assemble(const SparseMatrix& a_tilde,
                                          const SparseMatrix& b_tilde, const DenseMatrix& k_cov,
                                          const SparseMatrix& q_xi, double r_precision = 1.0,
                                          std::span<const index_t> obs_cells = {},
                                          bool pad = true) {
    const index_t n_xi = q_xi.nrows();
    const index_t rank = k_cov.nrows();
    const index_t m = b_tilde.nrows();
    if (a_tilde.nrows() != n_xi)
        throw std::invalid_argument("frk_car_assemble: A~ rows must match dim(Q_xi)");
    if (a_tilde.ncols() != rank || b_tilde.ncols() != rank)
        throw std::invalid_argument("frk_car_assemble: basis rank mismatch");
    if (!(r_precision > 0.0))
        throw std::invalid_argument("frk_car_assemble: measurement precision must be positive");

    const DenseMatrix k_inv = dense_spd_inverse(k_cov);
    std::vector<Triplet> qt;
    qt.reserve(static_cast<std::size_t>(rank * rank + q_xi.nnz()));
    for (index_t j = 0; j < rank; ++j)
        for (index_t i = 0; i < rank; ++i) qt.push_back({i, j, k_inv(i, j)});
    for (index_t j = 0; j < n_xi; ++j) {
        auto rows = q_xi.col_rows(j);
        auto vals = q_xi.col_values(j);
        for (std::size_t k = 0; k < rows.size(); ++k)
            qt.push_back({rank + rows[k], rank + j, vals[k]});
    }
    SparseMatrix q = SparseMatrix::from_triplets(rank + n_xi, rank + n_xi, std::move(qt));

    SparseMatrix sel;
    if (obs_cells.empty()) {
        if (m != n_xi)
            throw std::invalid_argument(
                "frk_car_assemble: without obs_cells the observation count must equal the grid "
                "size");
        sel = SparseMatrix::identity(n_xi);
    } else {
        if (static_cast<index_t>(obs_cells.size()) != m)
            throw std::invalid_argument("frk_car_assemble: obs_cells size mismatch");
        std::vector<Triplet> st;
        st.reserve(obs_cells.size());
        for (index_t k = 0; k < m; ++k) {
            const index_t cell = obs_cells[static_cast<std::size_t>(k)];
            if (cell < 0 || cell >= n_xi)
                throw std::invalid_argument("frk_car_assemble: obs cell out of range");
            st.push_back({k, cell, 1.0});
        }
        sel = SparseMatrix::from_triplets(m, n_xi, std::move(st));
    }

    SparseMatrix a = hstack(a_tilde, SparseMatrix::identity(n_xi));
    SparseMatrix b = hstack(b_tilde, sel);
    if (pad) q = pad_q(q, a);
    SparseMatrix r = SparseMatrix::diagonal(
        std::vector<double>(static_cast<std::size_t>(m), r_precision));
    return make_model(std::move(a), std::move(b), std::move(q), std::move(r));
}

/// Load a RegionGraph from CSV files (0-based ids, "#" comments, an optional
/// non-numeric header line is skipped):
///   edges: "i,j" per undirected edge
///   membership: "unit,level,region"
///   weights: "unit,weight" covering every unit 0..n-1
inline RegionGraph load_region_graph(const std::string& edges_path,
                                     const std::string& membership_path,
                                     const std::string& weights_path) {
    auto open = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("load_region_graph: cannot open " + path);
        return in;
    };
    auto is_data = [](const std::string& line) {
        for (char c : line) {
            if (std::isspace(static_cast<unsigned char>(c))) continue;
            return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+';
        }
        return false;
    };
    auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        return fields;
    };

    RegionGraph g;
    std::string line;

    std::vector<std::pair<index_t, double>> weights;
    {
        auto in = open(weights_path);
        while (std::getline(in, line)) {
            if (!is_data(line)) continue;
            auto f = split(line);
            if (f.size() != 2)
                throw std::runtime_error("load_region_graph: bad weights line: " + line);
            weights.emplace_back(std::stoll(f[0]), std::stod(f[1]));
        }
    }
    g.n = static_cast<index_t>(weights.size());
    g.weights.assign(static_cast<std::size_t>(g.n), -1.0);
    for (auto [u, w] : weights) {
        if (u < 0 || u >= g.n)
            throw std::runtime_error("load_region_graph: weights must cover units 0..n-1");
        g.weights[static_cast<std::size_t>(u)] = w;
    }

    {
        auto in = open(edges_path);
        while (std::getline(in, line)) {
            if (!is_data(line)) continue;
            auto f = split(line);
            if (f.size() != 2)
                throw std::runtime_error("load_region_graph: bad edge line: " + line);
            g.edges.emplace_back(std::stoll(f[0]), std::stoll(f[1]));
        }
    }

    {
        auto in = open(membership_path);
        std::vector<std::tuple<index_t, index_t, index_t>> rows;
        index_t max_level = -1;
        while (std::getline(in, line)) {
            if (!is_data(line)) continue;
            auto f = split(line);
            if (f.size() != 3)
                throw std::runtime_error("load_region_graph: bad membership line: " + line);
            rows.emplace_back(std::stoll(f[0]), std::stoll(f[1]), std::stoll(f[2]));
            max_level = std::max(max_level, static_cast<index_t>(std::stoll(f[1])));
        }
        g.memberships.assign(static_cast<std::size_t>(max_level + 1),
                             std::vector<index_t>(static_cast<std::size_t>(g.n), -1));
        for (auto [u, l, r] : rows) {
            if (u < 0 || u >= g.n || l < 0)
                throw std::runtime_error("load_region_graph: membership row out of range");
            g.memberships[static_cast<std::size_t>(l)][static_cast<std::size_t>(u)] = r;
        }
    }

    g.validate();
    return g;
}

}  // namespace takvar
