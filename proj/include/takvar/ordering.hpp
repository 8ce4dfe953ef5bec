#pragma once

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <vector>

#include "takvar/sparse_pattern.hpp"
#include "takvar/types.hpp"

namespace takvar {

namespace detail {

struct BfsResult {
    index_t eccentricity = 0;
    std::vector<index_t> last_level;  // sorted ascending
    index_t visited = 0;
};

inline BfsResult bfs_levels(const SparsePattern& p, index_t start, std::vector<index_t>& level) {
    std::fill(level.begin(), level.end(), -1);
    std::queue<index_t> q;
    level[static_cast<std::size_t>(start)] = 0;
    q.push(start);
    BfsResult res;
    res.visited = 1;
    while (!q.empty()) {
        const index_t v = q.front();
        q.pop();
        const index_t lv = level[static_cast<std::size_t>(v)];
        if (lv > res.eccentricity) {
            res.eccentricity = lv;
            res.last_level.clear();
        }
        if (lv == res.eccentricity) res.last_level.push_back(v);
        for (index_t u : p.col(v)) {
            if (u == v) continue;
            if (level[static_cast<std::size_t>(u)] == -1) {
                level[static_cast<std::size_t>(u)] = lv + 1;
                q.push(u);
                ++res.visited;
            }
        }
    }
    std::sort(res.last_level.begin(), res.last_level.end());
    return res;
}

inline index_t degree_of(const SparsePattern& p, index_t v) {
    index_t d = 0;
    for (index_t u : p.col(v))
        if (u != v) ++d;
    return d;
}

// George-Liu pseudo-peripheral node search, deterministic: candidates at each
// step are scanned in ascending index so ties resolve to the lowest index.
inline index_t pseudo_peripheral(const SparsePattern& p, index_t seed,
                                 std::vector<index_t>& level) {
    index_t node = seed;
    BfsResult r = bfs_levels(p, node, level);
    while (true) {
        index_t best = -1, best_deg = -1;
        for (index_t v : r.last_level) {
            const index_t d = degree_of(p, v);
            if (best == -1 || d < best_deg) {
                best = v;
                best_deg = d;
            }
        }
        BfsResult r2 = bfs_levels(p, best, level);
        if (r2.eccentricity > r.eccentricity) {
            node = best;
            r = std::move(r2);
        } else {
            return best_deg <= degree_of(p, node) ? best : node;
        }
    }
}

}  // namespace detail

/// Reverse Cuthill-McKee ordering of a symmetric pattern.
///
/// Deterministic: BFS neighbors are visited in increasing degree with ties
/// broken by lowest original index, components in order of their smallest
/// vertex. When the heuristic would strictly increase the bandwidth (possible
/// on adversarial patterns), the identity permutation is returned instead, so
/// the result never has larger bandwidth than the natural order.
inline Permutation rcm_ordering(const SparsePattern& p) {
    if (!p.is_symmetric()) throw std::invalid_argument("rcm_ordering: pattern not symmetric");
    const index_t n = p.nrows();
    std::vector<index_t> order;
    order.reserve(static_cast<std::size_t>(n));
    std::vector<char> visited(static_cast<std::size_t>(n), 0);
    std::vector<index_t> level(static_cast<std::size_t>(n));

    std::vector<index_t> degree(static_cast<std::size_t>(n));
    for (index_t v = 0; v < n; ++v) degree[static_cast<std::size_t>(v)] = detail::degree_of(p, v);

    for (index_t root = 0; root < n; ++root) {
        if (visited[static_cast<std::size_t>(root)]) continue;
        const index_t start = detail::pseudo_peripheral(p, root, level);

        // Cuthill-McKee sweep of this component
        std::queue<index_t> q;
        q.push(start);
        visited[static_cast<std::size_t>(start)] = 1;
        std::vector<index_t> nbrs;
        while (!q.empty()) {
            const index_t v = q.front();
            q.pop();
            order.push_back(v);
            nbrs.clear();
            for (index_t u : p.col(v))
                if (u != v && !visited[static_cast<std::size_t>(u)]) nbrs.push_back(u);
            std::sort(nbrs.begin(), nbrs.end(), [&](index_t a, index_t b) {
                const index_t da = degree[static_cast<std::size_t>(a)];
                const index_t db = degree[static_cast<std::size_t>(b)];
                return da != db ? da < db : a < b;
            });
            for (index_t u : nbrs) {
                visited[static_cast<std::size_t>(u)] = 1;
                q.push(u);
            }
        }
    }

    std::reverse(order.begin(), order.end());
    std::vector<index_t> fwd(static_cast<std::size_t>(n));
    for (index_t k = 0; k < n; ++k) fwd[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k;

    index_t bw_new = 0;
    for (index_t j = 0; j < n; ++j)
        for (index_t r : p.col(j))
            bw_new = std::max(bw_new, std::abs(fwd[static_cast<std::size_t>(r)] -
                                               fwd[static_cast<std::size_t>(j)]));
    if (bw_new > bandwidth(p)) return Permutation::identity(n);
    return Permutation::from_forward(std::move(fwd));
}

}  // namespace takvar
