#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "takvar/takvar.hpp"

using namespace takvar;

namespace {

index_t permuted_bandwidth(const SparsePattern& p, const Permutation& perm) {
    index_t b = 0;
    for (index_t j = 0; j < p.ncols(); ++j)
        for (index_t r : p.col(j)) b = std::max(b, std::abs(perm.fwd(r) - perm.fwd(j)));
    return b;
}

}  // namespace

TEST_CASE("rcm keeps a banded matrix banded", "[ordering]") {
    const SparsePattern tri = oracle::banded_pattern(12, 1);
    const Permutation p = rcm_ordering(tri);
    REQUIRE(permuted_bandwidth(tri, p) == 1);
    // identity or its reversal, both bandwidth 1
    const bool is_id = p.is_identity();
    bool is_rev = true;
    for (index_t i = 0; i < 12; ++i) is_rev = is_rev && (p.fwd(i) == 11 - i);
    REQUIRE((is_id || is_rev));
}

TEST_CASE("rcm moves a trailing hub of a star toward one end", "[ordering]") {
    // A star stays bad under any ordering: the hub is adjacent to everything,
    // so no permutation gets the bandwidth under ceil((n-1)/2). RCM starts at
    // a leaf and visits the hub second, leaving it next to an end after the
    // reversal, with bandwidth n-2.
    const index_t n = 9;
    std::vector<Coord> entries;
    for (index_t i = 0; i < n; ++i) entries.push_back({i, i});
    for (index_t i = 0; i < n - 1; ++i) {
        entries.push_back({n - 1, i});
        entries.push_back({i, n - 1});
    }
    const SparsePattern star = SparsePattern::from_entries(n, n, entries);
    const Permutation p = rcm_ordering(star);
    REQUIRE(permuted_bandwidth(star, p) == n - 2);
    REQUIRE(permuted_bandwidth(star, p) >= (n - 1) / 2);
    const index_t hub_pos = p.fwd(n - 1);
    REQUIRE((hub_pos == 1 || hub_pos == n - 2));
}

TEST_CASE("rcm never increases bandwidth on random symmetric patterns", "[ordering]") {
    std::mt19937_64 rng(51);
    for (int rep = 0; rep < 25; ++rep) {
        const index_t n = 5 + static_cast<index_t>(rng() % 40);
        const SparsePattern p = oracle::random_symmetric_pattern(n, 0.15, rng);
        const Permutation perm = rcm_ordering(p);
        REQUIRE(permuted_bandwidth(p, perm) <= bandwidth(p));
    }
}

TEST_CASE("rcm is deterministic", "[ordering]") {
    std::mt19937_64 rng(53);
    const SparsePattern p = oracle::random_symmetric_pattern(30, 0.1, rng);
    REQUIRE(rcm_ordering(p).forward() == rcm_ordering(p).forward());
}

TEST_CASE("rcm rejects asymmetric patterns", "[ordering]") {
    const SparsePattern p = SparsePattern::from_entries(3, 3, {{0, 0}, {1, 1}, {2, 2}, {1, 0}});
    REQUIRE_THROWS_AS(rcm_ordering(p), std::invalid_argument);
}

TEST_CASE("rcm handles disconnected components", "[ordering]") {
    // two disjoint paths
    std::vector<Coord> entries;
    for (index_t i = 0; i < 10; ++i) entries.push_back({i, i});
    for (index_t i : {0, 1, 2, 3}) {
        entries.push_back({i, i + 1});
        entries.push_back({i + 1, i});
    }
    for (index_t i : {5, 6, 7, 8}) {
        entries.push_back({i, i + 1});
        entries.push_back({i + 1, i});
    }
    const SparsePattern p = SparsePattern::from_entries(10, 10, entries);
    const Permutation perm = rcm_ordering(p);
    REQUIRE(permuted_bandwidth(p, perm) <= bandwidth(p));
    REQUIRE(perm.size() == 10);
}
