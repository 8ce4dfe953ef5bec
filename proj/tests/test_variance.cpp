#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "takvar/takvar.hpp"

using namespace takvar;

namespace {

struct Factored {
    SparseMatrix pc;
    NumericFactor factor;
};

Factored factorize(const HierarchicalModel& model, OrderingChoice ordering = OrderingChoice::rcm) {
    Factored f;
    f.pc = assemble_precision(model);
    PhaseStats stats;
    f.factor = factorize_precision(f.pc, ordering, stats);
    return f;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]) / std::abs(b[i]));
    return m;
}

HierarchicalModel prior_only_model(SparseMatrix a, SparseMatrix q) {
    HierarchicalModel model;
    model.A = std::move(a);
    model.Q = std::move(q);
    model.B = SparseMatrix(0, model.Q.ncols());
    model.R = SparseMatrix(0, 0);
    return model;
}

}  // namespace

TEST_CASE("direct route: identity predictions on a scaled identity", "[variance]") {
    const HierarchicalModel model = prior_only_model(
        SparseMatrix::identity(4),
        scale_rows(SparseMatrix::identity(4), std::vector<double>(4, 4.0)));
    const Factored f = factorize(model);
    const VarianceReport rep = variances_direct(model, f.factor);
    for (double d : rep.d) REQUIRE(d == 0.25);
}

TEST_CASE("direct route matches the dense inverse on random models", "[variance]") {
    std::mt19937_64 rng(211);
    for (int rep = 0; rep < 8; ++rep) {
        const index_t n = 8 + static_cast<index_t>(rng() % 20);
        const SparseMatrix q =
            oracle::spd_on_pattern(oracle::random_symmetric_pattern(n, 0.2, rng), rng);
        const SparseMatrix a = oracle::random_nonnegative(10, n, 0.3, rng);
        const SparseMatrix b = oracle::random_nonnegative(12, n, 0.3, rng);
        std::vector<double> r_diag(12);
        std::uniform_real_distribution<double> rd(0.5, 3.0);
        for (double& v : r_diag) v = rd(rng);
        const HierarchicalModel model =
            make_model(a, b, q, SparseMatrix::diagonal(std::move(r_diag)));

        const Factored f = factorize(model);
        const VarianceReport out = variances_direct(model, f.factor);

        const Eigen::MatrixXd inv = oracle::dense_inverse_spd(f.pc);
        const Eigen::MatrixXd da = oracle::to_eigen(model.A);
        const Eigen::VectorXd want = (da * inv * da.transpose()).diagonal();
        for (index_t i = 0; i < 10; ++i)
            REQUIRE_THAT(out.d[static_cast<std::size_t>(i)],
                         Catch::Matchers::WithinRel(want(i), 1e-10));
    }
}

TEST_CASE("sparse_inv route: identity predictions read the subset diagonal", "[variance]") {
    const SparseMatrix q = car1d_second_order(12, 1.0 / 12.0, 12.0);
    const HierarchicalModel model = prior_only_model(SparseMatrix::identity(12), q);
    const Factored f = factorize(model);
    const SparseInverseSubset subset = takahashi(f.factor);
    const VarianceReport rep = variances_sparse_inv(model, subset);
    REQUIRE(rep.condition.has_value());
    REQUIRE(rep.condition->a_is_permutation);
    for (index_t i = 0; i < 12; ++i)
        REQUIRE(rep.d[static_cast<std::size_t>(i)] == subset.get(i, i));
}

TEST_CASE("study model: sparse_inv equals direct to high precision", "[variance]") {
    const HierarchicalModel model = build_car1d_model(100, 1000, 1000, 303);
    const Factored f = factorize(model);
    const VarianceReport direct = variances_direct(model, f.factor);
    const VarianceReport sparse = variances_sparse_inv(model, takahashi(f.factor));
    REQUIRE(max_rel_diff(sparse.d, direct.d) < 1e-10);
    for (double d : direct.d) REQUIRE(d >= 0.0);
}

TEST_CASE("unpadded FRK-CAR model is refused; padded agrees with direct", "[variance]") {
    const HierarchicalModel unpadded = build_frk_model(150, 12, 90, 5, /*padded=*/false);
    {
        const Factored f = factorize(unpadded);
        REQUIRE_THROWS_AS(variances_sparse_inv(unpadded, takahashi(f.factor)), condition_error);
    }
    HierarchicalModel padded = unpadded;
    padded.Q = pad_q(unpadded.Q, unpadded.A);
    const Factored f = factorize(padded);
    const VarianceReport sparse = variances_sparse_inv(padded, takahashi(f.factor));
    const VarianceReport direct = variances_direct(padded, f.factor);
    REQUIRE(max_rel_diff(sparse.d, direct.d) < 1e-9);
}

TEST_CASE("padding never changes the direct result", "[variance]") {
    const HierarchicalModel base = build_frk_model(80, 8, 50, 17, /*padded=*/false);
    HierarchicalModel padded = base;
    padded.Q = pad_q(base.Q, base.A);
    // same values, natural ordering: identical arithmetic, identical output
    const Factored f0 = factorize(base, OrderingChoice::natural);
    const Factored f1 = factorize(padded, OrderingChoice::natural);
    const std::vector<double> d0 = variances_direct(base, f0.factor).d;
    const std::vector<double> d1 = variances_direct(padded, f1.factor).d;
    REQUIRE(d0 == d1);
}

TEST_CASE("direct variances are ordering-invariant", "[variance]") {
    const HierarchicalModel model = build_car1d_model(60, 150, 200, 29);
    const Factored nat = factorize(model, OrderingChoice::natural);
    const Factored rcm = factorize(model, OrderingChoice::rcm);
    REQUIRE(max_rel_diff(variances_direct(model, nat.factor).d,
                         variances_direct(model, rcm.factor).d) < 1e-10);
}

TEST_CASE("conditional simulation: determinism and convergence", "[variance]") {
    const HierarchicalModel model = build_car1d_model(12, 8, 30, 41);
    const Factored f = factorize(model);

    REQUIRE_THROWS_AS(variances_cond_sim(model, f.factor, 1, 7), std::invalid_argument);

    const VarianceReport a = variances_cond_sim(model, f.factor, 50, 7);
    const VarianceReport b = variances_cond_sim(model, f.factor, 50, 7);
    REQUIRE(a.d == b.d);
    REQUIRE(a.sim_count == 50);
    REQUIRE_FALSE(a.rng.empty());

    const VarianceReport big = variances_cond_sim(model, f.factor, 20000, 7);
    const VarianceReport exact = variances_direct(model, f.factor);
    for (std::size_t i = 0; i < exact.d.size(); ++i) {
        REQUIRE(big.d[i] > 0.0);
        REQUIRE(std::abs(big.d[i] - exact.d[i]) / exact.d[i] < 0.05);
    }
}

TEST_CASE("conditional simulation is unbiased across seeds", "[variance]") {
    const HierarchicalModel model = build_car1d_model(20, 20, 60, 43);
    const Factored f = factorize(model);
    const std::vector<double> exact = variances_direct(model, f.factor).d;

    const int kSeeds = 200;
    const index_t m_sims = 50;
    std::vector<double> mean(exact.size(), 0.0);
    std::vector<double> sq(exact.size(), 0.0);
    for (int s = 0; s < kSeeds; ++s) {
        const std::vector<double> d =
            variances_cond_sim(model, f.factor, m_sims, 1000 + static_cast<std::uint64_t>(s)).d;
        for (std::size_t i = 0; i < d.size(); ++i) {
            mean[i] += d[i];
            sq[i] += d[i] * d[i];
        }
    }
    for (std::size_t i = 0; i < exact.size(); ++i) {
        mean[i] /= kSeeds;
        const double var = (sq[i] - kSeeds * mean[i] * mean[i]) / (kSeeds - 1);
        const double stderr_mean = std::sqrt(var / kSeeds);
        REQUIRE(std::abs(mean[i] - exact[i]) <= 3.0 * stderr_mean);
    }
}

TEST_CASE("relative error summary basics", "[variance]") {
    const std::vector<double> d{1.0, 4.0, 0.25};

    const RelativeErrorSummary zero = relative_error_summary(d, d);
    REQUIRE(zero.r_hat == 0.0);
    REQUIRE(zero.s_hat == 0.0);

    std::vector<double> scaled(d);
    for (double& v : scaled) v *= 1.21;  // sigma scales by 1.1
    const RelativeErrorSummary ten = relative_error_summary(d, scaled);
    REQUIRE_THAT(ten.r_hat, Catch::Matchers::WithinAbs(0.1, 1e-12));
    REQUIRE_THAT(ten.s_hat, Catch::Matchers::WithinAbs(0.0, 1e-12));

    const std::vector<double> with_zero{1.0, 0.0};
    REQUIRE_THROWS_AS(relative_error_summary(with_zero, with_zero), std::invalid_argument);
}

TEST_CASE("spread of the relative error decays like the square root law", "[variance]") {
    const HierarchicalModel model = build_car1d_model(200, 400, 600, 59);
    std::vector<index_t> sims;
    for (index_t m = 10; m <= 100; m += 10) sims.push_back(m);
    const auto rows = run_relerr_study(model, sims, 97, /*reuse_draws=*/false);

    // least-squares slope of log s_hat against log M within [-0.65, -0.35]
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const RelErrRow& r : rows) {
        const double x = std::log(static_cast<double>(r.sims));
        const double y = std::log(r.s_hat);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double k = static_cast<double>(rows.size());
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    REQUIRE(slope < -0.35);
    REQUIRE(slope > -0.65);
}

TEST_CASE("subset perturbations: variances shift only through touched entries", "[variance]") {
    // Lemma-of-invariance witness on a small model
    const HierarchicalModel model = build_car1d_model(15, 10, 25, 61);
    const Factored f = factorize(model);
    const SparseInverseSubset subset = takahashi(f.factor);
    const std::vector<double> base = variances_sparse_inv(model, subset).d;

    const Eigen::MatrixXd gram =
        oracle::to_eigen(model.A).transpose() * oracle::to_eigen(model.A);

    auto perturbed_copy = [&](index_t pi, index_t pj) {
        SparseInverseSubset copy = subset;
        const index_t e1 = copy.pattern.find(pi, pj);
        const index_t e2 = copy.pattern.find(pj, pi);
        REQUIRE(e1 >= 0);
        copy.values[static_cast<std::size_t>(e1)] += 1.0;
        if (e2 != e1) copy.values[static_cast<std::size_t>(e2)] += 1.0;
        return copy;
    };

    int invariant_checked = 0, sensitive_checked = 0;
    for (index_t j = 0; j < subset.size() && (invariant_checked < 5 || sensitive_checked < 5); ++j) {
        for (index_t r : subset.pattern.col(j)) {
            const index_t oi = subset.perm.inv(r);
            const index_t oj = subset.perm.inv(j);
            const bool touched = gram(oi, oj) != 0.0;
            if (touched && sensitive_checked >= 5) continue;
            if (!touched && invariant_checked >= 5) continue;
            const std::vector<double> d = variances_sparse_inv(model, perturbed_copy(r, j)).d;
            if (touched) {
                REQUIRE(d != base);
                ++sensitive_checked;
            } else {
                REQUIRE(d == base);  // bit-for-bit
                ++invariant_checked;
            }
        }
    }
    REQUIRE(invariant_checked >= 5);
    REQUIRE(sensitive_checked >= 5);
}

TEST_CASE("exactness across randomized condition-passing models", "[variance]") {
    std::mt19937_64 rng(71);
    for (int rep = 0; rep < 12; ++rep) {
        HierarchicalModel model;
        if (rep % 3 == 0) {
            model = build_car1d_model(40 + static_cast<index_t>(rng() % 80), 100, 150, rng());
        } else if (rep % 3 == 1) {
            model = build_nested_model(50 + static_cast<index_t>(rng() % 60), 13, 4, rng());
        } else {
            model = build_frk_model(60, 8, 40, rng(), /*padded=*/true);
        }
        REQUIRE(check_theorem(model.A, model.B, model.Q).theorem);
        const Factored f = factorize(model);
        const VarianceReport direct = variances_direct(model, f.factor);
        const VarianceReport sparse = variances_sparse_inv(model, takahashi(f.factor));
        REQUIRE(max_rel_diff(sparse.d, direct.d) < 1e-9);
    }
}
