// takvar command-line front end: timing studies, relative-error studies,
// condition checks, variance computation, and synthetic bundle generation.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "takvar/takvar.hpp"

namespace {

takvar::OrderingChoice parse_ordering(const std::string& s) {
    if (s == "natural") return takvar::OrderingChoice::natural;
    if (s == "rcm") return takvar::OrderingChoice::rcm;
    throw CLI::ValidationError("--ordering must be natural or rcm");
}

takvar::Method parse_method(const std::string& s) {
    if (auto m = takvar::method_from_name(s)) return *m;
    throw CLI::ValidationError("--method must be direct, sparse_inv, or cond_sim");
}

int cmd_simulate(const std::vector<takvar::index_t>& n_values,
                 const std::vector<takvar::index_t>& N_values, takvar::index_t m,
                 const std::vector<std::string>& methods, takvar::index_t sims,
                 std::uint64_t seed, takvar::index_t reps, const std::string& ordering,
                 bool full, bool parallel_cells, const std::string& out) {
    takvar::ExperimentGrid grid;
    grid.n_values = n_values.empty()
                        ? std::vector<takvar::index_t>{100, 1000, 10000}
                        : n_values;
    grid.N_values = N_values.empty()
                        ? std::vector<takvar::index_t>{10, 100, 1000, 10000}
                        : N_values;
    if (full && n_values.empty() && N_values.empty()) {
        grid.n_values = {100, 1000, 10000, 100000};
        grid.N_values = {10, 100, 1000, 10000, 100000};
    }
    grid.m = m;
    grid.sim_count = sims;
    grid.seed = seed;
    grid.repetitions = reps;
    grid.ordering = parse_ordering(ordering);
    grid.parallel_cells = parallel_cells;
    if (parallel_cells)
        std::cerr << "note: --parallel-cells contends timings; use for correctness runs only\n";
    if (!methods.empty()) {
        grid.methods.clear();
        for (const std::string& s : methods) grid.methods.push_back(parse_method(s));
    }

    const takvar::GridRunResult res = takvar::run_car1d_grid(grid);
    for (const std::string& s : res.skipped) std::cerr << "skipped cell: " << s << "\n";
    takvar::write_timing_csv(out, res.rows);
    std::cout << "wrote " << res.rows.size() << " timing rows to " << out << "\n";
    return 0;
}

int cmd_relerr(const std::string& bundle, std::vector<takvar::index_t> sims_list,
               std::uint64_t seed, bool reuse_draws, const std::string& ordering,
               const std::string& out) {
    if (sims_list.empty())
        for (takvar::index_t m = 10; m <= 100; m += 10) sims_list.push_back(m);
    const takvar::LoadedBundle loaded = takvar::load_bundle(bundle);
    takvar::validate_model(loaded.model);
    const auto rows = takvar::run_relerr_study(loaded.model, sims_list, seed, reuse_draws,
                                               parse_ordering(ordering));
    takvar::write_relerr_csv(out, rows);
    std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
    return 0;
}

int cmd_check(const std::string& bundle) {
    takvar::CheckOutcome outcome = takvar::check_bundle(bundle);
    if (outcome.exit_code == 3) {
        std::cerr << "conditions not applicable: " << outcome.error << "\n";
        return 3;
    }
    std::cout << takvar::condition_report_json(outcome.report).dump(2) << "\n";
    return outcome.exit_code;
}

int cmd_variances(const std::string& bundle, const std::string& method, takvar::index_t sims,
                  std::uint64_t seed, bool pad, bool unsafe_skip_check,
                  const std::string& ordering, const std::string& out_dir) {
    takvar::VariancesCommandOptions opts;
    opts.bundle_dir = bundle;
    opts.method = parse_method(method);
    opts.sim_count = sims;
    opts.seed = seed;
    opts.pad = pad;
    opts.unsafe_skip_check = unsafe_skip_check;
    opts.ordering = parse_ordering(ordering);
    opts.out_dir = out_dir;
    const takvar::VariancesCommandResult res = takvar::run_variances_command(opts);
    std::cout << "wrote " << res.report.d.size() << " variances to " << out_dir
              << "/d.csv (method " << takvar::method_name(res.report.method)
              << (res.padded ? ", Q padded" : "") << ")\n";
    return 0;
}

int cmd_gen_bundle(const std::string& kind, takvar::index_t n, takvar::index_t N,
                   takvar::index_t m, takvar::index_t rank, std::uint64_t seed,
                   const std::string& out) {
    const takvar::BundleManifest manifest = takvar::generate_bundle(kind, n, N, m, rank, seed, out);
    std::cout << "wrote " << kind << " bundle (n=" << manifest.n << ", m=" << manifest.m
              << ", N=" << manifest.N << ") to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact GMRF prediction variances via Takahashi sparse inverse subsets"};
    app.require_subcommand(1);

    // simulate-car1d
    std::vector<takvar::index_t> n_values, N_values;
    takvar::index_t m = 10000, sims = 50, reps = 1;
    std::uint64_t seed = 1;
    std::vector<std::string> methods;
    std::string ordering = "rcm", out = "timings.csv";
    bool full = false, parallel_cells = false;
    auto* sim = app.add_subcommand("simulate-car1d", "Timing grid over the 1-D CAR2 study model");
    sim->add_option("--n", n_values, "state dimensions (repeatable)");
    sim->add_option("--N", N_values, "prediction counts (repeatable)");
    sim->add_option("--m", m, "observation count (default 10000)");
    sim->add_option("--method", methods, "methods to run (default all three)");
    sim->add_option("--M", sims, "conditional simulations per cell");
    sim->add_option("--seed", seed, "RNG seed");
    sim->add_option("--reps", reps, "repetitions per cell");
    sim->add_option("--ordering", ordering, "natural|rcm");
    sim->add_flag("--full", full, "extended grid up to n = N = 1e5");
    sim->add_flag("--parallel-cells", parallel_cells,
                  "run grid cells concurrently (correctness-only; timings contend)");
    sim->add_option("--out", out, "output CSV path");

    // relerr-study
    std::string re_bundle, re_ordering = "rcm", re_out = "relerr.csv";
    std::vector<takvar::index_t> re_sims;
    std::uint64_t re_seed = 1;
    bool reuse_draws = false;
    auto* rel = app.add_subcommand("relerr-study",
                                   "Bias/spread of conditional-simulation standard errors vs M");
    rel->add_option("--bundle", re_bundle, "model bundle directory")->required();
    rel->add_option("--M", re_sims, "simulation counts (default 10..100 step 10)");
    rel->add_option("--seed", re_seed, "RNG seed");
    rel->add_flag("--reuse-draws", reuse_draws, "nest ensembles across M instead of redrawing");
    rel->add_option("--ordering", re_ordering, "natural|rcm");
    rel->add_option("--out", re_out, "output CSV path");

    // check
    std::string ck_bundle;
    auto* chk = app.add_subcommand("check", "Exactness condition report for a bundle");
    chk->add_option("--bundle", ck_bundle, "model bundle directory")->required();

    // variances
    std::string va_bundle, va_method = "direct", va_ordering = "rcm", va_out = ".";
    takvar::index_t va_sims = 50;
    std::uint64_t va_seed = 1;
    bool va_pad = false, va_skip = false;
    auto* var = app.add_subcommand("variances", "Prediction variances for a bundle");
    var->add_option("--bundle", va_bundle, "model bundle directory")->required();
    var->add_option("--method", va_method, "direct|sparse_inv|cond_sim");
    var->add_option("--M", va_sims, "conditional simulations (cond_sim)");
    var->add_option("--seed", va_seed, "RNG seed (cond_sim)");
    var->add_flag("--pad", va_pad, "pad ones(Q) so the case-2 condition holds");
    var->add_flag("--unsafe-skip-check", va_skip,
                  "compute sparse_inv without the exactness check (benchmarking only)");
    var->add_option("--ordering", va_ordering, "natural|rcm");
    var->add_option("--out", va_out, "output directory");

    // gen-bundle
    std::string gb_kind = "car1d", gb_out = "bundle";
    takvar::index_t gb_n = 500, gb_N = 200, gb_m = 1000, gb_rank = 20;
    std::uint64_t gb_seed = 1;
    auto* gen = app.add_subcommand("gen-bundle", "Write a synthetic model bundle");
    gen->add_option("--kind", gb_kind, "car1d|nested-aggregation|frk-car");
    gen->add_option("--n", gb_n, "state dimension / units / grid cells");
    gen->add_option("--N", gb_N, "predictions / fine regions");
    gen->add_option("--m", gb_m, "observations / coarse regions / observed cells");
    gen->add_option("--rank", gb_rank, "basis count (frk-car)");
    gen->add_option("--seed", gb_seed, "RNG seed");
    gen->add_option("--out", gb_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(n_values, N_values, m, methods, sims, seed, reps, ordering, full,
                                parallel_cells, out);
        if (rel->parsed()) return cmd_relerr(re_bundle, re_sims, re_seed, reuse_draws, re_ordering, re_out);
        if (chk->parsed()) return cmd_check(ck_bundle);
        if (var->parsed())
            return cmd_variances(va_bundle, va_method, va_sims, va_seed, va_pad, va_skip,
                                 va_ordering, va_out);
        if (gen->parsed()) return cmd_gen_bundle(gb_kind, gb_n, gb_N, gb_m, gb_rank, gb_seed, gb_out);
    } catch (const takvar::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const takvar::condition_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const takvar::not_spd_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
