#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "takvar/matrix_market.hpp"
#include "takvar/model.hpp"
#include "takvar/types.hpp"

namespace takvar {

/// On-disk model bundle: A.mtx, B.mtx, Q.mtx, R.mtx plus manifest.json.
struct BundleManifest {
    std::string kind = "custom";
    index_t n = 0;
    index_t m = 0;
    index_t N = 0;
    bool padded = false;
    std::uint64_t seed = 0;
    nlohmann::json extra;
};

inline void save_bundle(const std::string& dir, const HierarchicalModel& model,
                        const BundleManifest& manifest) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_matrix_market((fs::path(dir) / "A.mtx").string(), model.A);
    write_matrix_market((fs::path(dir) / "B.mtx").string(), model.B);
    write_matrix_market((fs::path(dir) / "Q.mtx").string(), model.Q, /*symmetric=*/true);
    write_matrix_market((fs::path(dir) / "R.mtx").string(), model.R);
    nlohmann::json j{{"schema", "takvar-bundle-v1"},
                     {"kind", manifest.kind},
                     {"n", manifest.n},
                     {"m", manifest.m},
                     {"N", manifest.N},
                     {"padded", manifest.padded},
                     {"seed", manifest.seed}};
    if (!manifest.extra.is_null()) j["extra"] = manifest.extra;
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw io_error("save_bundle: cannot write manifest in " + dir);
    out << j.dump(2) << "\n";
}

struct LoadedBundle {
    HierarchicalModel model;
    BundleManifest manifest;
};

inline LoadedBundle load_bundle(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw io_error("load_bundle: cannot open manifest in " + dir);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("load_bundle: bad manifest in " + dir + ": " + e.what());
    }

    BundleManifest manifest;
    try {
        manifest.kind = j.value("kind", "custom");
        manifest.n = j.at("n").get<index_t>();
        manifest.m = j.at("m").get<index_t>();
        manifest.N = j.at("N").get<index_t>();
        manifest.padded = j.value("padded", false);
        manifest.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("extra")) manifest.extra = j["extra"];
    } catch (const nlohmann::json::exception& e) {
        throw io_error("load_bundle: manifest fields missing in " + dir + ": " + e.what());
    }

    HierarchicalModel model;
    model.A = read_matrix_market((fs::path(dir) / "A.mtx").string());
    model.B = read_matrix_market((fs::path(dir) / "B.mtx").string());
    model.Q = read_matrix_market((fs::path(dir) / "Q.mtx").string());
    model.R = read_matrix_market((fs::path(dir) / "R.mtx").string());
    if (model.Q.nrows() != manifest.n || model.B.nrows() != manifest.m ||
        model.A.nrows() != manifest.N)
        throw io_error("load_bundle: matrix dimensions disagree with manifest in " + dir);
    return {std::move(model), std::move(manifest)};
}

}  // namespace takvar
