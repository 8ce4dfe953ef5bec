#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "takvar/cholesky.hpp"
#include "takvar/matrix_market.hpp"
#include "takvar/takahashi.hpp"

namespace takvar {

/// Persist a numeric factor as <base>.mtx (the triangular values, structural
/// zeros included) and <base>.json (permutation + elimination tree sidecar).
inline void save_factor(const std::string& base, const NumericFactor& f) {
    write_matrix_market(base + ".mtx", factor_matrix(f));
    nlohmann::json j{{"schema", "takvar-factor-v1"},
                     {"permutation", f.symbolic.perm.forward()},
                     {"etree", f.symbolic.etree}};
    std::ofstream out(base + ".json");
    if (!out) throw io_error("save_factor: cannot write " + base + ".json");
    out << j.dump(2) << "\n";
}

inline NumericFactor load_factor(const std::string& base) {
    const SparseMatrix l = read_matrix_market(base + ".mtx");
    std::ifstream in(base + ".json");
    if (!in) throw io_error("load_factor: cannot open " + base + ".json");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("load_factor: bad sidecar: ") + e.what());
    }
    NumericFactor f;
    f.symbolic.perm = Permutation::from_forward(j.at("permutation").get<std::vector<index_t>>());
    f.symbolic.etree = j.at("etree").get<std::vector<index_t>>();
    f.symbolic.pattern = ones(l, PatternMode::structural);
    f.values = l.values();
    return f;
}

/// Persist a sparse inverse subset as <base>.mtx (symmetric) + sidecar with
/// the permutation.
inline void save_subset(const std::string& base, const SparseInverseSubset& s) {
    const SparseMatrix m = SparseMatrix::from_csc(s.size(), s.size(), s.pattern.col_ptr(),
                                                  s.pattern.row_indices(), s.values);
    write_matrix_market(base + ".mtx", m, /*symmetric=*/true);
    nlohmann::json j{{"schema", "takvar-subset-v1"}, {"permutation", s.perm.forward()}};
    std::ofstream out(base + ".json");
    if (!out) throw io_error("save_subset: cannot write " + base + ".json");
    out << j.dump(2) << "\n";
}

inline SparseInverseSubset load_subset(const std::string& base) {
    const SparseMatrix m = read_matrix_market(base + ".mtx");
    std::ifstream in(base + ".json");
    if (!in) throw io_error("load_subset: cannot open " + base + ".json");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("load_subset: bad sidecar: ") + e.what());
    }
    SparseInverseSubset s;
    s.perm = Permutation::from_forward(j.at("permutation").get<std::vector<index_t>>());
    s.pattern = ones(m, PatternMode::structural);
    s.values = m.values();
    return s;
}

}  // namespace takvar
