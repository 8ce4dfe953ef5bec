#pragma once

#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "takvar/sparse_matrix.hpp"
#include "takvar/types.hpp"

namespace takvar {

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// Write M in Matrix Market coordinate format (1-based indices).
///
/// Explicitly stored zeros are serialized as 0 entries so the structural
/// pattern survives a round trip; the `structural-zeros: preserved` comment
/// documents the convention in the file itself. With `symmetric = true` only
/// the lower triangle is written (M must be value-symmetric).
inline void write_matrix_market(const std::string& path, const SparseMatrix& m,
                                bool symmetric = false) {
    if (symmetric && !m.is_value_symmetric())
        throw std::invalid_argument("write_matrix_market: matrix is not symmetric");
    std::ofstream out(path);
    if (!out) throw io_error("write_matrix_market: cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real "
        << (symmetric ? "symmetric" : "general") << "\n";
    out << "% structural-zeros: preserved\n";
    index_t count = 0;
    if (symmetric) {
        for (index_t j = 0; j < m.ncols(); ++j)
            for (index_t r : m.col_rows(j))
                if (r >= j) ++count;
    } else {
        count = m.nnz();
    }
    out << m.nrows() << " " << m.ncols() << " " << count << "\n";
    out << std::setprecision(17);
    for (index_t j = 0; j < m.ncols(); ++j) {
        auto rows = m.col_rows(j);
        auto vals = m.col_values(j);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (symmetric && rows[k] < j) continue;
            out << rows[k] + 1 << " " << j + 1 << " " << vals[k] << "\n";
        }
    }
    if (!out) throw io_error("write_matrix_market: write failed for " + path);
}

/// Read a Matrix Market coordinate real file (general or symmetric).
/// Symmetric storage is expanded to both triangles. Explicit zero entries are
/// kept as structural zeros.
inline SparseMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("read_matrix_market: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw io_error("read_matrix_market: empty file " + path);
    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || object != "matrix")
        throw io_error("read_matrix_market: bad header in " + path);
    if (format != "coordinate")
        throw io_error("read_matrix_market: only coordinate format supported (" + path + ")");
    if (field != "real" && field != "integer")
        throw io_error("read_matrix_market: only real-valued matrices supported (" + path + ")");
    bool symmetric = false;
    if (symmetry == "symmetric") {
        symmetric = true;
    } else if (symmetry != "general") {
        throw io_error("read_matrix_market: unsupported symmetry '" + symmetry + "' in " + path);
    }

    // size line, after comments
    index_t nrows = -1, ncols = -1, nnz = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '%') continue;
        std::istringstream sizes(line);
        if (!(sizes >> nrows >> ncols >> nnz))
            throw io_error("read_matrix_market: bad size line in " + path);
        break;
    }
    if (nrows < 0 || ncols < 0 || nnz < 0)
        throw io_error("read_matrix_market: missing size line in " + path);

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
    index_t seen = 0;
    while (seen < nnz && std::getline(in, line)) {
        if (line.empty() || line[0] == '%') continue;
        std::istringstream entry(line);
        index_t r, c;
        double v;
        if (!(entry >> r >> c >> v))
            throw io_error("read_matrix_market: bad entry line in " + path + ": " + line);
        if (r < 1 || r > nrows || c < 1 || c > ncols)
            throw io_error("read_matrix_market: index out of range in " + path);
        t.push_back({r - 1, c - 1, v});
        if (symmetric && r != c) t.push_back({c - 1, r - 1, v});
        ++seen;
    }
    if (seen != nnz) throw io_error("read_matrix_market: truncated file " + path);
    return SparseMatrix::from_triplets(nrows, ncols, std::move(t));
}

}  // namespace takvar
