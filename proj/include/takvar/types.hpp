#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace takvar {

using index_t = std::int64_t;

/// (row, col) index pair; ordering is column-major (col first, then row).
struct Coord {
    index_t row = 0;
    index_t col = 0;

    friend bool operator==(const Coord&, const Coord&) = default;
    friend bool operator<(const Coord& a, const Coord& b) {
        return a.col != b.col ? a.col < b.col : a.row < b.row;
    }
};

/// Thrown when a matrix fails a positive-definiteness check (non-positive pivot).
class not_spd_error : public std::runtime_error {
public:
    explicit not_spd_error(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when the sparse-inverse-subset exactness conditions do not hold.
class condition_error : public std::runtime_error {
public:
    explicit condition_error(const std::string& what) : std::runtime_error(what) {}
};

/// Minimal column-major dense matrix used for solve results and ensembles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(index_t nrows, index_t ncols)
        : nrows_(nrows), ncols_(ncols),
          data_(static_cast<std::size_t>(nrows) * static_cast<std::size_t>(ncols), 0.0) {
        if (nrows < 0 || ncols < 0) throw std::invalid_argument("DenseMatrix: negative dimension");
    }

    index_t nrows() const { return nrows_; }
    index_t ncols() const { return ncols_; }

    double& operator()(index_t i, index_t j) {
        return data_[static_cast<std::size_t>(j) * nrows_ + i];
    }
    double operator()(index_t i, index_t j) const {
        return data_[static_cast<std::size_t>(j) * nrows_ + i];
    }

    double* col_data(index_t j) { return data_.data() + static_cast<std::size_t>(j) * nrows_; }
    const double* col_data(index_t j) const {
        return data_.data() + static_cast<std::size_t>(j) * nrows_;
    }

    const std::vector<double>& data() const { return data_; }

private:
    index_t nrows_ = 0;
    index_t ncols_ = 0;
    std::vector<double> data_;
};

/// Symmetric reindexing map. forward()[old] is the new index of `old`;
/// inverse()[neu] recovers the original index.
class Permutation {
public:
    Permutation() = default;

    static Permutation identity(index_t n) {
        std::vector<index_t> fwd(static_cast<std::size_t>(n));
        for (index_t i = 0; i < n; ++i) fwd[static_cast<std::size_t>(i)] = i;
        return from_forward(std::move(fwd));
    }

    static Permutation from_forward(std::vector<index_t> fwd) {
        Permutation p;
        const index_t n = static_cast<index_t>(fwd.size());
        p.forward_ = std::move(fwd);
        p.inverse_.assign(static_cast<std::size_t>(n), -1);
        for (index_t i = 0; i < n; ++i) {
            const index_t f = p.forward_[static_cast<std::size_t>(i)];
            if (f < 0 || f >= n) throw std::invalid_argument("Permutation: index out of range");
            if (p.inverse_[static_cast<std::size_t>(f)] != -1)
                throw std::invalid_argument("Permutation: not a bijection");
            p.inverse_[static_cast<std::size_t>(f)] = i;
        }
        return p;
    }

    index_t size() const { return static_cast<index_t>(forward_.size()); }
    bool empty() const { return forward_.empty(); }

    index_t fwd(index_t old_index) const { return forward_[static_cast<std::size_t>(old_index)]; }
    index_t inv(index_t new_index) const { return inverse_[static_cast<std::size_t>(new_index)]; }

    const std::vector<index_t>& forward() const { return forward_; }
    const std::vector<index_t>& inverse() const { return inverse_; }

    bool is_identity() const {
        for (index_t i = 0; i < size(); ++i)
            if (fwd(i) != i) return false;
        return true;
    }

private:
    std::vector<index_t> forward_;
    std::vector<index_t> inverse_;
};

}  // namespace takvar
