#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace adequate {

using RowIndex = std::uint32_t;

// Sparse matrix whose stored entries are all 1 (compressed sparse column).
// Row indices within each column are strictly increasing.
class BinaryMatrix {
public:
    BinaryMatrix() = default;

    // Each entry of `columns` lists the rows holding a 1. Lists are sorted
    // here; duplicates or out-of-range rows throw InputError.
    BinaryMatrix(std::size_t n_rows, std::vector<std::vector<RowIndex>> columns);

    // (row, col) pairs, value implicitly 1.
    static BinaryMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                      std::span<const std::pair<RowIndex, std::uint32_t>> entries);

    std::size_t rows() const { return n_rows_; }
    std::size_t cols() const { return col_ptr_.size() - 1; }
    std::size_t nnz() const { return row_idx_.size(); }

    std::span<const RowIndex> column(std::size_t j) const {
        return {row_idx_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
    }
    std::size_t column_count(std::size_t j) const { return col_ptr_[j + 1] - col_ptr_[j]; }

    // Sub-matrix over the given rows; output row k is input row rows[k].
    // Rows must be distinct.
    BinaryMatrix select_rows(std::span<const RowIndex> rows) const;
    BinaryMatrix select_columns(std::span<const std::uint32_t> cols) const;

    bool operator==(const BinaryMatrix&) const = default;

private:
    std::size_t n_rows_ = 0;
    std::vector<std::size_t> col_ptr_{0};
    std::vector<RowIndex> row_idx_;
};

}  // namespace adequate
