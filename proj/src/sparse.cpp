#include "adequate/sparse.hpp"

#include <algorithm>
#include <string>

#include "adequate/errors.hpp"

namespace adequate {

BinaryMatrix::BinaryMatrix(std::size_t n_rows, std::vector<std::vector<RowIndex>> columns)
    : n_rows_(n_rows) {
    std::size_t total = 0;
    for (const auto& c : columns) total += c.size();
    row_idx_.reserve(total);
    col_ptr_.reserve(columns.size() + 1);
    for (std::size_t j = 0; j < columns.size(); ++j) {
        auto& c = columns[j];
        std::sort(c.begin(), c.end());
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (c[k] >= n_rows) {
                throw InputError("row " + std::to_string(c[k]) + " in column " + std::to_string(j) +
                                 " exceeds declared row count " + std::to_string(n_rows));
            }
            if (k > 0 && c[k] == c[k - 1]) {
                throw InputError("duplicate entry (" + std::to_string(c[k]) + ", " + std::to_string(j) + ")");
            }
        }
        row_idx_.insert(row_idx_.end(), c.begin(), c.end());
        col_ptr_.push_back(row_idx_.size());
    }
}

BinaryMatrix BinaryMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                         std::span<const std::pair<RowIndex, std::uint32_t>> entries) {
    std::vector<std::vector<RowIndex>> columns(n_cols);
    for (const auto& [r, c] : entries) {
        if (c >= n_cols) {
            throw InputError("column " + std::to_string(c) + " exceeds declared column count " +
                             std::to_string(n_cols));
        }
        if (r >= n_rows) {
            throw InputError("row " + std::to_string(r) + " exceeds declared row count " +
                             std::to_string(n_rows));
        }
        columns[c].push_back(r);
    }
    return BinaryMatrix(n_rows, std::move(columns));
}

BinaryMatrix BinaryMatrix::select_rows(std::span<const RowIndex> rows) const {
    constexpr RowIndex kAbsent = static_cast<RowIndex>(-1);
    std::vector<RowIndex> remap(n_rows_, kAbsent);
    bool ascending = true;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        remap[rows[k]] = static_cast<RowIndex>(k);
        if (k > 0 && rows[k] <= rows[k - 1]) ascending = false;
    }

    BinaryMatrix out;
    out.n_rows_ = rows.size();
    out.col_ptr_.reserve(col_ptr_.size());
    for (std::size_t j = 0; j + 1 < col_ptr_.size(); ++j) {
        const std::size_t begin = out.row_idx_.size();
        for (RowIndex r : column(j)) {
            if (remap[r] != kAbsent) out.row_idx_.push_back(remap[r]);
        }
        if (!ascending) std::sort(out.row_idx_.begin() + static_cast<std::ptrdiff_t>(begin), out.row_idx_.end());
        out.col_ptr_.push_back(out.row_idx_.size());
    }
    return out;
}

BinaryMatrix BinaryMatrix::select_columns(std::span<const std::uint32_t> cols) const {
    BinaryMatrix out;
    out.n_rows_ = n_rows_;
    for (std::uint32_t j : cols) {
        auto c = column(j);
        out.row_idx_.insert(out.row_idx_.end(), c.begin(), c.end());
        out.col_ptr_.push_back(out.row_idx_.size());
    }
    return out;
}

}  // namespace adequate
