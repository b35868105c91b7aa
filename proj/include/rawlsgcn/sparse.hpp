#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rawlsgcn/dense.hpp"

namespace rawlsgcn {

// Canonical CSR matrix with finite, non-negative values. Column indices are
// strictly increasing within each row. Immutable after construction.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  // Validates the CSR invariants; throws InputError on violation.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
               std::vector<std::size_t> col_indices, std::vector<double> values);

  static SparseMatrix identity(std::size_t n);
  static SparseMatrix zeros(std::size_t rows, std::size_t cols);
  static SparseMatrix from_dense(const DenseMatrix& dense);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const std::size_t> row_columns(std::size_t r) const {
    return {col_indices_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }

  // Stored value at (r, c), or 0 when the entry is not stored.
  double at(std::size_t r, std::size_t c) const;

  // Same sparsity pattern, new values.
  SparseMatrix with_values(std::vector<double> values) const;

  SparseMatrix transpose() const;
  DenseMatrix to_dense() const;

  // Same pattern and |a_ij - a_ji| <= tolerance for every stored entry.
  bool is_symmetric(double tolerance = 0.0) const;
  bool same_pattern(const SparseMatrix& other) const noexcept;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

// m * x
DenseMatrix spmm(const SparseMatrix& m, const DenseMatrix& x);
// m^T * x without materializing m^T
DenseMatrix spmm_transpose(const SparseMatrix& m, const DenseMatrix& x);

// m * x and m^T * x for vectors.
std::vector<double> spmv(const SparseMatrix& m, std::span<const double> x);
std::vector<double> spmv_transpose(const SparseMatrix& m, std::span<const double> x);

}  // namespace rawlsgcn
