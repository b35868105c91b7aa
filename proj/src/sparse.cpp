#include "rawlsgcn/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rawlsgcn/errors.hpp"

namespace rawlsgcn {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols,
                           std::vector<std::size_t> row_offsets,
                           std::vector<std::size_t> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != rows_ + 1) throw InputError("csr: row_offsets must have rows+1 entries");
  if (row_offsets_.front() != 0) throw InputError("csr: row_offsets[0] must be 0");
  if (row_offsets_.back() != values_.size()) throw InputError("csr: last row offset != nnz");
  if (col_indices_.size() != values_.size()) throw InputError("csr: col_indices/values size mismatch");
  for (std::size_t r = 0; r < rows_; ++r) {
    if (row_offsets_[r + 1] < row_offsets_[r]) throw InputError("csr: row_offsets decreasing");
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      if (col_indices_[k] >= cols_) {
        throw InputError("csr: column index " + std::to_string(col_indices_[k]) + " out of range");
      }
      if (k > row_offsets_[r] && col_indices_[k] <= col_indices_[k - 1]) {
        throw InputError("csr: column indices not strictly increasing in row " + std::to_string(r));
      }
      if (!std::isfinite(values_[k]) || values_[k] < 0.0) {
        throw InputError("csr: values must be finite and non-negative");
      }
    }
  }
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::size_t> cols(n);
  for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
  for (std::size_t i = 0; i < n; ++i) cols[i] = i;
  return {n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0)};
}

SparseMatrix SparseMatrix::zeros(std::size_t rows, std::size_t cols) {
  return {rows, cols, std::vector<std::size_t>(rows + 1, 0), {}, {}};
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense) {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    for (std::size_t c = 0; c < dense.cols(); ++c) {
      if (dense(r, c) != 0.0) {
        cols.push_back(c);
        vals.push_back(dense(r, c));
      }
    }
    offsets.push_back(vals.size());
  }
  return {dense.rows(), dense.cols(), std::move(offsets), std::move(cols), std::move(vals)};
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  auto cols = row_columns(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return values_[row_offsets_[r] + static_cast<std::size_t>(it - cols.begin())];
}

SparseMatrix SparseMatrix::with_values(std::vector<double> values) const {
  return {rows_, cols_, row_offsets_, col_indices_, std::move(values)};
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> offsets(cols_ + 1, 0);
  for (std::size_t c : col_indices_) ++offsets[c + 1];
  for (std::size_t c = 0; c < cols_; ++c) offsets[c + 1] += offsets[c];
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  std::vector<std::size_t> cols(nnz());
  std::vector<double> vals(nnz());
  // Rows are visited in increasing order, so each output row stays sorted.
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      const std::size_t dst = cursor[col_indices_[k]]++;
      cols[dst] = r;
      vals[dst] = values_[k];
    }
  }
  return {cols_, rows_, std::move(offsets), std::move(cols), std::move(vals)};
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix out(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      out(r, col_indices_[k]) = values_[k];
    }
  }
  return out;
}

bool SparseMatrix::same_pattern(const SparseMatrix& other) const noexcept {
  return rows_ == other.rows_ && cols_ == other.cols_ && row_offsets_ == other.row_offsets_ &&
         col_indices_ == other.col_indices_;
}

bool SparseMatrix::is_symmetric(double tolerance) const {
  if (!is_square()) return false;
  const SparseMatrix t = transpose();
  if (!same_pattern(t)) return false;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (std::abs(values_[k] - t.values_[k]) > tolerance) return false;
  }
  return true;
}

DenseMatrix spmm(const SparseMatrix& m, const DenseMatrix& x) {
  if (m.cols() != x.rows()) {
    throw InputError("spmm: matrix has " + std::to_string(m.cols()) + " columns but operand has " +
                     std::to_string(x.rows()) + " rows");
  }
  DenseMatrix out(m.rows(), x.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto dst = out.row(r);
    auto cols = m.row_columns(r);
    auto vals = m.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double w = vals[k];
      auto src = x.row(cols[k]);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

DenseMatrix spmm_transpose(const SparseMatrix& m, const DenseMatrix& x) {
  if (m.rows() != x.rows()) {
    throw InputError("spmm_transpose: matrix has " + std::to_string(m.rows()) +
                     " rows but operand has " + std::to_string(x.rows()) + " rows");
  }
  DenseMatrix out(m.cols(), x.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto src = x.row(r);
    auto cols = m.row_columns(r);
    auto vals = m.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double w = vals[k];
      auto dst = out.row(cols[k]);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

std::vector<double> spmv(const SparseMatrix& m, std::span<const double> x) {
  if (m.cols() != x.size()) throw InputError("spmv: dimension mismatch");
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto cols = m.row_columns(r);
    auto vals = m.row_values(r);
    double acc = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) acc += vals[k] * x[cols[k]];
    out[r] = acc;
  }
  return out;
}

std::vector<double> spmv_transpose(const SparseMatrix& m, std::span<const double> x) {
  if (m.rows() != x.size()) throw InputError("spmv_transpose: dimension mismatch");
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto cols = m.row_columns(r);
    auto vals = m.row_values(r);
    const double xr = x[r];
    for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] += vals[k] * xr;
  }
  return out;
}

}  // namespace rawlsgcn
