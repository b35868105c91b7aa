#pragma once

#include <cstddef>
#include <vector>

#include "rawlsgcn/sparse.hpp"

namespace rawlsgcn {

struct BalanceConfig {
  double tolerance = 1e-8;
  std::size_t max_iterations = 10000;

  // Throws InputError unless tolerance > 0 and max_iterations >= 1.
  void validate() const;
};

// P = diag(row_scale) * M * diag(col_scale), with the same sparsity pattern as M.
struct BalanceResult {
  SparseMatrix matrix;
  std::vector<double> row_scale;
  std::vector<double> col_scale;
  std::size_t iterations = 0;
  // Worst |row or column sum - 1| of `matrix`.
  double max_deviation = 0.0;
  bool converged = false;
};

// Sinkhorn-Knopp balancing of a non-negative square matrix into doubly
// stochastic form. Starting from r = c = 1 each iteration computes
//   c <- 1 / (M^T r),   r <- 1 / (M c)
// and stops once every row and column sum of diag(r) M diag(c) is within
// cfg.tolerance of 1. Each iteration costs two sparse mat-vecs, O(nnz + n).
//
// Throws DegenerateInputError for an all-zero row or column, and
// NonConvergenceError when cfg.max_iterations is exhausted (the matrix most
// likely lacks total support).
BalanceResult sinkhorn_knopp(const SparseMatrix& m, const BalanceConfig& cfg = {});

// Strictly positive main diagonal. Sufficient for support; a symmetric
// matrix with positive diagonal also has total support.
bool has_support_diag(const SparseMatrix& m);

// Worst |row or column sum - 1|.
double doubly_stochastic_deviation(const SparseMatrix& m);

}  // namespace rawlsgcn
