#include "rawlsgcn/balance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rawlsgcn/errors.hpp"

namespace rawlsgcn {

namespace {

double max_unit_deviation(std::span<const double> scale, std::span<const double> sums) {
  double worst = 0.0;
  for (std::size_t i = 0; i < scale.size(); ++i) {
    worst = std::max(worst, std::abs(scale[i] * sums[i] - 1.0));
  }
  return worst;
}

void reciprocal_in_place(std::vector<double>& v) {
  for (double& x : v) x = 1.0 / x;
}

}  // namespace

void BalanceConfig::validate() const {
  if (!(tolerance > 0.0)) throw InputError("balance: tolerance must be positive");
  if (max_iterations < 1) throw InputError("balance: max_iterations must be >= 1");
}

double doubly_stochastic_deviation(const SparseMatrix& m) {
  const std::vector<double> ones_c(m.cols(), 1.0);
  const std::vector<double> ones_r(m.rows(), 1.0);
  const auto row_sums = spmv(m, ones_c);
  const auto col_sums = spmv_transpose(m, ones_r);
  double worst = 0.0;
  for (double s : row_sums) worst = std::max(worst, std::abs(s - 1.0));
  for (double s : col_sums) worst = std::max(worst, std::abs(s - 1.0));
  return worst;
}

bool has_support_diag(const SparseMatrix& m) {
  if (!m.is_square()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (!(m.at(i, i) > 0.0)) return false;
  }
  return true;
}

BalanceResult sinkhorn_knopp(const SparseMatrix& m, const BalanceConfig& cfg) {
  cfg.validate();
  if (!m.is_square()) throw InputError("sinkhorn_knopp: matrix must be square");
  const std::size_t n = m.rows();

  {
    const std::vector<double> ones(n, 1.0);
    const auto row_sums = spmv(m, ones);
    const auto col_sums = spmv_transpose(m, ones);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(row_sums[i] > 0.0)) {
        throw DegenerateInputError("sinkhorn_knopp: row " + std::to_string(i) + " is all zero");
      }
      if (!(col_sums[i] > 0.0)) {
        throw DegenerateInputError("sinkhorn_knopp: column " + std::to_string(i) + " is all zero");
      }
    }
  }

  std::vector<double> r(n, 1.0);
  std::vector<double> c(n, 1.0);
  std::vector<double> row_prod;  // M c from the previous half-step
  std::size_t iterations = 0;
  bool converged = false;

  for (std::size_t k = 0; k <= cfg.max_iterations; ++k) {
    // M^T r doubles as the column-sum check of the current iterate.
    std::vector<double> col_prod = spmv_transpose(m, r);
    if (k > 0) {
      const double dev = std::max(max_unit_deviation(c, col_prod),
                                  max_unit_deviation(r, row_prod));
      if (dev <= cfg.tolerance) {
        converged = true;
        break;
      }
      if (k == cfg.max_iterations) break;
    }
    c = std::move(col_prod);
    reciprocal_in_place(c);
    row_prod = spmv(m, c);
    r = row_prod;
    reciprocal_in_place(r);
    ++iterations;
  }

  std::vector<double> scaled(m.values().begin(), m.values().end());
  for (std::size_t i = 0; i < n; ++i) {
    auto cols = m.row_columns(i);
    const std::size_t base = m.row_offsets()[i];
    for (std::size_t k = 0; k < cols.size(); ++k) scaled[base + k] *= r[i] * c[cols[k]];
  }

  BalanceResult result{m.with_values(std::move(scaled)), std::move(r), std::move(c), iterations,
                       0.0, false};
  result.max_deviation = doubly_stochastic_deviation(result.matrix);
  result.converged = converged && result.max_deviation <= cfg.tolerance;
  if (!result.converged) {
    throw NonConvergenceError("sinkhorn_knopp: no doubly stochastic form within " +
                                  std::to_string(cfg.max_iterations) +
                                  " iterations (max deviation " +
                                  std::to_string(result.max_deviation) +
                                  "); matrix may lack total support",
                              result.max_deviation, iterations);
  }
  return result;
}

}  // namespace rawlsgcn
