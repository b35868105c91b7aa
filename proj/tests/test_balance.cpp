#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rawlsgcn/balance.hpp"
#include "rawlsgcn/data.hpp"
#include "rawlsgcn/errors.hpp"
#include "rawlsgcn/graph.hpp"

using namespace rawlsgcn;

TEST_CASE("identity is already balanced") {
  const BalanceResult r = sinkhorn_knopp(SparseMatrix::identity(5));
  CHECK(r.matrix == SparseMatrix::identity(5));
  CHECK(r.iterations == 1);
  CHECK(r.max_deviation == 0.0);
  CHECK(r.converged);
}

TEST_CASE("all-ones 2x2 balances to one half") {
  const SparseMatrix ones(2, 2, {0, 2, 4}, {0, 1, 0, 1}, {1.0, 1.0, 1.0, 1.0});
  const BalanceResult r = sinkhorn_knopp(ones);
  for (double v : r.matrix.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("path graph balance agrees with a dense alternating-scaling oracle") {
  const SparseMatrix hat = renormalized_laplacian(oracle::path_graph(3));
  const BalanceResult r = sinkhorn_knopp(hat);
  CHECK(r.max_deviation <= 1e-8);
  CHECK(doubly_stochastic_deviation(r.matrix) <= 1e-8);
  const auto ref = oracle::sinkhorn(oracle::from(hat));
  CHECK(oracle::rel_error(oracle::from(r.matrix), ref) <= 1e-7);
}

TEST_CASE("degenerate and unsupported inputs") {
  const std::vector<Edge> lone{{0, 1}};
  CHECK_THROWS_AS(sinkhorn_knopp(from_edge_list(lone, 3, true)), DegenerateInputError);
  CHECK_THROWS_AS(sinkhorn_knopp(SparseMatrix::zeros(2, 3)), InputError);

  // Upper triangular: has support but not total support, so the scaling
  // only creeps towards the identity.
  const SparseMatrix tri(2, 2, {0, 2, 3}, {0, 1, 1}, {1.0, 1.0, 1.0});
  try {
    sinkhorn_knopp(tri, {1e-8, 50});
    FAIL("expected non-convergence");
  } catch (const NonConvergenceError& e) {
    CHECK(e.max_deviation() > 1e-8);
    CHECK(e.iterations() == 50);
  }

  CHECK_THROWS_AS((BalanceConfig{0.0, 10}.validate()), InputError);
  CHECK_THROWS_AS((BalanceConfig{1e-8, 0}.validate()), InputError);
}

TEST_CASE("has_support_diag") {
  CHECK(has_support_diag(SparseMatrix::identity(3)));
  CHECK_FALSE(has_support_diag(SparseMatrix::zeros(3, 3)));
  std::mt19937_64 rng(5);
  const SparseMatrix a = from_edge_list(oracle::random_edges(20, 0.1, rng), 20, true);
  CHECK_FALSE(has_support_diag(a));
  CHECK(has_support_diag(renormalized_laplacian(a)));
}

TEST_CASE("balanced renormalized Laplacians: pattern, scales, symmetry, uniqueness") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 10 + 9 * trial;
    const SparseMatrix hat =
        renormalized_laplacian(from_edge_list(oracle::random_edges(n, 0.12, rng), n, true));
    const BalanceResult r = sinkhorn_knopp(hat);
    REQUIRE(r.converged);
    CHECK(r.max_deviation <= 1e-8);
    CHECK(r.matrix.same_pattern(hat));

    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto cols = hat.row_columns(i);
      auto vals = hat.row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const double rebuilt = r.row_scale[i] * vals[k] * r.col_scale[cols[k]];
        worst = std::max(worst, std::fabs(rebuilt - r.matrix.at(i, cols[k])));
      }
    }
    CHECK(worst <= 1e-14);
    CHECK(r.matrix.is_symmetric(1e-6));

    const BalanceResult longer = sinkhorn_knopp(hat, {1e-8, r.iterations + 500});
    const BalanceResult tighter = sinkhorn_knopp(hat, {1e-10, 10000});
    CHECK(max_abs_diff(longer.matrix.to_dense(), r.matrix.to_dense()) <= 10 * 1e-8);
    CHECK(max_abs_diff(tighter.matrix.to_dense(), r.matrix.to_dense()) <= 10 * 1e-8);
  }
}

TEST_CASE("synthetic power-law graphs balance") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SyntheticParams p;
    p.seed = seed;
    const BalanceResult r = sinkhorn_knopp(renormalized_laplacian(synthetic_powerlaw(p).adjacency));
    CHECK(r.max_deviation <= 1e-8);
    CHECK(r.matrix.is_symmetric(1e-6));
  }
}
