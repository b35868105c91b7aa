#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rawlsgcn/balance.hpp"
#include "rawlsgcn/sparse.hpp"

namespace rawlsgcn {

using Edge = std::pair<std::size_t, std::size_t>;

enum class Normalization { row, column, symmetric, doubly_stochastic };
enum class Axis { row, column };

std::string_view to_string(Normalization n);
// Accepts "row", "column", "symmetric", "doubly_stochastic" (also "ds").
Normalization parse_normalization(std::string_view name);

// Unit-weight adjacency matrix. Duplicate edges collapse to a single entry;
// with `symmetrize` every (u, v) also stores (v, u).
SparseMatrix from_edge_list(std::span<const Edge> edges, std::size_t n, bool symmetrize);

struct EdgeList {
  std::vector<Edge> edges;
  std::size_t max_node_plus_one = 0;  // 0 for an empty list
};

// Reads `src<TAB>dst` lines; blank lines and text after '#' are ignored.
// Any whitespace is accepted as separator.
EdgeList read_edge_list(const std::filesystem::path& path);
void write_edge_list(const std::filesystem::path& path, std::span<const Edge> edges);

// M + I. Existing diagonal entries are incremented by one.
SparseMatrix add_self_loops(const SparseMatrix& m);

// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
SparseMatrix renormalized_laplacian(const SparseMatrix& adjacency);

// Rescales the stored entries of `m` without changing its pattern.
//   row:       each row sums to 1
//   column:    each column sums to 1
//   symmetric: D^-1/2 M D^-1/2 with D from row sums
//   doubly_stochastic: Sinkhorn-Knopp balancing with `balance`
// Callers pass A + I for row/column/symmetric and the renormalized
// Laplacian for doubly_stochastic (see propagation_matrix).
SparseMatrix normalize(const SparseMatrix& m, Normalization variant,
                       const BalanceConfig& balance = {});

// Propagation matrix used for training on `adjacency` (no self-loops):
// row/column/symmetric normalize A + I, doubly_stochastic balances the
// renormalized Laplacian.
SparseMatrix propagation_matrix(const SparseMatrix& adjacency, Normalization variant,
                                const BalanceConfig& balance = {});

std::vector<double> degrees(const SparseMatrix& m, Axis axis = Axis::row);

// Number of stored entries per row, i.e. the integer degree of an
// unweighted adjacency matrix without self-loops.
std::vector<std::size_t> integer_degrees(const SparseMatrix& adjacency);

}  // namespace rawlsgcn
