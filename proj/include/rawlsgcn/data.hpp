#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "rawlsgcn/dense.hpp"
#include "rawlsgcn/sparse.hpp"

namespace rawlsgcn {

// Sorted, disjoint node index sets.
struct Split {
  std::uint64_t seed = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct GraphDataset {
  SparseMatrix adjacency;  // symmetric, unit weights, no self-loops
  DenseMatrix features;    // n x d0
  std::vector<int> labels; // values in [0, num_classes)
  std::size_t num_classes = 0;
  Split split;
  std::size_t dropped_self_loops = 0;

  std::size_t num_nodes() const noexcept { return labels.size(); }
};

// Loads edges.tsv, features.csv and labels.csv from `dir`. Self-loops in the
// edge list are dropped and counted; the split is left empty.
GraphDataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const GraphDataset& dataset, const std::filesystem::path& dir);

struct SplitSizes {
  std::size_t train_per_class = 20;
  std::size_t val = 500;
  std::size_t test = 1000;
};

// `train_per_class` nodes per class, then `val` and `test` nodes drawn
// uniformly from the remainder. Deterministic per seed.
Split make_split(const GraphDataset& dataset, std::uint64_t seed, const SplitSizes& sizes = {});

// split.json cache: {"seed": int, "train": [...], "val": [...], "test": [...]}.
void save_split(const Split& split, const std::filesystem::path& path);
Split load_split(const std::filesystem::path& path, std::size_t num_nodes);

// Rescales each feature row to sum to 1 (rows summing to 0 are left as is).
void row_normalize_features(DenseMatrix& features);

struct SyntheticParams {
  std::size_t n = 2000;
  std::size_t m_attach = 2;
  std::size_t classes = 4;
  std::size_t feature_dim = 16;
  // Probability that an attachment target is drawn from the new node's own
  // community (degree-proportional within it) rather than from all nodes.
  double homophily = 0.8;
  // Standard deviation of the Gaussian noise added to the one-hot community
  // code in the features.
  double feature_noise = 1.0;
  // Holme-Kim triad formation: after the first attachment, each further
  // attachment goes to a random neighbor of the previous target with this
  // probability (0 gives plain preferential attachment).
  double triad_closure = 0.0;
  std::uint64_t seed = 0;
};

// Preferential-attachment graph with planted communities: each new node picks
// a community uniformly and attaches to m_attach distinct existing nodes with
// probability proportional to their degree. Features are onehot(community)
// padded to feature_dim plus N(0, feature_noise^2) noise. Connected by construction.
GraphDataset synthetic_powerlaw(const SyntheticParams& params);

}  // namespace rawlsgcn
