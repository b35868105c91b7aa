#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>
#include <set>

#include "rawlsgcn/data.hpp"
#include "rawlsgcn/errors.hpp"
#include "rawlsgcn/fair.hpp"
#include "rawlsgcn/graph.hpp"

using namespace rawlsgcn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rawlsgcn_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

bool connected(const SparseMatrix& a) {
  std::vector<bool> seen(a.rows(), false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v : a.row_columns(u))
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
  }
  return count == a.rows();
}

}  // namespace

TEST_CASE("tiny fixture loads exactly") {
  const GraphDataset ds = load_dataset(RAWLSGCN_FIXTURES "/tiny");
  CHECK(ds.num_nodes() == 3);
  CHECK(ds.num_classes == 2);
  CHECK(ds.labels == std::vector<int>{0, 1, 0});
  REQUIRE(ds.features.rows() == 3);
  REQUIRE(ds.features.cols() == 2);
  CHECK(ds.features(0, 0) == 1.5);
  CHECK(ds.features(0, 1) == -0.25);
  CHECK(ds.features(1, 1) == 2.0);
  CHECK(ds.features(2, 0) == 0.125);
  CHECK(ds.features(2, 1) == 3e-3);
  CHECK(ds.adjacency.nnz() == 4);
  CHECK(ds.adjacency.is_symmetric());
  CHECK(ds.adjacency.at(1, 2) == 1.0);
  CHECK(ds.dropped_self_loops == 0);

  const fs::path dir = scratch_dir("roundtrip");
  save_dataset(ds, dir);
  const GraphDataset back = load_dataset(dir);
  CHECK(back.adjacency == ds.adjacency);
  CHECK(back.features == ds.features);
  CHECK(back.labels == ds.labels);
  fs::remove_all(dir);
}

TEST_CASE("load errors name the problem") {
  const fs::path dir = scratch_dir("errors");
  write(dir / "edges.tsv", "0\t1\n");
  write(dir / "features.csv", "1,2\n3,4\n");
  try {
    load_dataset(dir);
    FAIL("expected a missing-file error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("labels.csv") != std::string::npos);
  }

  write(dir / "labels.csv", "0\n1\n1\n");
  CHECK_THROWS_AS(load_dataset(dir), InputError);  // 2 feature rows, 3 labels

  write(dir / "labels.csv", "0\n-1\n");
  CHECK_THROWS_AS(load_dataset(dir), InputError);

  write(dir / "labels.csv", "0\n1\n");
  write(dir / "features.csv", "1,2\n3\n");
  CHECK_THROWS_AS(load_dataset(dir), InputError);  // ragged rows

  write(dir / "features.csv", "1,2\n3,abc\n");
  CHECK_THROWS_AS(load_dataset(dir), InputError);

  write(dir / "features.csv", "1,2\n3,4\n");
  write(dir / "edges.tsv", "0\t5\n");
  CHECK_THROWS_AS(load_dataset(dir), InputError);  // node beyond label count
  fs::remove_all(dir);
}

TEST_CASE("self-loops in the file are dropped and counted") {
  const fs::path dir = scratch_dir("selfloop");
  write(dir / "edges.tsv", "0\t0\n0\t1\n2\t2\n1\t2\n");
  write(dir / "features.csv", "1\n2\n3\n");
  write(dir / "labels.csv", "0\n0\n1\n");
  const GraphDataset ds = load_dataset(dir);
  CHECK(ds.dropped_self_loops == 2);
  for (std::size_t i = 0; i < 3; ++i) CHECK(ds.adjacency.at(i, i) == 0.0);
  CHECK(ds.adjacency.is_symmetric());
  fs::remove_all(dir);
}

TEST_CASE("features with 2879 columns load without truncation") {
  const fs::path dir = scratch_dir("wide");
  const std::size_t cols = 2879;
  {
    std::ofstream f(dir / "features.csv");
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t c = 0; c < cols; ++c) f << (c == 0 ? "" : ",") << (r * cols + c) * 0.5;
      f << '\n';
    }
  }
  write(dir / "labels.csv", "0\n1\n");
  write(dir / "edges.tsv", "0\t1\n");
  const GraphDataset ds = load_dataset(dir);
  REQUIRE(ds.features.cols() == cols);
  CHECK(ds.features(0, cols - 1) == (cols - 1) * 0.5);
  CHECK(ds.features(1, cols - 1) == (2 * cols - 1) * 0.5);
  fs::remove_all(dir);
}

TEST_CASE("splits follow the 20-per-class / 500 / 1000 protocol") {
  SyntheticParams p;
  p.classes = 7;
  p.n = 2000;
  const GraphDataset ds = synthetic_powerlaw(p);
  const Split s = make_split(ds, 3);
  CHECK(s.train.size() == 140);
  CHECK(s.val.size() == 500);
  CHECK(s.test.size() == 1000);
  std::map<int, int> per_class;
  for (std::size_t i : s.train) ++per_class[ds.labels[i]];
  CHECK(per_class.size() == 7);
  for (auto [c, k] : per_class) CHECK(k == 20);

  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 1640);
  CHECK(std::is_sorted(s.test.begin(), s.test.end()));

  const Split again = make_split(ds, 3);
  CHECK(again.train == s.train);
  CHECK(again.val == s.val);
  CHECK(again.test == s.test);
  CHECK_FALSE(make_split(ds, 4).test == s.test);
}

TEST_CASE("split errors report counts") {
  SyntheticParams p;
  p.n = 1000;
  const GraphDataset small = synthetic_powerlaw(p);
  try {
    make_split(small, 0);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("1000") != std::string::npos);
  }

  GraphDataset skewed = synthetic_powerlaw(SyntheticParams{});
  for (int& l : skewed.labels) l = l == 3 ? 0 : l;
  skewed.labels[0] = 3;  // class 3 now has a single node
  CHECK_THROWS_AS(make_split(skewed, 0), InputError);
}

TEST_CASE("split.json cache round-trips and is validated") {
  const GraphDataset ds = synthetic_powerlaw(SyntheticParams{});
  const Split s = make_split(ds, 9);
  const fs::path dir = scratch_dir("split");
  save_split(s, dir / "split.json");
  const Split back = load_split(dir / "split.json", ds.num_nodes());
  CHECK(back.seed == 9);
  CHECK(back.train == s.train);
  CHECK(back.val == s.val);
  CHECK(back.test == s.test);

  CHECK_THROWS_AS(load_split(dir / "split.json", 100), InputError);
  write(dir / "overlap.json", R"({"seed": 1, "train": [0, 1], "val": [1], "test": [2]})");
  CHECK_THROWS_AS(load_split(dir / "overlap.json", 10), InputError);
  write(dir / "broken.json", "{not json");
  CHECK_THROWS_AS(load_split(dir / "broken.json", 10), InputError);
  fs::remove_all(dir);
}

TEST_CASE("synthetic power-law graphs") {
  const GraphDataset ds = synthetic_powerlaw(SyntheticParams{});
  CHECK(ds.num_nodes() == 2000);
  CHECK(ds.adjacency.is_symmetric());
  for (std::size_t i = 0; i < 2000; ++i) CHECK(ds.adjacency.at(i, i) == 0.0);

  auto deg = integer_degrees(ds.adjacency);
  const std::size_t max_deg = *std::max_element(deg.begin(), deg.end());
  std::nth_element(deg.begin(), deg.begin() + deg.size() / 2, deg.end());
  CHECK(max_deg > 10 * deg[deg.size() / 2]);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticParams p;
    p.seed = seed;
    p.triad_closure = seed % 2 == 0 ? 0.0 : 0.7;
    CHECK(connected(synthetic_powerlaw(p).adjacency));
  }

  const GraphDataset again = synthetic_powerlaw(SyntheticParams{});
  CHECK(again.adjacency == ds.adjacency);
  CHECK(again.features == ds.features);
  CHECK(again.labels == ds.labels);
  SyntheticParams other;
  other.seed = 1;
  CHECK_FALSE(synthetic_powerlaw(other).adjacency == ds.adjacency);
}

TEST_CASE("noiseless homophilous features reveal labels") {
  SyntheticParams p;
  p.homophily = 1.0;
  p.feature_noise = 0.0;
  const GraphDataset ds = synthetic_powerlaw(p);
  // Linear read-out: the identity on the first `classes` feature columns.
  DenseMatrix logits(ds.num_nodes(), p.classes);
  for (std::size_t i = 0; i < ds.num_nodes(); ++i)
    for (std::size_t c = 0; c < p.classes; ++c) logits(i, c) = ds.features(i, c);
  std::vector<std::size_t> all(ds.num_nodes());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  CHECK(accuracy(logits, ds.labels, all) == 1.0);
}

TEST_CASE("synthetic parameter validation") {
  SyntheticParams p;
  p.n = 2;
  p.m_attach = 2;
  CHECK_THROWS_AS(synthetic_powerlaw(p), InputError);
  p = {};
  p.m_attach = 0;
  CHECK_THROWS_AS(synthetic_powerlaw(p), InputError);
  p = {};
  p.homophily = 1.5;
  CHECK_THROWS_AS(synthetic_powerlaw(p), InputError);
  p = {};
  p.feature_dim = 2;  // fewer than classes
  CHECK_THROWS_AS(synthetic_powerlaw(p), InputError);
  p = {};
  p.feature_noise = -1.0;
  CHECK_THROWS_AS(synthetic_powerlaw(p), InputError);
}

TEST_CASE("row-normalized features") {
  DenseMatrix f(2, 3, 0.0);
  f(0, 0) = 1.0;
  f(0, 2) = 3.0;
  row_normalize_features(f);
  CHECK(f(0, 0) == 0.25);
  CHECK(f(0, 2) == 0.75);
  CHECK(f(1, 1) == 0.0);
}
