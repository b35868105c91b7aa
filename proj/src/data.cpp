#include "rawlsgcn/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <string_view>

#include <json.hpp>

#include "rawlsgcn/errors.hpp"
#include "rawlsgcn/graph.hpp"

namespace rawlsgcn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::ifstream open_required(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("missing or unreadable file '" + path.string() + "'");
  return in;
}

template <typename T>
T parse_number(std::string_view token, const std::filesystem::path& path, std::size_t line_no) {
  token = trim(token);
  T value{};
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc{} || ptr != end) {
    throw InputError(path.string() + ":" + std::to_string(line_no) + ": cannot parse '" +
                     std::string(token) + "'");
  }
  return value;
}

DenseMatrix read_features(const std::filesystem::path& path) {
  auto in = open_required(path);
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      const auto token = view.substr(start, comma == std::string_view::npos ? view.size() - start
                                                                           : comma - start);
      values.push_back(parse_number<double>(token, path, line_no));
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(cols) + " columns, found " + std::to_string(count));
    }
    ++rows;
  }
  return {rows, cols, std::move(values)};
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = open_required(path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const int label = parse_number<int>(line, path, line_no);
    if (label < 0) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": unknown class index " +
                       std::to_string(label));
    }
    labels.push_back(label);
  }
  return labels;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

GraphDataset load_dataset(const std::filesystem::path& dir) {
  const auto edge_path = dir / "edges.tsv";
  const auto feature_path = dir / "features.csv";
  const auto label_path = dir / "labels.csv";
  for (const auto& p : {edge_path, feature_path, label_path}) {
    if (!std::filesystem::exists(p)) throw InputError("missing file '" + p.string() + "'");
  }
  GraphDataset ds;
  ds.labels = read_labels(label_path);
  ds.features = read_features(feature_path);
  const std::size_t n = ds.labels.size();
  if (ds.features.rows() != n) {
    throw InputError("features.csv has " + std::to_string(ds.features.rows()) +
                     " rows but labels.csv has " + std::to_string(n));
  }
  const EdgeList edges = read_edge_list(edge_path);
  if (edges.max_node_plus_one > n) {
    throw InputError("edges.tsv references node " + std::to_string(edges.max_node_plus_one - 1) +
                     " but only " + std::to_string(n) + " nodes are labeled");
  }
  std::vector<Edge> kept;
  kept.reserve(edges.edges.size());
  for (const auto& e : edges.edges) {
    if (e.first == e.second) {
      ++ds.dropped_self_loops;
    } else {
      kept.push_back(e);
    }
  }
  ds.adjacency = from_edge_list(kept, n, /*symmetrize=*/true);
  ds.num_classes = n == 0 ? 0 : static_cast<std::size_t>(*std::max_element(ds.labels.begin(), ds.labels.end())) + 1;
  return ds;
}

void save_dataset(const GraphDataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<Edge> edges;
  const auto& a = dataset.adjacency;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c : a.row_columns(r)) {
      if (r < c) edges.emplace_back(r, c);
    }
  }
  write_edge_list(dir / "edges.tsv", edges);

  std::ofstream features(dir / "features.csv");
  if (!features) throw InputError("cannot write features.csv in '" + dir.string() + "'");
  char buf[32];
  for (std::size_t r = 0; r < dataset.features.rows(); ++r) {
    auto row = dataset.features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), row[c]);
      if (c) features << ',';
      features.write(buf, end - buf);
    }
    features << '\n';
  }
  std::ofstream labels(dir / "labels.csv");
  for (int label : dataset.labels) labels << label << '\n';
}

Split make_split(const GraphDataset& dataset, std::uint64_t seed, const SplitSizes& sizes) {
  const std::size_t n = dataset.num_nodes();
  const std::size_t classes = dataset.num_classes;
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
  for (std::size_t c = 0; c < classes; ++c) {
    if (by_class[c].size() < sizes.train_per_class) {
      throw InputError("make_split: class " + std::to_string(c) + " has " +
                       std::to_string(by_class[c].size()) + " nodes, need " +
                       std::to_string(sizes.train_per_class));
    }
  }
  const std::size_t needed = sizes.train_per_class * classes + sizes.val + sizes.test;
  if (n < needed) {
    throw InputError("make_split: dataset has " + std::to_string(n) + " nodes, need " +
                     std::to_string(needed) + " (" + std::to_string(sizes.train_per_class) + " x " +
                     std::to_string(classes) + " train + " + std::to_string(sizes.val) + " val + " +
                     std::to_string(sizes.test) + " test)");
  }

  std::mt19937_64 rng(seed);
  Split split;
  split.seed = seed;
  std::vector<char> taken(n, 0);
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < sizes.train_per_class; ++k) {
      split.train.push_back(members[k]);
      taken[members[k]] = 1;
    }
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (!taken[i]) rest.push_back(i);
  }
  std::shuffle(rest.begin(), rest.end(), rng);
  split.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(sizes.val));
  split.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(sizes.val),
                    rest.begin() + static_cast<std::ptrdiff_t>(sizes.val + sizes.test));
  split.train = sorted(std::move(split.train));
  split.val = sorted(std::move(split.val));
  split.test = sorted(std::move(split.test));
  return split;
}

void save_split(const Split& split, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["seed"] = split.seed;
  doc["train"] = split.train;
  doc["val"] = split.val;
  doc["test"] = split.test;
  std::ofstream out(path);
  if (!out) throw InputError("cannot write split file '" + path.string() + "'");
  out << doc.dump(1) << '\n';
}

Split load_split(const std::filesystem::path& path, std::size_t num_nodes) {
  auto in = open_required(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("split file '" + path.string() + "': " + e.what());
  }
  Split split;
  try {
    split.seed = doc.at("seed").get<std::uint64_t>();
    split.train = sorted(doc.at("train").get<std::vector<std::size_t>>());
    split.val = sorted(doc.at("val").get<std::vector<std::size_t>>());
    split.test = sorted(doc.at("test").get<std::vector<std::size_t>>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError("split file '" + path.string() + "': " + e.what());
  }
  std::vector<char> seen(num_nodes, 0);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (std::size_t i : *part) {
      if (i >= num_nodes) throw InputError("split file: node " + std::to_string(i) + " out of range");
      if (seen[i]) throw InputError("split file: node " + std::to_string(i) + " in two masks");
      seen[i] = 1;
    }
  }
  return split;
}

void row_normalize_features(DenseMatrix& features) {
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto row = features.row(r);
    double sum = 0.0;
    for (double v : row) sum += v;
    if (sum == 0.0) continue;
    for (double& v : row) v /= sum;
  }
}

GraphDataset synthetic_powerlaw(const SyntheticParams& p) {
  if (p.m_attach < 1) throw InputError("synthetic_powerlaw: m_attach must be >= 1");
  if (p.n <= p.m_attach) throw InputError("synthetic_powerlaw: n must exceed m_attach");
  if (p.classes < 1) throw InputError("synthetic_powerlaw: need at least one class");
  if (p.feature_dim < p.classes) {
    throw InputError("synthetic_powerlaw: feature_dim must be >= classes");
  }
  if (!(p.homophily >= 0.0 && p.homophily <= 1.0)) {
    throw InputError("synthetic_powerlaw: homophily must lie in [0, 1]");
  }
  if (!(p.feature_noise >= 0.0)) throw InputError("synthetic_powerlaw: feature_noise must be >= 0");
  if (!(p.triad_closure >= 0.0 && p.triad_closure <= 1.0)) {
    throw InputError("synthetic_powerlaw: triad_closure must lie in [0, 1]");
  }

  std::mt19937_64 rng(p.seed);
  std::uniform_int_distribution<std::size_t> pick_class(0, p.classes - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<int> labels(p.n);
  for (auto& l : labels) l = static_cast<int>(pick_class(rng));

  // Each node appears once per incident edge end, so uniform draws from
  // these lists are degree-proportional.
  std::vector<std::size_t> endpoints;
  std::vector<std::vector<std::size_t>> class_endpoints(p.classes);
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> neighbors(p.n);
  auto add_edge = [&](std::size_t u, std::size_t v) {
    edges.emplace_back(u, v);
    neighbors[u].push_back(v);
    neighbors[v].push_back(u);
    endpoints.push_back(u);
    endpoints.push_back(v);
    class_endpoints[static_cast<std::size_t>(labels[u])].push_back(u);
    class_endpoints[static_cast<std::size_t>(labels[v])].push_back(v);
  };

  const std::size_t core = p.m_attach + 1;
  for (std::size_t u = 0; u < core; ++u) {
    for (std::size_t v = u + 1; v < core; ++v) add_edge(u, v);
  }

  std::vector<std::size_t> chosen;
  for (std::size_t node = core; node < p.n; ++node) {
    const auto& own = class_endpoints[static_cast<std::size_t>(labels[node])];
    chosen.clear();
    std::size_t attempts = 0;
    while (chosen.size() < p.m_attach) {
      const bool local = !own.empty() && coin(rng) < p.homophily;
      const auto& pool = local ? own : endpoints;
      std::size_t target;
      if (!chosen.empty() && attempts < 64 * p.m_attach && p.triad_closure > 0.0 &&
          coin(rng) < p.triad_closure) {
        const auto& around = neighbors[chosen.back()];
        target = around[std::uniform_int_distribution<std::size_t>(0, around.size() - 1)(rng)];
      } else if (attempts < 64 * p.m_attach) {
        target = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      } else {
        // Pool exhausted by duplicates; fall back to a uniform existing node.
        target = std::uniform_int_distribution<std::size_t>(0, node - 1)(rng);
      }
      ++attempts;
      if (std::find(chosen.begin(), chosen.end(), target) == chosen.end()) chosen.push_back(target);
    }
    for (std::size_t target : chosen) add_edge(node, target);
  }

  GraphDataset ds;
  ds.adjacency = from_edge_list(edges, p.n, /*symmetrize=*/true);
  ds.labels = std::move(labels);
  ds.num_classes = p.classes;
  ds.features = DenseMatrix(p.n, p.feature_dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < p.n; ++i) {
    auto row = ds.features.row(i);
    for (double& v : row) v = p.feature_noise > 0.0 ? p.feature_noise * noise(rng) : 0.0;
    row[static_cast<std::size_t>(ds.labels[i])] += 1.0;
  }
  return ds;
}

}  // namespace rawlsgcn
