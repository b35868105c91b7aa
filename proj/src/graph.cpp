#include "rawlsgcn/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

#include "rawlsgcn/errors.hpp"

namespace rawlsgcn {

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::row: return "row";
    case Normalization::column: return "column";
    case Normalization::symmetric: return "symmetric";
    case Normalization::doubly_stochastic: return "doubly_stochastic";
  }
  return "unknown";
}

Normalization parse_normalization(std::string_view name) {
  if (name == "row") return Normalization::row;
  if (name == "column" || name == "col") return Normalization::column;
  if (name == "symmetric" || name == "sym") return Normalization::symmetric;
  if (name == "doubly_stochastic" || name == "ds") return Normalization::doubly_stochastic;
  throw InputError("unknown normalization '" + std::string(name) + "'");
}

SparseMatrix from_edge_list(std::span<const Edge> edges, std::size_t n, bool symmetrize) {
  std::vector<Edge> entries;
  entries.reserve(symmetrize ? 2 * edges.size() : edges.size());
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) {
      throw InputError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") out of range for " + std::to_string(n) + " nodes");
    }
    entries.emplace_back(u, v);
    if (symmetrize && u != v) entries.emplace_back(v, u);
  }
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());

  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> cols;
  cols.reserve(entries.size());
  for (const auto& [u, v] : entries) {
    ++offsets[u + 1];
    cols.push_back(v);
  }
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<double> vals(cols.size(), 1.0);
  return {n, n, std::move(offsets), std::move(cols), std::move(vals)};
}

namespace {

std::size_t parse_index(std::string_view token, const std::filesystem::path& path,
                        std::size_t line_no) {
  std::size_t value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw InputError(path.string() + ":" + std::to_string(line_no) + ": invalid node id '" +
                     std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

}  // namespace

EdgeList read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open edge list '" + path.string() + "'");
  EdgeList out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto tokens = split_whitespace(view);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 'src<TAB>dst'");
    }
    const std::size_t u = parse_index(tokens[0], path, line_no);
    const std::size_t v = parse_index(tokens[1], path, line_no);
    out.edges.emplace_back(u, v);
    out.max_node_plus_one = std::max({out.max_node_plus_one, u + 1, v + 1});
  }
  return out;
}

void write_edge_list(const std::filesystem::path& path, std::span<const Edge> edges) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write edge list '" + path.string() + "'");
  for (const auto& [u, v] : edges) out << u << '\t' << v << '\n';
}

SparseMatrix add_self_loops(const SparseMatrix& m) {
  if (!m.is_square()) throw InputError("add_self_loops: matrix must be square");
  const std::size_t n = m.rows();
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(m.nnz() + n);
  vals.reserve(m.nnz() + n);
  for (std::size_t r = 0; r < n; ++r) {
    auto rc = m.row_columns(r);
    auto rv = m.row_values(r);
    bool placed = false;
    for (std::size_t k = 0; k < rc.size(); ++k) {
      if (!placed && rc[k] >= r) {
        if (rc[k] == r) {
          cols.push_back(r);
          vals.push_back(rv[k] + 1.0);
          placed = true;
          continue;
        }
        cols.push_back(r);
        vals.push_back(1.0);
        placed = true;
      }
      cols.push_back(rc[k]);
      vals.push_back(rv[k]);
    }
    if (!placed) {
      cols.push_back(r);
      vals.push_back(1.0);
    }
    offsets.push_back(vals.size());
  }
  return {n, n, std::move(offsets), std::move(cols), std::move(vals)};
}

namespace {

SparseMatrix scale_rows_cols(const SparseMatrix& m, std::span<const double> row_factor,
                             std::span<const double> col_factor) {
  std::vector<double> vals(m.values().begin(), m.values().end());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto cols = m.row_columns(r);
    const std::size_t base = m.row_offsets()[r];
    for (std::size_t k = 0; k < cols.size(); ++k) {
      vals[base + k] = vals[base + k] * row_factor[r] * col_factor[cols[k]];
    }
  }
  return m.with_values(std::move(vals));
}

std::vector<double> reciprocal_of_positive(std::span<const double> sums, const char* what) {
  std::vector<double> out(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (!(sums[i] > 0.0)) {
      throw DegenerateInputError(std::string("normalize: ") + what + " " + std::to_string(i) +
                                 " sums to zero");
    }
    out[i] = 1.0 / sums[i];
  }
  return out;
}

SparseMatrix symmetric_normalize(const SparseMatrix& m) {
  const auto d = degrees(m, Axis::row);
  std::vector<double> vals(m.values().begin(), m.values().end());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (!(d[r] > 0.0)) {
      throw DegenerateInputError("normalize: row " + std::to_string(r) + " sums to zero");
    }
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto cols = m.row_columns(r);
    const std::size_t base = m.row_offsets()[r];
    // d_r * d_c commutes, so a symmetric input yields a bitwise symmetric output.
    for (std::size_t k = 0; k < cols.size(); ++k) {
      vals[base + k] = vals[base + k] / std::sqrt(d[r] * d[cols[k]]);
    }
  }
  return m.with_values(std::move(vals));
}

}  // namespace

SparseMatrix renormalized_laplacian(const SparseMatrix& adjacency) {
  return symmetric_normalize(add_self_loops(adjacency));
}

SparseMatrix normalize(const SparseMatrix& m, Normalization variant, const BalanceConfig& balance) {
  if (!m.is_square()) throw InputError("normalize: matrix must be square");
  const std::vector<double> ones(m.rows(), 1.0);
  switch (variant) {
    case Normalization::row: {
      const auto inv = reciprocal_of_positive(degrees(m, Axis::row), "row");
      return scale_rows_cols(m, inv, ones);
    }
    case Normalization::column: {
      const auto inv = reciprocal_of_positive(degrees(m, Axis::column), "column");
      return scale_rows_cols(m, ones, inv);
    }
    case Normalization::symmetric:
      return symmetric_normalize(m);
    case Normalization::doubly_stochastic:
      return sinkhorn_knopp(m, balance).matrix;
  }
  throw InputError("normalize: unknown variant");
}

SparseMatrix propagation_matrix(const SparseMatrix& adjacency, Normalization variant,
                                const BalanceConfig& balance) {
  if (variant == Normalization::doubly_stochastic) {
    return normalize(renormalized_laplacian(adjacency), variant, balance);
  }
  return normalize(add_self_loops(adjacency), variant, balance);
}

std::vector<double> degrees(const SparseMatrix& m, Axis axis) {
  if (axis == Axis::row) {
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double acc = 0.0;
      for (double v : m.row_values(r)) acc += v;
      out[r] = acc;
    }
    return out;
  }
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto cols = m.row_columns(r);
    auto vals = m.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] += vals[k];
  }
  return out;
}

std::vector<std::size_t> integer_degrees(const SparseMatrix& adjacency) {
  std::vector<std::size_t> out(adjacency.rows());
  for (std::size_t r = 0; r < adjacency.rows(); ++r) out[r] = adjacency.row_columns(r).size();
  return out;
}

}  // namespace rawlsgcn
