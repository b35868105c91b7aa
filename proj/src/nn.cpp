#include "rawlsgcn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "rawlsgcn/errors.hpp"
#include "rawlsgcn/graph.hpp"

namespace rawlsgcn {

std::size_t GcnModel::input_dim() const {
  if (layers.empty()) throw InputError("gcn: model has no layers");
  return layers.front().weight.rows();
}

std::size_t GcnModel::output_dim() const {
  if (layers.empty()) throw InputError("gcn: model has no layers");
  return layers.back().weight.cols();
}

void GcnModel::validate() const {
  if (layers.empty()) throw InputError("gcn: model has no layers");
  for (std::size_t l = 1; l < layers.size(); ++l) {
    if (layers[l - 1].weight.cols() != layers[l].weight.rows()) {
      throw InputError("gcn: layer " + std::to_string(l) + " input dim does not match layer " +
                       std::to_string(l - 1) + " output dim");
    }
  }
  if (layers.back().activation != Activation::none) {
    throw InputError("gcn: last layer must have no activation");
  }
}

DenseMatrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  DenseMatrix w(rows, cols);
  for (double& v : w.values()) v = dist(rng);
  return w;
}

GcnModel make_gcn(std::span<const std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw InputError("make_gcn: need at least input and output dims");
  GcnModel model;
  std::vector<std::uint64_t> layer_seeds(dims.size() - 1);
  {
    std::mt19937_64 rng(seed);
    for (auto& s : layer_seeds) s = rng();
  }
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const bool last = l + 2 == dims.size();
    model.layers.push_back({glorot_init(dims[l], dims[l + 1], layer_seeds[l]),
                            last ? Activation::none : Activation::relu});
  }
  return model;
}

ForwardTape forward(const GcnModel& model, const SparseMatrix& propagation, const DenseMatrix& x) {
  model.validate();
  if (propagation.rows() != propagation.cols() || propagation.rows() != x.rows()) {
    throw InputError("forward: propagation matrix is " + std::to_string(propagation.rows()) + "x" +
                     std::to_string(propagation.cols()) + " but features have " +
                     std::to_string(x.rows()) + " rows");
  }
  if (x.cols() != model.input_dim()) {
    throw InputError("forward: features have " + std::to_string(x.cols()) +
                     " columns, model expects " + std::to_string(model.input_dim()));
  }
  ForwardTape tape;
  tape.layers.reserve(model.depth());
  DenseMatrix h = x;
  for (const auto& layer : model.layers) {
    DenseMatrix e = spmm(propagation, matmul(h, layer.weight));
    DenseMatrix out = e;
    if (layer.activation == Activation::relu) {
      for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    }
    tape.layers.push_back({std::move(h), std::move(e), out});
    h = std::move(out);
  }
  return tape;
}

namespace {

void check_labels(const DenseMatrix& logits, std::span<const int> labels,
                  std::span<const std::size_t> rows) {
  if (labels.size() != logits.rows()) throw InputError("labels/logits row count mismatch");
  const auto classes = static_cast<int>(logits.cols());
  for (std::size_t r : rows) {
    if (r >= logits.rows()) throw InputError("mask index " + std::to_string(r) + " out of range");
    if (labels[r] < 0 || labels[r] >= classes) {
      throw InputError("label " + std::to_string(labels[r]) + " of node " + std::to_string(r) +
                       " is not a valid class");
    }
  }
}

// log(sum(exp(row))) computed around the row maximum.
double log_sum_exp(std::span<const double> row) {
  const double peak = *std::max_element(row.begin(), row.end());
  double acc = 0.0;
  for (double v : row) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

}  // namespace

LossResult loss_and_grad(const DenseMatrix& logits, std::span<const int> labels,
                         std::span<const std::size_t> mask) {
  if (mask.empty()) throw InputError("loss: empty mask");
  check_labels(logits, labels, mask);
  LossResult out{0.0, DenseMatrix(logits.rows(), logits.cols())};
  const double inv = 1.0 / static_cast<double>(mask.size());
  for (std::size_t r : mask) {
    auto row = logits.row(r);
    const double lse = log_sum_exp(row);
    const auto label = static_cast<std::size_t>(labels[r]);
    out.loss += lse - row[label];
    auto grad = out.d_logits.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      grad[c] = std::exp(row[c] - lse) * inv;
    }
    grad[label] -= inv;
  }
  out.loss *= inv;
  return out;
}

std::vector<double> per_node_cross_entropy(const DenseMatrix& logits, std::span<const int> labels) {
  std::vector<std::size_t> all(logits.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  check_labels(logits, labels, all);
  std::vector<double> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    out[r] = log_sum_exp(row) - row[static_cast<std::size_t>(labels[r])];
  }
  return out;
}

BackwardResult backward(const GcnModel& model, const ForwardTape& tape,
                        const SparseMatrix& forward_matrix, const SparseMatrix& gradient_matrix,
                        const DenseMatrix& d_logits) {
  model.validate();
  if (tape.layers.size() != model.depth()) throw InputError("backward: tape/model depth mismatch");
  const std::size_t n = forward_matrix.rows();
  if (gradient_matrix.rows() != n || gradient_matrix.cols() != n) {
    throw InputError("backward: gradient matrix shape differs from forward matrix");
  }
  for (std::size_t l = 0; l < model.depth(); ++l) {
    const auto& rec = tape.layers[l];
    if (rec.input.cols() != model.layers[l].weight.rows() ||
        rec.pre_activation.cols() != model.layers[l].weight.cols() || rec.input.rows() != n) {
      throw InputError("backward: tape layer " + std::to_string(l) + " does not match model");
    }
  }
  const auto& logits = tape.logits();
  if (d_logits.rows() != logits.rows() || d_logits.cols() != logits.cols()) {
    throw InputError("backward: dLogits shape mismatch");
  }

  BackwardResult out;
  out.grads.weights.resize(model.depth());
  out.pre_activation.resize(model.depth());
  DenseMatrix d_out = d_logits;  // dJ/dH^(l)
  for (std::size_t l = model.depth(); l-- > 0;) {
    const auto& layer = model.layers[l];
    const auto& rec = tape.layers[l];
    DenseMatrix d_pre = std::move(d_out);
    if (layer.activation == Activation::relu) {
      auto dv = d_pre.values();
      auto ev = rec.pre_activation.values();
      for (std::size_t k = 0; k < dv.size(); ++k) {
        if (!(ev[k] > 0.0)) dv[k] = 0.0;
      }
    }
    out.grads.weights[l] = matmul_tn(rec.input, spmm_transpose(gradient_matrix, d_pre));
    if (l > 0) {
      d_out = matmul_nt(spmm_transpose(forward_matrix, d_pre), layer.weight);
    }
    out.pre_activation[l] = std::move(d_pre);
  }
  return out;
}

DenseMatrix influence_decomposition(const DenseMatrix& layer_input, const SparseMatrix& a,
                                    const DenseMatrix& d_pre_activation, InfluenceMode mode,
                                    InfluenceWeights weights, double symmetry_tolerance) {
  const std::size_t n = a.rows();
  if (!a.is_square() || layer_input.rows() != n || d_pre_activation.rows() != n) {
    throw InputError("influence_decomposition: dimension mismatch");
  }
  double scale = 0.0;
  for (double v : a.values()) scale = std::max(scale, v);
  if (!a.is_symmetric(symmetry_tolerance * scale)) {
    throw InputError("influence_decomposition: matrix is not symmetric");
  }
  const auto deg = degrees(a, Axis::row);
  const std::size_t d_in = layer_input.cols();
  const std::size_t d_out = d_pre_activation.cols();
  DenseMatrix grad(d_in, d_out);

  // `left` is the expected/own row of H, `right` the own/expected row of dE.
  std::vector<double> mean;
  for (std::size_t node = 0; node < n; ++node) {
    if (!(deg[node] > 0.0)) continue;
    const double w = weights == InfluenceWeights::degree ? deg[node] : 1.0;
    const DenseMatrix& averaged = mode == InfluenceMode::row ? d_pre_activation : layer_input;
    mean.assign(averaged.cols(), 0.0);
    auto cols = a.row_columns(node);
    auto vals = a.row_values(node);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double p = vals[k] / deg[node];
      auto src = averaged.row(cols[k]);
      for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p * src[c];
    }
    std::span<const double> left = mode == InfluenceMode::row
                                       ? layer_input.row(node)
                                       : std::span<const double>(mean);
    std::span<const double> right = mode == InfluenceMode::row
                                        ? std::span<const double>(mean)
                                        : d_pre_activation.row(node);
    for (std::size_t i = 0; i < d_in; ++i) {
      const double li = w * left[i];
      if (li == 0.0) continue;
      auto dst = grad.row(i);
      for (std::size_t j = 0; j < d_out; ++j) dst[j] += li * right[j];
    }
  }
  return grad;
}

AdamState::AdamState(const GcnModel& model, AdamConfig config) : config_(config) {
  for (const auto& layer : model.layers) {
    first_moment_.emplace_back(layer.weight.rows(), layer.weight.cols());
    second_moment_.emplace_back(layer.weight.rows(), layer.weight.cols());
  }
}

void AdamState::step(GcnModel& model, const GradientSet& grads) {
  if (grads.weights.size() != model.depth() || first_moment_.size() != model.depth()) {
    throw InputError("adam: gradient/model layer count mismatch");
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bias1 = 1.0 - std::pow(config_.beta1, t);
  const double bias2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t l = 0; l < model.depth(); ++l) {
    auto w = model.layers[l].weight.values();
    auto g = grads.weights[l].values();
    auto m = first_moment_[l].values();
    auto v = second_moment_[l].values();
    if (g.size() != w.size()) throw InputError("adam: gradient shape mismatch");
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double grad = g[k] + config_.weight_decay * w[k];
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * grad;
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * grad * grad;
      const double m_hat = m[k] / bias1;
      const double v_hat = v[k] / bias2;
      w[k] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace rawlsgcn
