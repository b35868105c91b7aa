#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rawlsgcn/dense.hpp"
#include "rawlsgcn/sparse.hpp"

namespace rawlsgcn {

enum class Activation { relu, none };

struct GcnLayer {
  DenseMatrix weight;  // d_in x d_out
  Activation activation = Activation::relu;
};

// Stack of bias-free graph convolutions H' = act(A H W). ReLU between
// layers, identity on the last so the output feeds softmax cross entropy.
struct GcnModel {
  std::vector<GcnLayer> layers;

  std::size_t depth() const noexcept { return layers.size(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  // Throws InputError if dimensions do not chain or the last layer is not linear.
  void validate() const;
};

// Glorot-initialized model with layer sizes dims[0] -> dims[1] -> ... -> dims.back().
GcnModel make_gcn(std::span<const std::size_t> dims, std::uint64_t seed);

// Uniform on +-sqrt(6 / (rows + cols)), deterministic per seed.
DenseMatrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

struct LayerRecord {
  DenseMatrix input;           // H^(l-1)
  DenseMatrix pre_activation;  // E^(l) = A H^(l-1) W^(l)
  DenseMatrix output;          // H^(l) = act(E^(l))
};

struct ForwardTape {
  std::vector<LayerRecord> layers;
  const DenseMatrix& logits() const { return layers.back().output; }
};

ForwardTape forward(const GcnModel& model, const SparseMatrix& propagation, const DenseMatrix& x);

struct LossResult {
  double loss = 0.0;
  DenseMatrix d_logits;
};

// Mean softmax cross entropy over `mask`; rows outside the mask get zero gradient.
LossResult loss_and_grad(const DenseMatrix& logits, std::span<const int> labels,
                         std::span<const std::size_t> mask);

// Per-row cross entropy -log softmax(logits)[label], for every row.
std::vector<double> per_node_cross_entropy(const DenseMatrix& logits, std::span<const int> labels);

struct GradientSet {
  std::vector<DenseMatrix> weights;  // dJ/dW^(l), one per layer
};

struct BackwardResult {
  GradientSet grads;
  std::vector<DenseMatrix> pre_activation;  // dJ/dE^(l), one per layer
};

// Weight gradients dW^(l) = H^(l-1)^T * gradient_matrix^T * dJ/dE^(l).
// The signal passed to earlier layers, dJ/dH^(l-1) = forward_matrix^T dJ/dE^(l) W^(l)^T,
// always uses the forward matrix. Passing gradient_matrix == forward_matrix
// yields the exact gradient; a doubly stochastic gradient_matrix yields the
// degree-fair gradient. ReLU'(0) is taken as 0.
BackwardResult backward(const GcnModel& model, const ForwardTape& tape,
                        const SparseMatrix& forward_matrix, const SparseMatrix& gradient_matrix,
                        const DenseMatrix& d_logits);

enum class InfluenceMode { row, column };
enum class InfluenceWeights { degree, unit };

// Node-by-node assembly of a layer's weight gradient as a weighted sum of
// per-node influence matrices over a symmetric matrix `a`:
//   row:    sum_j w(j) * H[j,:]^T * E_{i ~ p(j)}[dE[i,:]]
//   column: sum_i w(i) * (E_{j ~ p(i)}[H[j,:]])^T * dE[i,:]
// with p(i)(j) proportional to a[i,j] and w the degree in `a` (or 1 with
// InfluenceWeights::unit). Throws InputError if `a` is not symmetric within
// symmetry_tolerance (relative to its largest entry).
DenseMatrix influence_decomposition(const DenseMatrix& layer_input, const SparseMatrix& a,
                                    const DenseMatrix& d_pre_activation, InfluenceMode mode,
                                    InfluenceWeights weights = InfluenceWeights::degree,
                                    double symmetry_tolerance = 1e-6);

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 5e-4;  // L2 term added to the gradient
};

class AdamState {
 public:
  AdamState(const GcnModel& model, AdamConfig config);

  // One bias-corrected Adam update of every layer weight, using grad + weight_decay * W.
  void step(GcnModel& model, const GradientSet& grads);

  std::size_t steps() const noexcept { return step_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  std::vector<DenseMatrix> first_moment_;
  std::vector<DenseMatrix> second_moment_;
  std::size_t step_ = 0;
};

}  // namespace rawlsgcn
