#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rawlsgcn/balance.hpp"
#include "rawlsgcn/data.hpp"
#include "rawlsgcn/graph.hpp"
#include "rawlsgcn/nn.hpp"

namespace rawlsgcn {

// vanilla:     propagate and differentiate with the same normalized matrix.
// rawls_graph: train on the doubly stochastic renormalized Laplacian.
// rawls_grad:  propagate with the renormalized Laplacian, assemble weight
//              gradients with its doubly stochastic form.
enum class TrainMode { vanilla, rawls_graph, rawls_grad };

std::string_view to_string(TrainMode mode);
TrainMode parse_train_mode(std::string_view name);

struct TrainConfig {
  TrainMode mode = TrainMode::vanilla;
  // Unset: symmetric for vanilla, doubly_stochastic for the rawls modes.
  std::optional<Normalization> normalization;
  std::size_t epochs = 100;
  double lr = 0.01;
  double weight_decay = 5e-4;
  std::size_t hidden_dim = 64;
  std::uint64_t seed = 0;
  BalanceConfig balance;

  Normalization effective_normalization() const;
  void validate() const;
};

struct DegreeGroup {
  std::size_t degree = 0;
  std::size_t size = 0;
  double avg_loss = 0.0;
  double avg_accuracy = 0.0;

  friend bool operator==(const DegreeGroup&, const DegreeGroup&) = default;
};

struct EvalReport {
  double overall_accuracy = 0.0;
  double bias = 0.0;
  std::vector<DegreeGroup> per_degree;  // ascending degree
  std::vector<double> loss_curve;       // training loss before each update

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct TrainResult {
  GcnModel model;
  EvalReport report;
};

// The forward and gradient matrices a configuration trains with.
struct TrainingMatrices {
  SparseMatrix forward;
  SparseMatrix gradient;
};
TrainingMatrices training_matrices(const SparseMatrix& adjacency, const TrainConfig& config);

// Runs exactly config.epochs Adam steps on the training mask and evaluates
// on the test mask. Degree groups use integer degrees of the adjacency.
TrainResult train(const GraphDataset& dataset, const TrainConfig& config);

EvalReport evaluate(const GraphDataset& dataset, const GcnModel& model,
                    const SparseMatrix& forward_matrix);

struct LossGroup {
  std::size_t degree = 0;
  std::size_t size = 0;
  double avg_loss = 0.0;
};

struct BiasResult {
  double bias = 0.0;  // population variance of the group averages
  std::vector<LossGroup> groups;
};

// Groups masked nodes by degree, averages their losses per group and returns
// the population variance of those averages.
BiasResult bias_metric(std::span<const double> losses, std::span<const std::size_t> degrees,
                       std::span<const std::size_t> mask);

// Index of the largest logit; ties go to the lowest class index.
std::size_t predicted_class(std::span<const double> logits);

double accuracy(const DenseMatrix& logits, std::span<const int> labels,
                std::span<const std::size_t> mask);

struct AccuracyGroup {
  std::size_t degree = 0;
  std::size_t size = 0;
  double accuracy = 0.0;
};

std::vector<AccuracyGroup> per_degree_accuracy(const DenseMatrix& logits,
                                               std::span<const int> labels,
                                               std::span<const std::size_t> degrees,
                                               std::span<const std::size_t> mask);

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

}  // namespace rawlsgcn
