#include "rawlsgcn/fair.hpp"

#include <array>
#include <map>
#include <string>

#include "rawlsgcn/errors.hpp"

namespace rawlsgcn {

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::vanilla: return "vanilla";
    case TrainMode::rawls_graph: return "rawls_graph";
    case TrainMode::rawls_grad: return "rawls_grad";
  }
  return "unknown";
}

TrainMode parse_train_mode(std::string_view name) {
  if (name == "vanilla" || name == "gcn") return TrainMode::vanilla;
  if (name == "rawls_graph" || name == "graph") return TrainMode::rawls_graph;
  if (name == "rawls_grad" || name == "grad") return TrainMode::rawls_grad;
  throw InputError("unknown training mode '" + std::string(name) + "'");
}

Normalization TrainConfig::effective_normalization() const {
  if (normalization) return *normalization;
  return mode == TrainMode::vanilla ? Normalization::symmetric : Normalization::doubly_stochastic;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("train: epochs must be >= 1");
  if (!(lr > 0.0)) throw InputError("train: lr must be positive");
  if (!(weight_decay >= 0.0)) throw InputError("train: weight_decay must be >= 0");
  if (hidden_dim < 1) throw InputError("train: hidden_dim must be >= 1");
  balance.validate();
}

TrainingMatrices training_matrices(const SparseMatrix& adjacency, const TrainConfig& config) {
  const Normalization variant = config.effective_normalization();
  switch (config.mode) {
    case TrainMode::vanilla:
    case TrainMode::rawls_graph: {
      SparseMatrix m = propagation_matrix(adjacency, variant, config.balance);
      return {m, m};
    }
    case TrainMode::rawls_grad:
      return {renormalized_laplacian(adjacency),
              propagation_matrix(adjacency, variant, config.balance)};
  }
  throw InputError("train: unknown mode");
}

TrainResult train(const GraphDataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.split.train.empty()) throw InputError("train: empty training mask");
  if (dataset.split.test.empty()) throw InputError("train: empty test mask");
  if (dataset.num_classes < 1) throw InputError("train: dataset has no classes");

  const TrainingMatrices mats = training_matrices(dataset.adjacency, config);
  const std::array<std::size_t, 3> dims{dataset.features.cols(), config.hidden_dim,
                                        dataset.num_classes};
  TrainResult result;
  result.model = make_gcn(dims, config.seed);
  AdamState adam(result.model, AdamConfig{.lr = config.lr, .weight_decay = config.weight_decay});

  std::vector<double> curve;
  curve.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const ForwardTape tape = forward(result.model, mats.forward, dataset.features);
    const LossResult loss = loss_and_grad(tape.logits(), dataset.labels, dataset.split.train);
    curve.push_back(loss.loss);
    const BackwardResult grads =
        backward(result.model, tape, mats.forward, mats.gradient, loss.d_logits);
    adam.step(result.model, grads.grads);
  }
  result.report = evaluate(dataset, result.model, mats.forward);
  result.report.loss_curve = std::move(curve);
  return result;
}

EvalReport evaluate(const GraphDataset& dataset, const GcnModel& model,
                    const SparseMatrix& forward_matrix) {
  const ForwardTape tape = forward(model, forward_matrix, dataset.features);
  const DenseMatrix& logits = tape.logits();
  const auto& mask = dataset.split.test;
  const auto losses = per_node_cross_entropy(logits, dataset.labels);
  const auto deg = integer_degrees(dataset.adjacency);

  EvalReport report;
  report.overall_accuracy = accuracy(logits, dataset.labels, mask);
  const BiasResult bias = bias_metric(losses, deg, mask);
  const auto acc = per_degree_accuracy(logits, dataset.labels, deg, mask);
  report.bias = bias.bias;
  for (std::size_t g = 0; g < bias.groups.size(); ++g) {
    report.per_degree.push_back({bias.groups[g].degree, bias.groups[g].size,
                                 bias.groups[g].avg_loss, acc[g].accuracy});
  }
  return report;
}

BiasResult bias_metric(std::span<const double> losses, std::span<const std::size_t> degrees,
                       std::span<const std::size_t> mask) {
  if (mask.empty()) throw InputError("bias_metric: empty evaluation mask");
  if (losses.size() != degrees.size()) throw InputError("bias_metric: losses/degrees size mismatch");
  std::map<std::size_t, std::pair<double, std::size_t>> sums;
  for (std::size_t node : mask) {
    if (node >= losses.size()) throw InputError("bias_metric: mask index out of range");
    auto& [total, count] = sums[degrees[node]];
    total += losses[node];
    ++count;
  }
  BiasResult out;
  double mean = 0.0;
  for (const auto& [degree, acc] : sums) {
    const double avg = acc.first / static_cast<double>(acc.second);
    out.groups.push_back({degree, acc.second, avg});
    mean += avg;
  }
  mean /= static_cast<double>(out.groups.size());
  double var = 0.0;
  for (const auto& g : out.groups) var += (g.avg_loss - mean) * (g.avg_loss - mean);
  out.bias = var / static_cast<double>(out.groups.size());
  return out;
}

std::size_t predicted_class(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return best;
}

double accuracy(const DenseMatrix& logits, std::span<const int> labels,
                std::span<const std::size_t> mask) {
  if (mask.empty()) throw InputError("accuracy: empty mask");
  if (labels.size() != logits.rows()) throw InputError("accuracy: labels/logits size mismatch");
  std::size_t correct = 0;
  for (std::size_t node : mask) {
    if (node >= logits.rows()) throw InputError("accuracy: mask index out of range");
    if (static_cast<int>(predicted_class(logits.row(node))) == labels[node]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

std::vector<AccuracyGroup> per_degree_accuracy(const DenseMatrix& logits,
                                               std::span<const int> labels,
                                               std::span<const std::size_t> degrees,
                                               std::span<const std::size_t> mask) {
  if (mask.empty()) throw InputError("per_degree_accuracy: empty mask");
  if (labels.size() != logits.rows() || degrees.size() != logits.rows()) {
    throw InputError("per_degree_accuracy: size mismatch");
  }
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> counts;  // correct, total
  for (std::size_t node : mask) {
    if (node >= logits.rows()) throw InputError("per_degree_accuracy: mask index out of range");
    auto& [correct, total] = counts[degrees[node]];
    if (static_cast<int>(predicted_class(logits.row(node))) == labels[node]) ++correct;
    ++total;
  }
  std::vector<AccuracyGroup> out;
  for (const auto& [degree, c] : counts) {
    out.push_back({degree, c.second, static_cast<double>(c.first) / static_cast<double>(c.second)});
  }
  return out;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["overall_accuracy"] = report.overall_accuracy;
  doc["bias"] = report.bias;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : report.per_degree) {
    nlohmann::ordered_json item;
    item["degree"] = g.degree;
    item["size"] = g.size;
    item["avg_loss"] = g.avg_loss;
    item["avg_accuracy"] = g.avg_accuracy;
    groups.push_back(std::move(item));
  }
  doc["per_degree"] = std::move(groups);
  doc["loss_curve"] = report.loss_curve;
  return doc;
}

EvalReport report_from_json(const nlohmann::json& doc) {
  EvalReport report;
  try {
    report.overall_accuracy = doc.at("overall_accuracy").get<double>();
    report.bias = doc.at("bias").get<double>();
    for (const auto& item : doc.at("per_degree")) {
      report.per_degree.push_back({item.at("degree").get<std::size_t>(),
                                   item.at("size").get<std::size_t>(),
                                   item.at("avg_loss").get<double>(),
                                   item.at("avg_accuracy").get<double>()});
    }
    if (doc.contains("loss_curve")) report.loss_curve = doc.at("loss_curve").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("report json: ") + e.what());
  }
  return report;
}

}  // namespace rawlsgcn
