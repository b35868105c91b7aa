#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rawlsgcn/data.hpp"
#include "rawlsgcn/fair.hpp"

namespace rawlsgcn {

struct DatasetSpec {
  // Exactly one of path / synthetic is set.
  std::optional<std::filesystem::path> path;
  std::optional<SyntheticParams> synthetic;
  std::uint64_t split_seed = 0;
  // Regenerate the synthetic graph and the split with each run seed.
  bool vary_with_seed = false;
  bool row_normalize_features = false;
  // Optional split.json cache for path datasets.
  std::optional<std::filesystem::path> split_path;
};

struct ExperimentSpec {
  DatasetSpec dataset;
  std::vector<TrainConfig> modes;  // seed field is ignored; see `seeds`
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::filesystem::path output_path = "results.json";

  void validate() const;
};

ExperimentSpec parse_experiment_spec(const nlohmann::json& doc);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ExperimentSpec& spec);
nlohmann::ordered_json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc);

// Parses "n=2000,m=2,classes=4,dim=16,homophily=0.8,noise=1.0,triad=0,seed=0";
// unspecified keys keep their defaults.
SyntheticParams parse_synthetic(const std::string& text);

// The dataset a run with `seed` trains on, split included.
GraphDataset materialize_dataset(const DatasetSpec& spec, std::uint64_t seed);

struct ExperimentCell {
  TrainConfig config;  // seed set to the run seed
  std::optional<EvalReport> report;
  std::string error;   // non-empty iff report is empty

  bool ok() const noexcept { return report.has_value(); }
};

struct AggregateRow {
  TrainMode mode = TrainMode::vanilla;
  Normalization normalization = Normalization::symmetric;
  std::size_t runs = 0;  // successful cells
  double acc_mean = 0.0;
  double acc_std = 0.0;   // population standard deviation
  double bias_mean = 0.0;
  double bias_std = 0.0;

  friend bool operator==(const AggregateRow&, const AggregateRow&) = default;
};

struct ExperimentResult {
  std::vector<ExperimentCell> cells;  // ordered by mode index, then seed
  std::vector<AggregateRow> aggregates;
  std::size_t dropped_self_loops = 0;  // summed over the materialized datasets

  bool all_ok() const noexcept;
};

// Mean and population std of accuracy and bias per (mode, normalization),
// in first-appearance order of the cells.
std::vector<AggregateRow> aggregate(const std::vector<ExperimentCell>& cells);

// Trains every (mode, seed) cell, using up to `workers` threads. A failing
// cell records its error and the run continues.
ExperimentResult run_experiment(const ExperimentSpec& spec, std::size_t workers = 1);

// RAWLSGNN_THREADS if set and positive, otherwise the hardware concurrency.
std::size_t worker_count_from_env();

// Results document; "generated_at" sits alone on the second line.
nlohmann::ordered_json results_to_json(const ExperimentSpec& spec, const ExperimentResult& result,
                                       const std::string& timestamp);
std::vector<ExperimentCell> cells_from_json(const nlohmann::json& doc);
std::vector<AggregateRow> aggregates_from_json(const nlohmann::json& doc);

// Columns: mode,normalization,acc_mean,acc_std,bias_mean,bias_std.
void write_summary_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

// Writes output_path (JSON) and output_path with a .csv extension.
void write_results(const ExperimentSpec& spec, const ExperimentResult& result,
                   const std::string& timestamp);

std::string utc_timestamp();

// 6 significant digits, scientific notation, '.' decimal separator.
std::string format_scientific(double value);

// The rawls_graph / rawls_grad x row / column / symmetric / doubly_stochastic grid.
std::vector<TrainConfig> ablation_modes(const TrainConfig& base);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Least squares y = slope * x + intercept; empty with fewer than two distinct x.
std::optional<LinearFit> least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct DegreePlotData {
  std::vector<DegreeGroup> rows;  // groups with size > min_group_size
  std::optional<LinearFit> loss_fit;
  std::optional<LinearFit> accuracy_fit;
};

DegreePlotData emit_degree_plot_data(const EvalReport& report, std::size_t min_group_size = 5);
void write_degree_plot_csv(std::ostream& out, const DegreePlotData& data);

struct SinkhornBenchmark {
  std::size_t n = 0;
  std::size_t nnz = 0;
  std::size_t iterations = 0;
  double seconds = 0.0;  // best of `repeats`
  double seconds_per_iteration = 0.0;
  double max_deviation = 0.0;
};

SinkhornBenchmark benchmark_sinkhorn(const SparseMatrix& m, const BalanceConfig& cfg,
                                     std::size_t repeats = 3);
nlohmann::ordered_json to_json(const SinkhornBenchmark& bench);

}  // namespace rawlsgcn
