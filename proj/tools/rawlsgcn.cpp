// Command line front end: train, experiment, ablation, plot-data, bench-sinkhorn.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rawlsgcn/errors.hpp"
#include "rawlsgcn/experiment.hpp"

using namespace rawlsgcn;

namespace {

constexpr int kExitFailedCells = 1;
constexpr int kExitInput = 2;

// Flags shared by train / experiment / ablation; unset ones leave the config alone.
struct Overrides {
  std::string config;
  std::vector<std::string> modes;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::string> normalization;
  std::optional<std::size_t> hidden;
  std::optional<std::string> dataset;
  std::optional<std::string> synthetic;
  std::optional<std::string> split;
  std::optional<std::string> output;
  bool row_normalize = false;
  bool vary_with_seed = false;
  std::optional<std::size_t> threads;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment spec (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--mode", o.modes, "vanilla | rawls_graph | rawls_grad (repeatable)");
  cmd->add_option("--seed", o.seeds, "run seed (repeatable)");
  cmd->add_option("--epochs", o.epochs);
  cmd->add_option("--lr", o.lr);
  cmd->add_option("--normalization", o.normalization, "row | column | symmetric | doubly_stochastic");
  cmd->add_option("--hidden", o.hidden, "hidden layer width");
  cmd->add_option("--dataset", o.dataset, "directory with edges.tsv, features.csv, labels.csv");
  cmd->add_option("--synthetic", o.synthetic, "n=2000,m=2,classes=4,dim=16,homophily=0.8,noise=1,seed=0");
  cmd->add_option("--split", o.split, "split.json to reuse or create");
  cmd->add_option("--output", o.output);
  cmd->add_flag("--row-normalize-features", o.row_normalize);
  cmd->add_flag("--vary-with-seed", o.vary_with_seed, "regenerate graph and split per seed");
  cmd->add_option("--threads", o.threads, "worker threads (default RAWLSGNN_THREADS or all cores)");
}

ExperimentSpec build_spec(const Overrides& o) {
  ExperimentSpec spec;
  if (!o.config.empty()) {
    spec = load_experiment_spec(o.config);
  } else {
    spec.modes = {TrainConfig{}};
  }
  if (o.dataset || o.synthetic) {
    if (o.dataset && o.synthetic) throw InputError("give either --dataset or --synthetic, not both");
    spec.dataset.path.reset();
    spec.dataset.synthetic.reset();
    if (o.dataset) spec.dataset.path = *o.dataset;
    if (o.synthetic) spec.dataset.synthetic = parse_synthetic(*o.synthetic);
  }
  if (o.split) spec.dataset.split_path = *o.split;
  if (o.row_normalize) spec.dataset.row_normalize_features = true;
  if (o.vary_with_seed) spec.dataset.vary_with_seed = true;
  if (!o.modes.empty()) {
    const TrainConfig base = spec.modes.front();
    spec.modes.clear();
    for (const auto& name : o.modes) {
      TrainConfig c = base;
      c.mode = parse_train_mode(name);
      spec.modes.push_back(c);
    }
  }
  for (auto& m : spec.modes) {
    if (o.epochs) m.epochs = *o.epochs;
    if (o.lr) m.lr = *o.lr;
    if (o.hidden) m.hidden_dim = *o.hidden;
    if (o.normalization) m.normalization = parse_normalization(*o.normalization);
  }
  if (!o.seeds.empty()) spec.seeds = o.seeds;
  if (o.output) spec.output_path = *o.output;
  return spec;
}

int finish_experiment(const ExperimentSpec& spec, const Overrides& o) {
  spec.validate();
  const std::size_t workers = o.threads ? *o.threads : worker_count_from_env();
  const ExperimentResult result = run_experiment(spec, workers);
  if (result.dropped_self_loops > 0) {
    std::cerr << "warning: dropped " << result.dropped_self_loops << " self-loop edge(s)\n";
  }
  write_results(spec, result, utc_timestamp());
  write_summary_csv(std::cout, result.aggregates);
  for (const auto& c : result.cells) {
    if (!c.ok()) {
      std::cerr << "error: " << to_string(c.config.mode) << " seed " << c.config.seed << ": "
                << c.error << '\n';
    }
  }
  return result.all_ok() ? 0 : kExitFailedCells;
}

int run_train(const Overrides& o) {
  ExperimentSpec spec = build_spec(o);
  if (spec.modes.size() != 1) throw InputError("train runs exactly one mode; use 'experiment' for more");
  if (spec.seeds.size() != 1) {
    if (!o.seeds.empty()) throw InputError("train runs exactly one seed; use 'experiment' for more");
    spec.seeds = {spec.seeds.front()};
  }
  spec.validate();
  TrainConfig config = spec.modes.front();
  config.seed = spec.seeds.front();
  const GraphDataset dataset = materialize_dataset(spec.dataset, config.seed);
  if (dataset.dropped_self_loops > 0) {
    std::cerr << "warning: dropped " << dataset.dropped_self_loops << " self-loop edge(s)\n";
  }
  nlohmann::ordered_json doc;
  doc["config"] = to_json(config);
  try {
    doc["report"] = to_json(train(dataset, config).report);
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailedCells;
  }
  if (o.output) {
    std::ofstream out(*o.output);
    if (!out) throw InputError("cannot write '" + *o.output + "'");
    out << doc.dump(2) << '\n';
  } else {
    std::cout << doc.dump(2) << '\n';
  }
  return 0;
}

struct PlotArgs {
  std::string input;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::size_t min_group_size = 5;
  std::optional<std::string> output;
};

// Accepts a train report document or a full results document.
EvalReport select_report(const nlohmann::json& doc, const PlotArgs& a) {
  if (doc.contains("report")) return report_from_json(doc.at("report"));
  if (doc.contains("per_degree")) return report_from_json(doc);
  for (const auto& cell : cells_from_json(doc)) {
    if (!cell.ok()) continue;
    if (a.mode && cell.config.mode != parse_train_mode(*a.mode)) continue;
    if (a.seed && cell.config.seed != *a.seed) continue;
    return *cell.report;
  }
  throw InputError("no successful cell matches the requested mode/seed");
}

int run_plot(const PlotArgs& a) {
  std::ifstream in(a.input);
  if (!in) throw InputError("cannot open '" + a.input + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(a.input + ": " + e.what());
  }
  const DegreePlotData data = emit_degree_plot_data(select_report(doc, a), a.min_group_size);
  if (a.output) {
    std::ofstream out(*a.output);
    if (!out) throw InputError("cannot write '" + *a.output + "'");
    write_degree_plot_csv(out, data);
  } else {
    write_degree_plot_csv(std::cout, data);
  }
  return 0;
}

struct BenchArgs {
  std::optional<std::string> dataset;
  std::optional<std::string> synthetic;
  double tol = 1e-8;
  std::size_t max_iter = 10000;
  std::size_t repeats = 3;
};

int run_bench(const BenchArgs& a) {
  if (a.dataset.has_value() == a.synthetic.has_value()) {
    throw InputError("bench-sinkhorn needs exactly one of --dataset or --synthetic");
  }
  const SparseMatrix adjacency =
      a.dataset ? load_dataset(*a.dataset).adjacency : synthetic_powerlaw(parse_synthetic(*a.synthetic)).adjacency;
  BalanceConfig cfg;
  cfg.tolerance = a.tol;
  cfg.max_iterations = a.max_iter;
  cfg.validate();
  const SinkhornBenchmark bench = benchmark_sinkhorn(renormalized_laplacian(adjacency), cfg, a.repeats);
  std::cout << to_json(bench).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Degree-fair graph convolutional network training"};
  app.require_subcommand(1);

  Overrides train_o;
  auto* train_cmd = app.add_subcommand("train", "train one (mode, seed) and print its report");
  add_override_flags(train_cmd, train_o);

  Overrides exp_o;
  auto* exp_cmd = app.add_subcommand("experiment", "run every (mode, seed) cell of a spec");
  add_override_flags(exp_cmd, exp_o);

  Overrides abl_o;
  auto* abl_cmd = app.add_subcommand("ablation", "rawls modes crossed with the four normalizations");
  add_override_flags(abl_cmd, abl_o);

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot-data", "per-degree loss/accuracy table with regression lines");
  plot_cmd->add_option("input", plot.input, "train report or results JSON")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--mode", plot.mode);
  plot_cmd->add_option("--seed", plot.seed);
  plot_cmd->add_option("--min-group-size", plot.min_group_size);
  plot_cmd->add_option("--output", plot.output);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench-sinkhorn", "time balancing of a graph's renormalized Laplacian");
  bench_cmd->add_option("--dataset", bench.dataset);
  bench_cmd->add_option("--synthetic", bench.synthetic);
  bench_cmd->add_option("--tol", bench.tol);
  bench_cmd->add_option("--max-iter", bench.max_iter);
  bench_cmd->add_option("--repeats", bench.repeats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*train_cmd) return run_train(train_o);
    if (*exp_cmd) return finish_experiment(build_spec(exp_o), exp_o);
    if (*abl_cmd) {
      ExperimentSpec spec = build_spec(abl_o);
      spec.modes = ablation_modes(spec.modes.front());
      return finish_experiment(spec, abl_o);
    }
    if (*plot_cmd) return run_plot(plot);
    if (*bench_cmd) return run_bench(bench);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailedCells;
  }
  return 0;
}
