#include "rawlsgcn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "rawlsgcn/errors.hpp"

namespace rawlsgcn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T, typename F>
T guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InputError(std::string(what) + ": " + e.what());
  }
}

ordered_json synthetic_to_json(const SyntheticParams& p) {
  ordered_json doc;
  doc["n"] = p.n;
  doc["m_attach"] = p.m_attach;
  doc["classes"] = p.classes;
  doc["feature_dim"] = p.feature_dim;
  doc["homophily"] = p.homophily;
  doc["feature_noise"] = p.feature_noise;
  doc["triad_closure"] = p.triad_closure;
  doc["seed"] = p.seed;
  return doc;
}

SyntheticParams synthetic_from_json(const json& doc) {
  SyntheticParams p;
  p.n = doc.value("n", p.n);
  p.m_attach = doc.value("m_attach", p.m_attach);
  p.classes = doc.value("classes", p.classes);
  p.feature_dim = doc.value("feature_dim", p.feature_dim);
  p.homophily = doc.value("homophily", p.homophily);
  p.feature_noise = doc.value("feature_noise", p.feature_noise);
  p.triad_closure = doc.value("triad_closure", p.triad_closure);
  p.seed = doc.value("seed", p.seed);
  return p;
}

std::pair<double, double> mean_and_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::sqrt(var)};
}

// JSON has no NaN; runs == 0 rows carry nulls instead.
json nullable(std::size_t runs, double v) { return runs == 0 ? json(nullptr) : json(v); }

}  // namespace

void ExperimentSpec::validate() const {
  if (dataset.path.has_value() == dataset.synthetic.has_value()) {
    throw InputError("experiment: dataset needs exactly one of 'path' or 'synthetic'");
  }
  if (modes.empty()) throw InputError("experiment: at least one mode is required");
  if (seeds.empty()) throw InputError("experiment: at least one seed is required");
  for (const auto& m : modes) m.validate();
}

ordered_json to_json(const TrainConfig& config) {
  ordered_json doc;
  doc["mode"] = std::string(to_string(config.mode));
  doc["normalization"] = std::string(to_string(config.effective_normalization()));
  doc["epochs"] = config.epochs;
  doc["lr"] = config.lr;
  doc["weight_decay"] = config.weight_decay;
  doc["hidden_dim"] = config.hidden_dim;
  doc["balance"] = {{"tolerance", config.balance.tolerance},
                    {"max_iterations", config.balance.max_iterations}};
  return doc;
}

TrainConfig train_config_from_json(const json& doc) {
  return guarded<TrainConfig>("mode config", [&] {
    TrainConfig c;
    c.mode = parse_train_mode(doc.at("mode").get<std::string>());
    if (doc.contains("normalization")) {
      c.normalization = parse_normalization(doc.at("normalization").get<std::string>());
    }
    c.epochs = doc.value("epochs", c.epochs);
    c.lr = doc.value("lr", c.lr);
    c.weight_decay = doc.value("weight_decay", c.weight_decay);
    c.hidden_dim = doc.value("hidden_dim", c.hidden_dim);
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("balance")) {
      const auto& b = doc.at("balance");
      c.balance.tolerance = b.value("tolerance", c.balance.tolerance);
      c.balance.max_iterations = b.value("max_iterations", c.balance.max_iterations);
    }
    return c;
  });
}

ExperimentSpec parse_experiment_spec(const json& doc) {
  return guarded<ExperimentSpec>("experiment spec", [&] {
    ExperimentSpec spec;
    const auto& ds = doc.at("dataset");
    if (ds.contains("path")) spec.dataset.path = ds.at("path").get<std::string>();
    if (ds.contains("synthetic")) spec.dataset.synthetic = synthetic_from_json(ds.at("synthetic"));
    spec.dataset.split_seed = ds.value("split_seed", spec.dataset.split_seed);
    spec.dataset.vary_with_seed = ds.value("vary_with_seed", spec.dataset.vary_with_seed);
    spec.dataset.row_normalize_features =
        ds.value("row_normalize_features", spec.dataset.row_normalize_features);
    if (ds.contains("split")) spec.dataset.split_path = ds.at("split").get<std::string>();
    spec.modes.clear();
    for (const auto& m : doc.at("modes")) spec.modes.push_back(train_config_from_json(m));
    if (doc.contains("seeds")) spec.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    if (doc.contains("output")) spec.output_path = doc.at("output").get<std::string>();
    return spec;
  });
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open experiment spec '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("experiment spec '" + path.string() + "': " + e.what());
  }
  return parse_experiment_spec(doc);
}

ordered_json to_json(const ExperimentSpec& spec) {
  ordered_json ds;
  if (spec.dataset.path) ds["path"] = spec.dataset.path->string();
  if (spec.dataset.synthetic) ds["synthetic"] = synthetic_to_json(*spec.dataset.synthetic);
  ds["split_seed"] = spec.dataset.split_seed;
  ds["vary_with_seed"] = spec.dataset.vary_with_seed;
  ds["row_normalize_features"] = spec.dataset.row_normalize_features;
  if (spec.dataset.split_path) ds["split"] = spec.dataset.split_path->string();
  ordered_json doc;
  doc["dataset"] = std::move(ds);
  auto modes = ordered_json::array();
  for (const auto& m : spec.modes) modes.push_back(to_json(m));
  doc["modes"] = std::move(modes);
  doc["seeds"] = spec.seeds;
  doc["output"] = spec.output_path.string();
  return doc;
}

SyntheticParams parse_synthetic(const std::string& text) {
  SyntheticParams p;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InputError("synthetic: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      if (key == "n") p.n = std::stoull(value);
      else if (key == "m" || key == "m_attach") p.m_attach = std::stoull(value);
      else if (key == "classes" || key == "C") p.classes = std::stoull(value);
      else if (key == "dim" || key == "d0" || key == "feature_dim") p.feature_dim = std::stoull(value);
      else if (key == "homophily") p.homophily = std::stod(value);
      else if (key == "noise" || key == "feature_noise") p.feature_noise = std::stod(value);
      else if (key == "triad" || key == "triad_closure") p.triad_closure = std::stod(value);
      else if (key == "seed") p.seed = std::stoull(value);
      else throw InputError("synthetic: unknown key '" + key + "'");
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const InputError*>(&e)) throw;
      throw InputError("synthetic: bad value for '" + key + "': " + value);
    }
  }
  return p;
}

GraphDataset materialize_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  GraphDataset ds;
  std::uint64_t split_seed = spec.split_seed;
  if (spec.synthetic) {
    SyntheticParams p = *spec.synthetic;
    if (spec.vary_with_seed) {
      p.seed = seed;
      split_seed = seed;
    }
    ds = synthetic_powerlaw(p);
  } else if (spec.path) {
    ds = load_dataset(*spec.path);
    if (spec.vary_with_seed) split_seed = seed;
  } else {
    throw InputError("dataset: neither path nor synthetic parameters given");
  }
  if (spec.row_normalize_features) row_normalize_features(ds.features);
  if (spec.split_path && !spec.vary_with_seed && std::filesystem::exists(*spec.split_path)) {
    ds.split = load_split(*spec.split_path, ds.num_nodes());
  } else {
    ds.split = make_split(ds, split_seed);
    if (spec.split_path && !spec.vary_with_seed) save_split(ds.split, *spec.split_path);
  }
  return ds;
}

bool ExperimentResult::all_ok() const noexcept {
  return std::all_of(cells.begin(), cells.end(), [](const auto& c) { return c.ok(); });
}

std::vector<AggregateRow> aggregate(const std::vector<ExperimentCell>& cells) {
  std::vector<std::pair<TrainMode, Normalization>> keys;
  for (const auto& c : cells) {
    const auto key = std::make_pair(c.config.mode, c.config.effective_normalization());
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::vector<AggregateRow> rows;
  for (const auto& [mode, norm] : keys) {
    std::vector<double> acc;
    std::vector<double> bias;
    for (const auto& c : cells) {
      if (c.config.mode != mode || c.config.effective_normalization() != norm || !c.ok()) continue;
      acc.push_back(c.report->overall_accuracy);
      bias.push_back(c.report->bias);
    }
    AggregateRow row{mode, norm, acc.size()};
    if (!acc.empty()) {
      std::tie(row.acc_mean, row.acc_std) = mean_and_std(acc);
      std::tie(row.bias_mean, row.bias_std) = mean_and_std(bias);
    }
    rows.push_back(row);
  }
  return rows;
}

std::size_t worker_count_from_env() {
  if (const char* env = std::getenv("RAWLSGNN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentResult run_experiment(const ExperimentSpec& spec, std::size_t workers) {
  spec.validate();
  ExperimentResult result;
  for (const auto& mode : spec.modes) {
    for (std::uint64_t seed : spec.seeds) {
      ExperimentCell cell;
      cell.config = mode;
      cell.config.seed = seed;
      result.cells.push_back(std::move(cell));
    }
  }

  // One dataset per distinct seed when the data varies with it, else one shared.
  std::map<std::uint64_t, std::optional<GraphDataset>> datasets;
  std::map<std::uint64_t, std::string> dataset_errors;
  for (std::uint64_t seed : spec.seeds) {
    const std::uint64_t key = spec.dataset.vary_with_seed ? seed : 0;
    if (datasets.contains(key) || dataset_errors.contains(key)) continue;
    try {
      datasets[key] = materialize_dataset(spec.dataset, seed);
      result.dropped_self_loops += datasets[key]->dropped_self_loops;
    } catch (const std::exception& e) {
      dataset_errors[key] = e.what();
    }
  }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) {
      auto& cell = result.cells[i];
      const std::uint64_t key = spec.dataset.vary_with_seed ? cell.config.seed : 0;
      if (auto it = dataset_errors.find(key); it != dataset_errors.end()) {
        cell.error = it->second;
        continue;
      }
      try {
        cell.report = train(*datasets.at(key), cell.config).report;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, result.cells.size());
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  result.aggregates = aggregate(result.cells);
  return result;
}

ordered_json results_to_json(const ExperimentSpec& spec, const ExperimentResult& result,
                             const std::string& timestamp) {
  ordered_json doc;
  doc["generated_at"] = timestamp;
  doc["spec"] = to_json(spec);
  auto cells = ordered_json::array();
  for (const auto& c : result.cells) {
    ordered_json item;
    item["mode"] = std::string(to_string(c.config.mode));
    item["normalization"] = std::string(to_string(c.config.effective_normalization()));
    item["seed"] = c.config.seed;
    item["status"] = c.ok() ? "ok" : "error";
    if (c.ok()) {
      item["report"] = to_json(*c.report);
    } else {
      item["error"] = c.error;
    }
    cells.push_back(std::move(item));
  }
  doc["cells"] = std::move(cells);
  auto rows = ordered_json::array();
  for (const auto& r : result.aggregates) {
    ordered_json item;
    item["mode"] = std::string(to_string(r.mode));
    item["normalization"] = std::string(to_string(r.normalization));
    item["runs"] = r.runs;
    item["acc_mean"] = nullable(r.runs, r.acc_mean);
    item["acc_std"] = nullable(r.runs, r.acc_std);
    item["bias_mean"] = nullable(r.runs, r.bias_mean);
    item["bias_std"] = nullable(r.runs, r.bias_std);
    rows.push_back(std::move(item));
  }
  doc["aggregates"] = std::move(rows);
  doc["all_ok"] = result.all_ok();
  return doc;
}

std::vector<ExperimentCell> cells_from_json(const json& doc) {
  return guarded<std::vector<ExperimentCell>>("results cells", [&] {
    std::vector<ExperimentCell> cells;
    for (const auto& item : doc.at("cells")) {
      ExperimentCell c;
      c.config.mode = parse_train_mode(item.at("mode").get<std::string>());
      c.config.normalization = parse_normalization(item.at("normalization").get<std::string>());
      c.config.seed = item.at("seed").get<std::uint64_t>();
      if (item.at("status").get<std::string>() == "ok") {
        c.report = report_from_json(item.at("report"));
      } else {
        c.error = item.value("error", std::string("unknown error"));
      }
      cells.push_back(std::move(c));
    }
    return cells;
  });
}

std::vector<AggregateRow> aggregates_from_json(const json& doc) {
  return guarded<std::vector<AggregateRow>>("results aggregates", [&] {
    std::vector<AggregateRow> rows;
    for (const auto& item : doc.at("aggregates")) {
      AggregateRow r;
      r.mode = parse_train_mode(item.at("mode").get<std::string>());
      r.normalization = parse_normalization(item.at("normalization").get<std::string>());
      r.runs = item.at("runs").get<std::size_t>();
      if (r.runs > 0) {
        r.acc_mean = item.at("acc_mean").get<double>();
        r.acc_std = item.at("acc_std").get<double>();
        r.bias_mean = item.at("bias_mean").get<double>();
        r.bias_std = item.at("bias_std").get<double>();
      }
      rows.push_back(r);
    }
    return rows;
  });
}

std::string format_scientific(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5e", value);
  return buf;
}

void write_summary_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "mode,normalization,acc_mean,acc_std,bias_mean,bias_std\n";
  for (const auto& r : rows) {
    out << to_string(r.mode) << ',' << to_string(r.normalization);
    for (double v : {r.acc_mean, r.acc_std, r.bias_mean, r.bias_std}) {
      out << ',';
      if (r.runs > 0) out << format_scientific(v);
    }
    out << '\n';
  }
}

void write_results(const ExperimentSpec& spec, const ExperimentResult& result,
                   const std::string& timestamp) {
  const auto& path = spec.output_path;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write results '" + path.string() + "'");
    out << results_to_json(spec, result, timestamp).dump(2) << '\n';
  }
  auto csv_path = path;
  csv_path.replace_extension(".csv");
  std::ofstream csv(csv_path);
  if (!csv) throw InputError("cannot write summary '" + csv_path.string() + "'");
  write_summary_csv(csv, result.aggregates);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<TrainConfig> ablation_modes(const TrainConfig& base) {
  std::vector<TrainConfig> modes;
  for (TrainMode mode : {TrainMode::rawls_graph, TrainMode::rawls_grad}) {
    for (Normalization norm : {Normalization::row, Normalization::column, Normalization::symmetric,
                               Normalization::doubly_stochastic}) {
      TrainConfig c = base;
      c.mode = mode;
      c.normalization = norm;
      modes.push_back(c);
    }
  }
  return modes;
}

std::optional<LinearFit> least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InputError("least_squares: size mismatch");
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  const double slope = sxy / sxx;
  return LinearFit{slope, my - slope * mx};
}

DegreePlotData emit_degree_plot_data(const EvalReport& report, std::size_t min_group_size) {
  DegreePlotData data;
  std::vector<double> deg;
  std::vector<double> loss;
  std::vector<double> acc;
  for (const auto& g : report.per_degree) {
    if (g.size <= min_group_size) continue;
    data.rows.push_back(g);
    deg.push_back(static_cast<double>(g.degree));
    loss.push_back(g.avg_loss);
    acc.push_back(g.avg_accuracy);
  }
  data.loss_fit = least_squares(deg, loss);
  data.accuracy_fit = least_squares(deg, acc);
  return data;
}

void write_degree_plot_csv(std::ostream& out, const DegreePlotData& data) {
  auto fit_line = [&](const char* name, const std::optional<LinearFit>& fit) {
    out << "# " << name << " slope=";
    if (fit) out << format_scientific(fit->slope);
    out << " intercept=";
    if (fit) out << format_scientific(fit->intercept);
    out << '\n';
  };
  fit_line("loss_regression", data.loss_fit);
  fit_line("acc_regression", data.accuracy_fit);
  out << "degree,group_size,avg_loss,avg_acc\n";
  for (const auto& g : data.rows) {
    out << g.degree << ',' << g.size << ',' << format_scientific(g.avg_loss) << ','
        << format_scientific(g.avg_accuracy) << '\n';
  }
}

SinkhornBenchmark benchmark_sinkhorn(const SparseMatrix& m, const BalanceConfig& cfg,
                                     std::size_t repeats) {
  SinkhornBenchmark bench;
  bench.n = m.rows();
  bench.nnz = m.nnz();
  bench.seconds = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r) {
    const auto start = std::chrono::steady_clock::now();
    const BalanceResult res = sinkhorn_knopp(m, cfg);
    const auto stop = std::chrono::steady_clock::now();
    bench.seconds = std::min(bench.seconds, std::chrono::duration<double>(stop - start).count());
    bench.iterations = res.iterations;
    bench.max_deviation = res.max_deviation;
  }
  bench.seconds_per_iteration = bench.seconds / static_cast<double>(std::max<std::size_t>(bench.iterations, 1));
  return bench;
}

ordered_json to_json(const SinkhornBenchmark& bench) {
  ordered_json doc;
  doc["n"] = bench.n;
  doc["nnz"] = bench.nnz;
  doc["iterations"] = bench.iterations;
  doc["seconds"] = bench.seconds;
  doc["seconds_per_iteration"] = bench.seconds_per_iteration;
  doc["max_deviation"] = bench.max_deviation;
  return doc;
}

}  // namespace rawlsgcn
