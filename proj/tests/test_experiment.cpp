#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "rawlsgcn/errors.hpp"
#include "rawlsgcn/experiment.hpp"

using namespace rawlsgcn;
namespace fs = std::filesystem;

namespace {

ExperimentSpec quick_spec(std::vector<TrainMode> modes, std::vector<std::uint64_t> seeds) {
  ExperimentSpec spec;
  spec.dataset.synthetic = parse_synthetic("n=1700,m=2,classes=4,dim=8");
  spec.dataset.vary_with_seed = true;
  for (TrainMode m : modes) {
    TrainConfig c;
    c.mode = m;
    c.epochs = 8;
    c.hidden_dim = 8;
    spec.modes.push_back(c);
  }
  spec.seeds = std::move(seeds);
  return spec;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("synthetic parameter strings") {
  const SyntheticParams p = parse_synthetic("n=300,m=3,classes=5,dim=9,homophily=0.5,noise=0.25,triad=0.1,seed=7");
  CHECK(p.n == 300);
  CHECK(p.m_attach == 3);
  CHECK(p.classes == 5);
  CHECK(p.feature_dim == 9);
  CHECK(p.homophily == 0.5);
  CHECK(p.feature_noise == 0.25);
  CHECK(p.triad_closure == 0.1);
  CHECK(p.seed == 7);
  CHECK(parse_synthetic("").n == SyntheticParams{}.n);
  CHECK_THROWS_AS(parse_synthetic("n=abc"), InputError);
  CHECK_THROWS_AS(parse_synthetic("size=3"), InputError);
  CHECK_THROWS_AS(parse_synthetic("n"), InputError);
}

TEST_CASE("spec parsing and validation") {
  const auto doc = nlohmann::json::parse(R"({
    "dataset": {"synthetic": {"n": 1800, "seed": 2}, "vary_with_seed": true},
    "modes": [{"mode": "vanilla"}, {"mode": "rawls_grad", "normalization": "row", "epochs": 3, "lr": 0.05}],
    "seeds": [4, 5],
    "output": "out/results.json"
  })");
  const ExperimentSpec spec = parse_experiment_spec(doc);
  CHECK(spec.dataset.synthetic->n == 1800);
  CHECK(spec.dataset.vary_with_seed);
  REQUIRE(spec.modes.size() == 2);
  CHECK(spec.modes[1].mode == TrainMode::rawls_grad);
  CHECK(spec.modes[1].normalization == Normalization::row);
  CHECK(spec.modes[1].epochs == 3);
  CHECK(spec.modes[1].lr == 0.05);
  CHECK(spec.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(spec.output_path == "out/results.json");
  CHECK(parse_experiment_spec(nlohmann::json::parse(to_json(spec).dump())).modes[1].lr == 0.05);

  ExperimentSpec bad = spec;
  bad.seeds.clear();
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = spec;
  bad.modes.clear();
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = spec;
  bad.dataset.path = "somewhere";
  CHECK_THROWS_AS(bad.validate(), InputError);
  CHECK_THROWS_AS(parse_experiment_spec(nlohmann::json::parse(R"({"modes": []})")), InputError);
  CHECK_THROWS_AS(parse_experiment_spec(nlohmann::json::parse(
                      R"({"dataset": {"path": "x"}, "modes": [{"mode": "nope"}]})")),
                  InputError);
}

TEST_CASE("aggregates equal the mean and population std of the cell reports") {
  const ExperimentSpec spec = quick_spec({TrainMode::vanilla}, {0, 1, 2, 3, 4});
  const ExperimentResult result = run_experiment(spec, 2);
  REQUIRE(result.cells.size() == 5);
  REQUIRE(result.all_ok());
  REQUIRE(result.aggregates.size() == 1);
  std::vector<double> acc, bias;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(result.cells[i].config.seed == i);
    acc.push_back(result.cells[i].report->overall_accuracy);
    bias.push_back(result.cells[i].report->bias);
  }
  auto mean = [](const std::vector<double>& v) {
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / v.size());
  };
  auto pstd = [&](const std::vector<double>& v) {
    const double m = mean(v);
    long double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(static_cast<double>(s / v.size()));
  };
  const AggregateRow& row = result.aggregates[0];
  CHECK(row.runs == 5);
  CHECK(row.acc_mean == doctest::Approx(mean(acc)).epsilon(1e-14));
  CHECK(row.acc_std == doctest::Approx(pstd(acc)).epsilon(1e-12));
  CHECK(row.bias_mean == doctest::Approx(mean(bias)).epsilon(1e-14));
  CHECK(row.bias_std == doctest::Approx(pstd(bias)).epsilon(1e-12));

  // Parsing the emitted document and re-aggregating gives the same rows.
  const auto doc = nlohmann::json::parse(results_to_json(spec, result, "t").dump(2));
  CHECK(aggregate(cells_from_json(doc)) == result.aggregates);
  CHECK(aggregates_from_json(doc) == result.aggregates);
}

TEST_CASE("worker count does not change results") {
  const ExperimentSpec spec = quick_spec({TrainMode::vanilla, TrainMode::rawls_grad}, {0, 1});
  const auto one = results_to_json(spec, run_experiment(spec, 1), "t").dump();
  const auto four = results_to_json(spec, run_experiment(spec, 4), "t").dump();
  CHECK(one == four);
}

TEST_CASE("three modes give a three-row summary") {
  const ExperimentSpec spec =
      quick_spec({TrainMode::vanilla, TrainMode::rawls_graph, TrainMode::rawls_grad}, {0});
  const ExperimentResult result = run_experiment(spec, 1);
  std::ostringstream csv;
  write_summary_csv(csv, result.aggregates);
  const auto lines = lines_of(csv.str());
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "mode,normalization,acc_mean,acc_std,bias_mean,bias_std");
  CHECK(lines[1].rfind("vanilla,symmetric,", 0) == 0);
  CHECK(lines[2].rfind("rawls_graph,doubly_stochastic,", 0) == 0);
  CHECK(lines[3].rfind("rawls_grad,doubly_stochastic,", 0) == 0);
}

TEST_CASE("ablation grid has eight rows") {
  const auto modes = ablation_modes(TrainConfig{});
  REQUIRE(modes.size() == 8);
  CHECK(modes[0].mode == TrainMode::rawls_graph);
  CHECK(modes[0].effective_normalization() == Normalization::row);
  CHECK(modes[3].effective_normalization() == Normalization::doubly_stochastic);
  CHECK(modes[4].mode == TrainMode::rawls_grad);
  CHECK(modes[5].effective_normalization() == Normalization::column);

  ExperimentSpec spec = quick_spec({TrainMode::vanilla}, {0});
  spec.modes = ablation_modes(spec.modes.front());
  const ExperimentResult result = run_experiment(spec, 1);
  CHECK(result.all_ok());
  CHECK(result.aggregates.size() == 8);
}

TEST_CASE("a failing cell is recorded and the rest still run") {
  ExperimentSpec spec = quick_spec({TrainMode::vanilla, TrainMode::rawls_graph}, {0, 1});
  spec.modes[1].balance.max_iterations = 1;
  const ExperimentResult result = run_experiment(spec, 2);
  CHECK_FALSE(result.all_ok());
  CHECK(result.cells[0].ok());
  CHECK(result.cells[1].ok());
  CHECK_FALSE(result.cells[2].ok());
  CHECK(result.cells[2].error.find("sinkhorn") != std::string::npos);
  CHECK(result.aggregates[0].runs == 2);
  CHECK(result.aggregates[1].runs == 0);

  const auto doc = nlohmann::json::parse(results_to_json(spec, result, "t").dump());
  CHECK(doc["cells"][2]["status"] == "error");
  CHECK(doc["aggregates"][1]["acc_mean"].is_null());
  CHECK(doc["all_ok"] == false);
  CHECK(aggregates_from_json(doc) == result.aggregates);

  spec.dataset.synthetic->n = 100;  // too small for the split protocol
  const ExperimentResult broken = run_experiment(spec, 1);
  for (const auto& c : broken.cells) CHECK_FALSE(c.ok());
}

TEST_CASE("results files are byte-identical apart from the timestamp line") {
  const fs::path dir = fs::temp_directory_path() / "rawlsgcn_experiment_files";
  fs::remove_all(dir);
  ExperimentSpec spec = quick_spec({TrainMode::vanilla, TrainMode::rawls_graph}, {0, 1});
  spec.output_path = dir / "a" / "results.json";
  write_results(spec, run_experiment(spec, 1), "2001-01-01T00:00:00Z");
  const std::string first = slurp(spec.output_path);
  const std::string first_csv = slurp(dir / "a" / "results.csv");
  write_results(spec, run_experiment(spec, 3), utc_timestamp());
  const std::string second = slurp(spec.output_path);

  auto a = lines_of(first);
  auto b = lines_of(second);
  REQUIRE(a.size() == b.size());
  CHECK(a[1].find("generated_at") != std::string::npos);
  a.erase(a.begin() + 1);
  b.erase(b.begin() + 1);
  CHECK(a == b);
  CHECK(slurp(dir / "a" / "results.csv") == first_csv);
  fs::remove_all(dir);
}

TEST_CASE("scientific formatting") {
  CHECK(format_scientific(0.0) == "0.00000e+00");
  CHECK(format_scientific(1234.5678) == "1.23457e+03");
  CHECK(format_scientific(-2.5e-7) == "-2.50000e-07");
}

TEST_CASE("degree plot data") {
  EvalReport rep;
  rep.per_degree = {{1, 10, 1.0, 0.5}, {2, 10, 2.0, 0.7}, {3, 4, 9.0, 0.1}};
  const DegreePlotData data = emit_degree_plot_data(rep, 5);
  REQUIRE(data.rows.size() == 2);
  REQUIRE(data.loss_fit.has_value());
  CHECK(data.loss_fit->slope == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(data.loss_fit->intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(data.accuracy_fit->slope == doctest::Approx(0.2).epsilon(1e-12));

  const DegreePlotData empty = emit_degree_plot_data(rep, 100);
  CHECK(empty.rows.empty());
  CHECK_FALSE(empty.loss_fit.has_value());
  std::ostringstream out;
  write_degree_plot_csv(out, empty);
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "# loss_regression slope= intercept=");
  CHECK(lines[2] == "degree,group_size,avg_loss,avg_acc");

  const DegreePlotData single = emit_degree_plot_data(rep, 0);
  CHECK(single.rows.size() == 3);
  std::ostringstream full;
  write_degree_plot_csv(full, single);
  CHECK(lines_of(full.str()).size() == 6);
  CHECK(lines_of(full.str())[3] == "1,10,1.00000e+00,5.00000e-01");
}

TEST_CASE("vanilla loss falls with degree on the synthetic graph") {
  SyntheticParams p;
  GraphDataset ds = synthetic_powerlaw(p);
  ds.split = make_split(ds, 0);
  const EvalReport rep = train(ds, TrainConfig{}).report;
  const DegreePlotData data = emit_degree_plot_data(rep);
  REQUIRE(data.loss_fit.has_value());
  CHECK(data.loss_fit->slope < 0.0);
}

TEST_CASE("Sinkhorn benchmark") {
  const SinkhornBenchmark id = benchmark_sinkhorn(SparseMatrix::identity(50), {}, 1);
  CHECK(id.iterations == 1);
  CHECK(id.n == 50);
  CHECK(id.nnz == 50);

  // The 0-1-2 path; longer paths mix slowly and need roughly n^2 / 6 iterations.
  const SinkhornBenchmark path = benchmark_sinkhorn(renormalized_laplacian(oracle::path_graph(3)), {}, 1);
  CHECK(path.iterations < 200);
  CHECK(path.max_deviation <= 1e-8);
  for (std::size_t n : {3, 10, 20, 100}) {
    const auto k = benchmark_sinkhorn(renormalized_laplacian(oracle::path_graph(n)), {}, 1).iterations;
    MESSAGE("path graph n=" << n << ": " << k << " iterations");
  }

  CHECK_THROWS_AS(benchmark_sinkhorn(SparseMatrix::zeros(3, 3), {}, 1), DegenerateInputError);
  const auto doc = to_json(path);
  CHECK(doc["iterations"] == path.iterations);
}

TEST_CASE("per-iteration cost grows linearly with edge count") {
  // Twice the nodes at the same attachment count doubles the edge count.
  auto per_iteration = [](std::size_t n) {
    SyntheticParams p;
    p.n = n;
    p.m_attach = 4;
    const SparseMatrix hat = renormalized_laplacian(synthetic_powerlaw(p).adjacency);
    BalanceConfig cfg;
    cfg.max_iterations = 40;
    cfg.tolerance = 1e-300;  // force a fixed iteration count
    double best = 1e300;
    for (int r = 0; r < 5; ++r) {
      const auto start = std::chrono::steady_clock::now();
      try {
        sinkhorn_knopp(hat, cfg);
      } catch (const NonConvergenceError&) {
      }
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    return std::make_pair(best / 40.0, hat.nnz());
  };
  const auto [t1, m1] = per_iteration(40000);
  const auto [t2, m2] = per_iteration(80000);
  const double ratio = t2 / t1;
  MESSAGE("nnz " << m1 << " -> " << m2 << ", per-iteration time ratio " << ratio);
  CHECK(ratio >= 1.3);
  CHECK(ratio <= 3.0);
}
