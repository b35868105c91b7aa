#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "rawlsgcn/errors.hpp"
#include "rawlsgcn/experiment.hpp"

namespace py = pybind11;
using namespace rawlsgcn;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

template <typename T>
py::array_t<T> to_numpy(std::span<const T> values) {
  return py::array_t<T>(static_cast<py::ssize_t>(values.size()), values.data());
}

py::array_t<double> dense_to_numpy(const DenseMatrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

DenseMatrix dense_from_numpy(const DoubleArray& a) {
  if (a.ndim() != 2) throw InputError("expected a 2-d array");
  return DenseMatrix(a.shape(0), a.shape(1), std::vector<double>(a.data(), a.data() + a.size()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Degree-fair GCN training core";

  auto input_error = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", input_error.ptr());
  py::register_exception<NonConvergenceError>(m, "NonConvergenceError", PyExc_RuntimeError);

  py::class_<SparseMatrix>(m, "SparseMatrix")
      .def(py::init([](std::size_t rows, std::size_t cols, std::vector<std::size_t> indptr,
                       std::vector<std::size_t> indices, std::vector<double> data) {
             return SparseMatrix(rows, cols, std::move(indptr), std::move(indices), std::move(data));
           }),
           py::arg("rows"), py::arg("cols"), py::arg("indptr"), py::arg("indices"), py::arg("data"))
      .def_static("from_dense", [](const DoubleArray& a) { return SparseMatrix::from_dense(dense_from_numpy(a)); })
      .def_static("identity", &SparseMatrix::identity)
      .def_property_readonly("shape", [](const SparseMatrix& s) { return py::make_tuple(s.rows(), s.cols()); })
      .def_property_readonly("nnz", &SparseMatrix::nnz)
      .def_property_readonly("indptr", [](const SparseMatrix& s) { return to_numpy(s.row_offsets()); })
      .def_property_readonly("indices", [](const SparseMatrix& s) { return to_numpy(s.col_indices()); })
      .def_property_readonly("data", [](const SparseMatrix& s) { return to_numpy(s.values()); })
      .def("to_dense", [](const SparseMatrix& s) { return dense_to_numpy(s.to_dense()); })
      .def("transpose", &SparseMatrix::transpose)
      .def("is_symmetric", &SparseMatrix::is_symmetric, py::arg("tolerance") = 0.0)
      .def("__matmul__", [](const SparseMatrix& s, const DoubleArray& x) {
        return dense_to_numpy(spmm(s, dense_from_numpy(x)));
      });

  py::class_<BalanceResult>(m, "BalanceResult")
      .def_readonly("matrix", &BalanceResult::matrix)
      .def_readonly("row_scale", &BalanceResult::row_scale)
      .def_readonly("col_scale", &BalanceResult::col_scale)
      .def_readonly("iterations", &BalanceResult::iterations)
      .def_readonly("max_deviation", &BalanceResult::max_deviation)
      .def_readonly("converged", &BalanceResult::converged);

  m.def(
      "sinkhorn_knopp",
      [](const SparseMatrix& s, double tol, std::size_t max_iter) {
        return sinkhorn_knopp(s, BalanceConfig{tol, max_iter});
      },
      py::arg("matrix"), py::arg("tol") = 1e-8, py::arg("max_iter") = 10000);

  m.def(
      "from_edge_list",
      [](const std::vector<Edge>& edges, std::size_t n, bool symmetrize) {
        return from_edge_list(edges, n, symmetrize);
      }, py::arg("edges"), py::arg("n"), py::arg("symmetrize") = true);
  m.def("renormalized_laplacian", &renormalized_laplacian, py::arg("adjacency"));
  m.def(
      "normalize",
      [](const SparseMatrix& s, const std::string& variant) { return normalize(s, parse_normalization(variant)); },
      py::arg("matrix"), py::arg("variant"));
  m.def(
      "propagation_matrix",
      [](const SparseMatrix& s, const std::string& variant) {
        return propagation_matrix(s, parse_normalization(variant));
      },
      py::arg("adjacency"), py::arg("variant"));
  m.def("integer_degrees", &integer_degrees, py::arg("adjacency"));

  py::class_<GraphDataset>(m, "GraphDataset")
      .def_readonly("adjacency", &GraphDataset::adjacency)
      .def_property_readonly("features", [](const GraphDataset& d) { return dense_to_numpy(d.features); })
      .def_readonly("labels", &GraphDataset::labels)
      .def_readonly("num_classes", &GraphDataset::num_classes)
      .def_readonly("dropped_self_loops", &GraphDataset::dropped_self_loops)
      .def_property_readonly("num_nodes", &GraphDataset::num_nodes)
      .def_property_readonly("train_idx", [](const GraphDataset& d) { return d.split.train; })
      .def_property_readonly("val_idx", [](const GraphDataset& d) { return d.split.val; })
      .def_property_readonly("test_idx", [](const GraphDataset& d) { return d.split.test; });

  m.def("load_dataset", [](const std::string& dir) { return load_dataset(dir); }, py::arg("path"));
  m.def(
      "make_split",
      [](GraphDataset d, std::uint64_t seed) {
        d.split = make_split(d, seed);
        return d;
      },
      py::arg("dataset"), py::arg("seed"), "Copy of the dataset with a fresh seeded split.");
  m.def(
      "synthetic_powerlaw",
      [](std::size_t n, std::size_t m_attach, std::size_t classes, std::size_t feature_dim,
         double homophily, double feature_noise, double triad_closure, std::uint64_t seed) {
        GraphDataset d = synthetic_powerlaw(
            {n, m_attach, classes, feature_dim, homophily, feature_noise, triad_closure, seed});
        d.split = make_split(d, seed);
        return d;
      },
      py::arg("n") = 2000, py::arg("m_attach") = 2, py::arg("classes") = 4, py::arg("feature_dim") = 16,
      py::arg("homophily") = 0.8, py::arg("feature_noise") = 1.0, py::arg("triad_closure") = 0.0,
      py::arg("seed") = 0, "Synthetic power-law graph with a split drawn from the same seed.");

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init([](const std::string& mode, std::optional<std::string> normalization,
                       std::size_t epochs, double lr, std::size_t hidden_dim, std::uint64_t seed) {
             TrainConfig c;
             c.mode = parse_train_mode(mode);
             if (normalization) c.normalization = parse_normalization(*normalization);
             c.epochs = epochs;
             c.lr = lr;
             c.hidden_dim = hidden_dim;
             c.seed = seed;
             c.validate();
             return c;
           }),
           py::arg("mode") = "vanilla", py::arg("normalization") = py::none(), py::arg("epochs") = 100,
           py::arg("lr") = 0.01, py::arg("hidden_dim") = 64, py::arg("seed") = 0)
      .def_property_readonly("mode", [](const TrainConfig& c) { return std::string(to_string(c.mode)); })
      .def_property_readonly("normalization",
                             [](const TrainConfig& c) { return std::string(to_string(c.effective_normalization())); })
      .def_readonly("epochs", &TrainConfig::epochs)
      .def_readonly("lr", &TrainConfig::lr)
      .def_readonly("seed", &TrainConfig::seed);

  py::class_<DegreeGroup>(m, "DegreeGroup")
      .def_readonly("degree", &DegreeGroup::degree)
      .def_readonly("size", &DegreeGroup::size)
      .def_readonly("avg_loss", &DegreeGroup::avg_loss)
      .def_readonly("avg_accuracy", &DegreeGroup::avg_accuracy);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("overall_accuracy", &EvalReport::overall_accuracy)
      .def_readonly("bias", &EvalReport::bias)
      .def_readonly("per_degree", &EvalReport::per_degree)
      .def_readonly("loss_curve", &EvalReport::loss_curve);

  m.def(
      "train", [](const GraphDataset& d, const TrainConfig& c) {
        py::gil_scoped_release release;
        return train(d, c).report;
      },
      py::arg("dataset"), py::arg("config"));

  m.def(
      "bias_metric",
      [](const std::vector<double>& losses, const std::vector<std::size_t>& degrees,
         const std::vector<std::size_t>& mask) {
        const BiasResult r = bias_metric(losses, degrees, mask);
        py::list groups;
        for (const auto& g : r.groups) groups.append(py::make_tuple(g.degree, g.size, g.avg_loss));
        return py::make_tuple(r.bias, groups);
      },
      py::arg("losses"), py::arg("degrees"), py::arg("mask"));

  m.def(
      "_run_experiment_json",
      [](const std::string& spec_text, std::size_t workers, const std::string& timestamp) {
        const ExperimentSpec spec = parse_experiment_spec(nlohmann::json::parse(spec_text));
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(spec, workers);
        }
        return results_to_json(spec, result, timestamp).dump();
      },
      py::arg("spec"), py::arg("workers") = 1, py::arg("timestamp") = "");
}
