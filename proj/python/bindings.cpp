// Python view of the library: curves travel as n x N float64 arrays with a
// separate label vector of +1/-1, grids as opaque Grid objects.

#include <fstream>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fdnn/bench.hpp"
#include "fdnn/classifier.hpp"
#include "fdnn/dgp.hpp"
#include "fdnn/errors.hpp"
#include "fdnn/fpca.hpp"
#include "fdnn/grid.hpp"

namespace py = pybind11;
using namespace fdnn;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
// pybind11 holders cannot be pointers to const; grids are immutable anyway
using PyGrid = std::shared_ptr<SamplingGrid>;

PyGrid expose(const GridPtr& g) { return std::const_pointer_cast<SamplingGrid>(g); }

std::vector<FunctionalObservation> to_observations(const GridPtr& grid, const Eigen::Ref<const RowMatrix>& values,
                                                   const std::optional<std::vector<int>>& labels) {
    require(static_cast<std::size_t>(values.cols()) == grid->size(), ErrorKind::IncompatibleGrids,
            "array has " + std::to_string(values.cols()) + " columns but the grid has " +
                std::to_string(grid->size()) + " points");
    if (labels)
        require(labels->size() == static_cast<std::size_t>(values.rows()), ErrorKind::InvalidArgument,
                "labels and values have different lengths");
    std::vector<FunctionalObservation> out;
    out.reserve(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        std::optional<Label> label;
        if (labels) label = label_from_int((*labels)[static_cast<std::size_t>(i)]);
        out.emplace_back(grid, std::vector<double>(values.row(i).data(), values.row(i).data() + values.cols()), label);
    }
    return out;
}

RowMatrix to_matrix(std::span<const FunctionalObservation> xs, std::size_t width) {
    RowMatrix m(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t p = 0; p < width; ++p) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = xs[i].values[p];
    return m;
}

std::vector<int> to_ints(std::span<const Label> labels) {
    std::vector<int> out;
    for (Label l : labels) out.push_back(static_cast<int>(l));
    return out;
}

py::tuple dataset_tuple(const FunctionalDataset& d) {
    py::object labels = py::none();
    if (d.labeled()) labels = py::cast(to_ints(d.labels()));
    return py::make_tuple(to_matrix(d.observations, d.grid->size()), labels, expose(d.grid));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Functional data classification with deep ReLU networks on FPCA scores";

    // the module keeps the type alive, so a borrowed pointer is enough
    static PyObject* error_type = py::exception<Error>(m, "FdnnError", PyExc_ValueError).ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = py::reinterpret_borrow<py::object>(error_type)(e.what());
            err.attr("kind") = std::string(to_string(e.kind()));
            PyErr_SetObject(error_type, err.ptr());
        }
    });

    py::class_<SamplingGrid, PyGrid>(m, "Grid")
        .def_property_readonly("dim", &SamplingGrid::dim)
        .def_property_readonly("size", &SamplingGrid::size)
        .def_property_readonly("points_per_axis", &SamplingGrid::points_per_axis)
        .def_property_readonly("weights", [](const SamplingGrid& g) {
            return std::vector<double>(g.weights().begin(), g.weights().end());
        })
        .def_property_readonly("points", [](const SamplingGrid& g) {
            RowMatrix pts(static_cast<Eigen::Index>(g.size()), g.dim());
            for (std::size_t p = 0; p < g.size(); ++p) {
                const auto x = g.point(p);
                for (int a = 0; a < g.dim(); ++a) pts(static_cast<Eigen::Index>(p), a) = x[static_cast<std::size_t>(a)];
            }
            return pts;
        })
        .def("__eq__", [](const SamplingGrid& a, const SamplingGrid& b) { return same_grid(a, b); })
        .def("__repr__", [](const SamplingGrid& g) {
            return "Grid(dim=" + std::to_string(g.dim()) + ", size=" + std::to_string(g.size()) + ")";
        });

    m.def("midpoint_grid", [](int dim, int points) {
        return std::make_shared<SamplingGrid>(make_equispaced_grid(dim, std::vector<int>(static_cast<std::size_t>(dim), points)));
    }, py::arg("dim"), py::arg("points"), "Midpoint-rule grid on [0,1]^dim with `points` points per axis.");

    m.def("simulate", [](int dgp, std::size_t n, std::uint64_t seed, int grid_points, const std::string& reading) {
        require(reading == "sd" || reading == "variance", ErrorKind::InvalidArgument, "reading must be 'sd' or 'variance'");
        const DGPSpec spec = make_dgp(dgp, reading == "sd" ? DiagonalReading::StandardDeviation : DiagonalReading::Variance);
        auto grid = std::make_shared<const SamplingGrid>(
            make_equispaced_grid(spec.dim, std::vector<int>(static_cast<std::size_t>(spec.dim), grid_points)));
        return dataset_tuple(generate(spec, n, grid, seed).data);
    }, py::arg("dgp"), py::arg("n"), py::arg("seed") = 0, py::arg("grid_points") = 50, py::arg("reading") = "sd",
       "Draw n labeled curves from a simulation design. Returns (values, labels, grid).");

    m.def("bayes_risk", [](int dgp, std::size_t m_draws, std::uint64_t seed) {
        const RiskEstimate r = bayes_risk(make_dgp(dgp), m_draws, seed);
        return py::make_tuple(r.rate, r.se);
    }, py::arg("dgp"), py::arg("m") = 100000, py::arg("seed") = 0, "Monte Carlo Bayes risk and its standard error.");

    m.def("read_csv", [](const std::string& path) { return dataset_tuple(read_csv_file(path)); }, py::arg("path"));
    m.def("write_csv", [](const std::string& path, const Eigen::Ref<const RowMatrix>& values,
                          const std::optional<std::vector<int>>& labels, const PyGrid& grid) {
        FunctionalDataset d{grid, to_observations(grid, values, labels)};
        write_csv_file(path, d);
    }, py::arg("path"), py::arg("values"), py::arg("labels"), py::arg("grid"));

    m.def("fpca", [](const Eigen::Ref<const RowMatrix>& values, const std::vector<int>& labels, const PyGrid& grid,
                     int max_components) {
        const EigenSystem eig = fit_fpca(to_observations(grid, values, labels), max_components);
        return py::make_tuple(eig.eigenvalues, eig.eigenfunctions, eig.mean_function);
    }, py::arg("values"), py::arg("labels"), py::arg("grid"), py::arg("max_components") = -1,
       "Pooled within-class FPCA. Returns (eigenvalues, eigenfunctions as N x J columns, mean function).");

    py::class_<FDNNModel>(m, "FDNNModel")
        .def_static("fit", [](const Eigen::Ref<const RowMatrix>& values, const std::vector<int>& labels,
                              const PyGrid& grid, std::uint64_t seed, std::optional<std::vector<int>> depths,
                              std::vector<int> components, std::vector<int> widths, std::vector<double> bounds,
                              double learning_rate, double decay, int batch_size, long updates,
                              std::optional<int> epochs) {
            const auto xs = to_observations(grid, values, labels);
            ExperimentConfig hyper;
            hyper.depths = std::move(depths);
            hyper.components = std::move(components);
            hyper.widths = std::move(widths);
            hyper.bounds = std::move(bounds);
            TrainConfig cfg;
            cfg.learning_rate = learning_rate;
            cfg.decay = decay;
            cfg.batch_size = batch_size;
            cfg.seed = seed;
            std::vector<Label> ls;
            for (const auto& x : xs) ls.push_back(*x.label);
            const DataSplit split = stratified_split(ls, seed);
            cfg.epochs = epochs ? *epochs : epochs_for_updates(updates, batch_size, split.train.size());
            EigenSystem eig = fit_fpca(xs);
            const HyperGrid grid_h = experiment_hyper_grid(hyper, xs.size(), eig.size());
            py::gil_scoped_release release;
            return fit_fdnn(xs, std::move(eig), grid_h, cfg, split);
        }, py::arg("values"), py::arg("labels"), py::arg("grid"), py::arg("seed") = 0, py::arg("depths") = py::none(),
           py::arg("components") = std::vector<int>{2, 4, 6, 10}, py::arg("widths") = std::vector<int>{8, 16, 32},
           py::arg("bounds") = std::vector<double>{10.0, 100.0}, py::arg("learning_rate") = 0.1,
           py::arg("decay") = 0.99, py::arg("batch_size") = 32, py::arg("updates") = 2000,
           py::arg("epochs") = py::none(),
           "FPCA, hyperparameter selection on a stratified 80/20 split, then a refit on all curves.")
        .def_static("load", &load_model_file, py::arg("path"))
        .def("save", [](const FDNNModel& model, const std::string& path) { save_model_file(path, model); }, py::arg("path"))
        .def("decision_function", [](const FDNNModel& model, const Eigen::Ref<const RowMatrix>& values) {
            const auto xs = to_observations(model.eigensystem.grid, values, std::nullopt);
            std::vector<double> out;
            for (const auto& x : xs) out.push_back(decision_value(model, x));
            return out;
        }, py::arg("values"))
        .def("predict", [](const FDNNModel& model, const Eigen::Ref<const RowMatrix>& values) {
            return to_ints(predict_fdnn(model, to_observations(model.eigensystem.grid, values, std::nullopt)));
        }, py::arg("values"))
        .def_property_readonly("grid", [](const FDNNModel& model) { return expose(model.eigensystem.grid); })
        .def_property_readonly("components", [](const FDNNModel& model) { return model.components; })
        .def_property_readonly("eigenvalues", [](const FDNNModel& model) { return model.eigensystem.eigenvalues; })
        .def_property_readonly("selected", [](const FDNNModel& model) {
            const auto& c = model.selected_candidate();
            return py::dict(py::arg("depth") = c.depth, py::arg("components") = c.components,
                            py::arg("width") = c.width, py::arg("bound") = c.bound);
        })
        .def_property_readonly("selection_report", [](const FDNNModel& model) {
            py::list rows;
            for (const auto& r : model.selection_report)
                rows.append(py::make_tuple(r.candidate.depth, r.candidate.components, r.candidate.width,
                                           r.candidate.bound, r.validation_error));
            return rows;
        }, "(depth, components, width, bound, validation_error) per candidate, in grid order.");

    m.def("run_benchmark", [](const std::string& config_path, std::optional<int> threads) {
        ExperimentConfig cfg = load_experiment_config(config_path);
        if (threads) cfg.threads = *threads;
        BenchmarkResult r;
        {
            py::gil_scoped_release release;
            r = run_benchmark(cfg);
        }
        py::list rows;
        for (const auto& x : r.rows)
            rows.append(py::dict(py::arg("dgp") = x.dgp, py::arg("n") = x.n, py::arg("method") = x.method,
                                 py::arg("rate") = x.rate, py::arg("se") = x.se, py::arg("runtime_s") = x.runtime_s));
        return rows;
    }, py::arg("config"), py::arg("threads") = py::none(), "Run a replication study; one dict per result row.");
}
