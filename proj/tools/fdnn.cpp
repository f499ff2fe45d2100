// fdnn: simulate data, fit and apply classifiers, run replication studies.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdnn/bench.hpp"
#include "fdnn/classifier.hpp"
#include "fdnn/dgp.hpp"
#include "fdnn/errors.hpp"
#include "fdnn/grid.hpp"

namespace {

constexpr int kUsage = 2;
constexpr int kDataError = 3;
constexpr int kNumerical = 4;

struct SimulateArgs {
    int dgp = 1;
    std::size_t n = 100;
    std::uint64_t seed = 0;
    int grid_points = 50;
    std::string reading = "sd";
    std::string out;
};

struct FitArgs {
    std::string in;
    std::string out;
    std::uint64_t seed = 0;
    fdnn::ExperimentConfig hyper;  // only the [train]/[hyper] fields are used
    int epochs = 0;
};

struct PredictArgs {
    std::string model;
    std::string in;
    std::string out;
};

struct BenchmarkArgs {
    std::string config;
    std::string output;
    int threads = 0;
};

int simulate(const SimulateArgs& a) {
    const auto reading =
        a.reading == "variance" ? fdnn::DiagonalReading::Variance : fdnn::DiagonalReading::StandardDeviation;
    const fdnn::DGPSpec spec = fdnn::make_dgp(a.dgp, reading);
    std::vector<int> counts(static_cast<std::size_t>(spec.dim), a.grid_points);
    auto grid = std::make_shared<const fdnn::SamplingGrid>(fdnn::make_equispaced_grid(spec.dim, counts));
    const auto sim = fdnn::generate(spec, a.n, grid, a.seed);
    fdnn::write_csv_file(a.out, sim.data);
    std::printf("wrote %zu observations on %zu grid points to %s\n", a.n, grid->size(), a.out.c_str());
    return 0;
}

int fit(const FitArgs& a) {
    const fdnn::FunctionalDataset data = fdnn::read_csv_file(a.in);
    fdnn::require(data.labeled(), fdnn::ErrorKind::InvalidArgument, a.in + ": every row needs a label to fit");
    const auto& samples = data.observations;
    fdnn::require(samples.size() >= 10, fdnn::ErrorKind::InsufficientData, "FDNN fitting needs at least 10 samples");

    const fdnn::DataSplit split = fdnn::stratified_split(data.labels(), a.seed);
    fdnn::TrainConfig cfg = a.hyper.train;
    cfg.seed = a.seed;
    cfg.epochs = a.epochs > 0 ? a.epochs : fdnn::epochs_for_updates(a.hyper.updates, cfg.batch_size, split.train.size());

    fdnn::EigenSystem eig = fdnn::fit_fpca(samples);
    const fdnn::HyperGrid grid = fdnn::experiment_hyper_grid(a.hyper, samples.size(), eig.size());
    const fdnn::FDNNModel model = fdnn::fit_fdnn(samples, std::move(eig), grid, cfg, split);
    fdnn::save_model_file(a.out, model);

    const auto& c = model.selected_candidate();
    std::printf("selected L=%d J=%d width=%d B=%g (validation error %.4f over %zu candidates)\n", c.depth,
                c.components, c.width, c.bound, model.selection_report[model.selected].validation_error,
                model.selection_report.size());
    std::printf("wrote %s\n", a.out.c_str());
    return 0;
}

int predict(const PredictArgs& a) {
    const fdnn::FDNNModel model = fdnn::load_model_file(a.model);
    const fdnn::FunctionalDataset data = fdnn::read_csv_file(a.in);
    fdnn::require(fdnn::same_grid(*model.eigensystem.grid, *data.grid), fdnn::ErrorKind::IncompatibleGrids,
                  a.in + ": grid does not match the model's grid");
    const auto labels = fdnn::predict_fdnn(model, data.observations);

    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file) fdnn::fail(fdnn::ErrorKind::Io, "cannot open '" + a.out + "' for writing");
    }
    std::ostream& out = a.out.empty() ? std::cout : file;
    for (fdnn::Label l : labels) out << fdnn::value(l) << '\n';
    if (!out) fdnn::fail(fdnn::ErrorKind::Io, "failed writing predictions");

    // Keep stdout clean for the labels when they go there.
    std::FILE* summary = a.out.empty() ? stderr : stdout;
    if (data.labeled()) {
        const double err = fdnn::misclassification_rate(labels, data.labels());
        std::fprintf(summary, "accuracy %.4f on %zu labeled observations\n", 1.0 - err, labels.size());
    } else {
        std::fprintf(summary, "predicted %zu observations\n", labels.size());
    }
    return 0;
}

int benchmark(const BenchmarkArgs& a) {
    fdnn::ExperimentConfig cfg = fdnn::load_experiment_config(a.config);
    if (!a.output.empty()) cfg.output = a.output;
    if (a.threads > 0) cfg.threads = a.threads;
    const fdnn::BenchmarkResult result = fdnn::run_benchmark(cfg);
    if (cfg.output.empty())
        fdnn::write_results_csv(std::cout, result.rows);
    else
        fdnn::write_results_csv_file(cfg.output, result.rows);
    std::fprintf(cfg.output.empty() ? stderr : stdout, "%zu rows\n", result.rows.size());
    return 0;
}

int inspect(const std::string& path) {
    const fdnn::FDNNModel model = fdnn::load_model_file(path);
    const auto& eig = model.eigensystem;
    const auto& grid = *eig.grid;
    std::printf("grid: d=%d, %zu points\n", grid.dim(), grid.size());
    std::printf("eigenvalues (%d):\n", eig.size());
    const double total = eig.eigenvalues.sum();
    double running = 0.0;
    for (int j = 0; j < eig.size(); ++j) {
        running += eig.eigenvalues[j];
        std::printf("  %3d  %-14.6g cumulative %.6f\n", j + 1, eig.eigenvalues[j], total > 0 ? running / total : 0.0);
    }
    std::printf("network: J=%d, L=%d, widths", model.components, model.params.depth());
    for (const auto& v : model.params.shifts) std::printf(" %ld", static_cast<long>(v.size()));
    std::printf(", %zu parameters, max |entry| %g\n", model.params.parameter_count(), model.params.max_abs());
    std::printf("selection (%zu candidates):\n", model.selection_report.size());
    std::printf("     L    J  width        B  val_error\n");
    for (std::size_t i = 0; i < model.selection_report.size(); ++i) {
        const auto& row = model.selection_report[i];
        const auto& c = row.candidate;
        std::printf("%c %3d  %3d  %5d  %7g  %.4f\n", i == model.selected ? '*' : ' ', c.depth, c.components, c.width,
                    c.bound, row.validation_error);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Functional data classification with deep ReLU networks on FPCA scores"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Write a simulated labeled dataset as CSV");
    sim_cmd->add_option("--dgp", sim.dgp, "Simulation design (1-5)")->check(CLI::Range(1, 5));
    sim_cmd->add_option("--n", sim.n, "Number of observations")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim.seed, "Random seed");
    sim_cmd->add_option("--grid-points", sim.grid_points, "Midpoint grid points per axis")->check(CLI::Range(2, 100000));
    sim_cmd->add_option("--reading", sim.reading, "Diagonal covariance entries read as 'sd' or 'variance'")
        ->check(CLI::IsMember({"sd", "variance"}));
    sim_cmd->add_option("--out", sim.out, "Output CSV")->required();

    FitArgs fit_args;
    std::vector<int> depths;
    auto* fit_cmd = app.add_subcommand("fit", "Train an FDNN classifier and save it");
    fit_cmd->add_option("--in", fit_args.in, "Labeled CSV")->required();
    fit_cmd->add_option("--out", fit_args.out, "Model file")->required();
    fit_cmd->add_option("--seed", fit_args.seed, "Seed for the split and the training runs");
    fit_cmd->add_option("--learning-rate", fit_args.hyper.train.learning_rate, "Initial step size");
    fit_cmd->add_option("--decay", fit_args.hyper.train.decay, "Step-size decay per epoch");
    fit_cmd->add_option("--batch-size", fit_args.hyper.train.batch_size, "Mini-batch size");
    fit_cmd->add_option("--init-scale", fit_args.hyper.train.init_scale, "Multiplier on the Glorot init range");
    fit_cmd->add_option("--updates", fit_args.hyper.updates, "Approximate number of SGD steps per run");
    fit_cmd->add_option("--epochs", fit_args.epochs, "Explicit epoch count (overrides --updates)");
    fit_cmd->add_option("--depths", depths, "Depth candidates (default: bracket around log n)")->delimiter(',');
    fit_cmd->add_option("--components", fit_args.hyper.components, "J candidates")->delimiter(',');
    fit_cmd->add_option("--widths", fit_args.hyper.widths, "Width candidates")->delimiter(',');
    fit_cmd->add_option("--bounds", fit_args.hyper.bounds, "Parameter bound candidates")->delimiter(',');

    PredictArgs pred;
    auto* pred_cmd = app.add_subcommand("predict", "Apply a saved model to a CSV");
    pred_cmd->add_option("--model", pred.model, "Model file")->required();
    pred_cmd->add_option("--in", pred.in, "CSV on the model's grid")->required();
    pred_cmd->add_option("--out", pred.out, "Where to write labels (default: stdout)");

    BenchmarkArgs bench;
    auto* bench_cmd = app.add_subcommand("benchmark", "Run a replication study from a config file");
    bench_cmd->add_option("--config", bench.config, "Experiment config")->required();
    bench_cmd->add_option("--output", bench.output, "Result CSV (overrides the config)");
    bench_cmd->add_option("--threads", bench.threads, "Worker threads (overrides the config)");

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print a model's spectrum and selection report");
    inspect_cmd->add_option("--model", inspect_path, "Model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*sim_cmd) return simulate(sim);
        if (*fit_cmd) {
            if (!depths.empty()) fit_args.hyper.depths = depths;
            return fit(fit_args);
        }
        if (*pred_cmd) return predict(pred);
        if (*bench_cmd) return benchmark(bench);
        if (*inspect_cmd) return inspect(inspect_path);
    } catch (const fdnn::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.kind() == fdnn::ErrorKind::NumericalFailure ? kNumerical : kDataError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kDataError;
    }
    return kUsage;
}
