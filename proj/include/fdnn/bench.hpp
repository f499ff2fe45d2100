#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdnn/classifier.hpp"
#include "fdnn/dgp.hpp"

namespace fdnn {

/// A replication study. Exactly one of `dgp` / `input` is set.
///
/// Config files are sectioned `key = value` text:
///
///   [experiment]  dgp | input, reading, sizes, replications, test_size,
///                 grid_points, base_seed, threads, timing, output
///   [train]       learning_rate, decay, epochs (integer or auto), updates,
///                 batch_size, init_scale
///   [hyper]       depths (list or auto), components, widths, bounds
///
/// Unknown sections or keys are errors.
struct ExperimentConfig {
    std::optional<int> dgp;
    std::string input;
    DiagonalReading reading = DiagonalReading::StandardDeviation;
    std::vector<std::size_t> sizes{40, 100, 200, 400};
    int replications = 20;
    std::size_t test_size = 500;
    /// Points per axis of the midpoint grid for simulated designs.
    int grid_points = 50;
    std::uint64_t base_seed = 1;
    int threads = 1;
    /// Off by default so result files are bit-reproducible; runtime_s is then 0.
    bool timing = false;
    std::string output;

    TrainConfig train;
    /// With no explicit epoch count, epochs = ceil(updates * batch / training rows).
    std::optional<int> epochs;
    long updates = 2000;

    std::optional<std::vector<int>> depths;
    std::vector<int> components{2, 4, 6, 10};
    std::vector<int> widths{8, 16, 32};
    std::vector<double> bounds{10.0, 100.0};

    void validate() const;
};

ExperimentConfig parse_experiment_config(std::istream& in, const std::string& source = "<stream>");
ExperimentConfig load_experiment_config(const std::string& path);

/// Epoch count giving about `updates` mini-batch steps on `rows` samples.
int epochs_for_updates(long updates, int batch_size, std::size_t rows);

/// The candidate grid for n training samples and `available` eigenfunctions:
/// J values are capped at `available` and deduplicated.
HyperGrid experiment_hyper_grid(const ExperimentConfig& cfg, std::size_t n, int available);

struct ResultRow {
    std::string dgp;
    std::size_t n = 0;
    std::string method;
    double rate = 0.0;
    double se = 0.0;
    double runtime_s = 0.0;
};

/// One method on one replication. `excess` and `excess_se` are the paired
/// comparison against the Bayes rule on the same test draws (simulated
/// designs only; zero otherwise).
struct ReplicationRecord {
    std::string dgp;
    std::size_t n = 0;
    int replication = 0;
    std::string method;
    double rate = 0.0;
    double excess = 0.0;
    double excess_se = 0.0;
    double runtime_s = 0.0;
};

struct BenchmarkResult {
    std::vector<ResultRow> rows;
    std::vector<ReplicationRecord> records;
};

BenchmarkResult run_benchmark(const ExperimentConfig& cfg);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_results_csv_file(const std::string& path, const std::vector<ResultRow>& rows);

}  // namespace fdnn
