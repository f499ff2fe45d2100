#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdnn/dnn.hpp"
#include "fdnn/fpca.hpp"

namespace fdnn {

/// One (L, J, p, B) tuple; the width applies to every hidden layer.
struct HyperCandidate {
    int depth = 1;
    int components = 1;
    int width = 1;
    double bound = 1.0;

    NetworkArchitecture architecture() const;
    friend bool operator==(const HyperCandidate&, const HyperCandidate&) = default;
};

/// Lexicographic (J, L, width, B): the order used to break selection ties.
bool simpler_than(const HyperCandidate& a, const HyperCandidate& b);

struct HyperGrid {
    std::vector<HyperCandidate> candidates;

    /// Cartesian product of the value lists.
    static HyperGrid product(const std::vector<int>& depths, const std::vector<int>& components,
                             const std::vector<int>& widths, const std::vector<double>& bounds);
};

/// Depth bracket {max(1, round(log n) - 1), round(log n)} for n training samples.
std::vector<int> default_depths(std::size_t n);

/// Default grid: depths from `default_depths`, widths {8, 16, 32},
/// J in {2, 4, 6, 10} capped at `available_components`, B in {10, 100}.
HyperGrid default_hyper_grid(std::size_t n, int available_components);

/// Item-level split into a training part (about 80%) and a validation part,
/// stratified so both classes appear in both parts.
struct DataSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

DataSplit stratified_split(std::span<const Label> labels, std::uint64_t seed, double validation_fraction = 0.2);

struct SelectionRow {
    HyperCandidate candidate;
    double validation_error = 0.0;
};

struct FDNNModel {
    EigenSystem eigensystem;
    int components = 0;
    NetworkParams params;
    std::vector<SelectionRow> selection_report;
    std::size_t selected = 0;

    const HyperCandidate& selected_candidate() const { return selection_report.at(selected).candidate; }
};

/// FPCA on every sample, hyperparameter selection on the split, then a final
/// fit of the winning candidate on all samples.
FDNNModel fit_fdnn(std::span<const FunctionalObservation> samples, const HyperGrid& hyper, const TrainConfig& cfg,
                   std::uint64_t split_seed);
FDNNModel fit_fdnn(std::span<const FunctionalObservation> samples, const HyperGrid& hyper, const TrainConfig& cfg,
                   const DataSplit& split);
/// Same, reusing an eigensystem already fitted on `samples`.
FDNNModel fit_fdnn(std::span<const FunctionalObservation> samples, EigenSystem eigensystem, const HyperGrid& hyper,
                   const TrainConfig& cfg, const DataSplit& split);

double decision_value(const FDNNModel& model, const FunctionalObservation& x);
Label predict_fdnn(const FDNNModel& model, const FunctionalObservation& x);
std::vector<Label> predict_fdnn(const FDNNModel& model, std::span<const FunctionalObservation> xs);

/// Gaussian discriminant with diagonal per-class covariances on the scores.
struct QDAModel {
    Eigen::VectorXd mean[2];      // index 0: class -1, index 1: class +1
    Eigen::VectorXd variance[2];
    double log_prior[2] = {0.0, 0.0};
    std::vector<std::string> warnings;
};

/// Variances below 1e-12 are floored there and reported in `warnings`.
QDAModel fit_qda(const ScoreMatrix& scores);
double qda_log_ratio(const QDAModel& model, std::span<const double> x);
Label predict_qda(const QDAModel& model, std::span<const double> x);

/// Product of per-coordinate Gaussian-kernel density estimates per class with
/// Silverman bandwidth 1.06 * sd * m^(-1/5).
struct NPBayesModel {
    Eigen::MatrixXd points[2];   // class samples, one row each
    Eigen::VectorXd bandwidth[2];
    double log_prior[2] = {0.0, 0.0};
};

NPBayesModel fit_npbayes(const ScoreMatrix& scores);
double npbayes_log_ratio(const NPBayesModel& model, std::span<const double> x);
Label predict_npbayes(const NPBayesModel& model, std::span<const double> x);

double misclassification_rate(std::span<const Label> predictions, std::span<const Label> truth);

/// Persistence in a sectioned text format ([grid], [eigensystem], [network],
/// [selection]) with full-precision numbers.
void save_model(std::ostream& out, const FDNNModel& model);
FDNNModel load_model(std::istream& in, const std::string& source = "<stream>");
void save_model_file(const std::string& path, const FDNNModel& model);
FDNNModel load_model_file(const std::string& path);

}  // namespace fdnn
