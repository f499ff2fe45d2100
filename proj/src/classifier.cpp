#include "fdnn/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

#include "fdnn/errors.hpp"

namespace fdnn {

NetworkArchitecture HyperCandidate::architecture() const {
    NetworkArchitecture arch;
    arch.input_dim = components;
    arch.widths.assign(static_cast<std::size_t>(std::max(depth, 0)), width);
    arch.bound = bound;
    return arch;
}

bool simpler_than(const HyperCandidate& a, const HyperCandidate& b) {
    return std::tie(a.components, a.depth, a.width, a.bound) < std::tie(b.components, b.depth, b.width, b.bound);
}

HyperGrid HyperGrid::product(const std::vector<int>& depths, const std::vector<int>& components,
                             const std::vector<int>& widths, const std::vector<double>& bounds) {
    HyperGrid grid;
    for (int l : depths)
        for (int j : components)
            for (int w : widths)
                for (double b : bounds) grid.candidates.push_back({l, j, w, b});
    return grid;
}

std::vector<int> default_depths(std::size_t n) {
    require(n >= 1, ErrorKind::InvalidArgument, "sample size must be positive");
    const int top = std::max(1, static_cast<int>(std::lround(std::log(static_cast<double>(n)))));
    const int low = std::max(1, top - 1);
    return low == top ? std::vector<int>{top} : std::vector<int>{low, top};
}

HyperGrid default_hyper_grid(std::size_t n, int available_components) {
    require(available_components >= 1, ErrorKind::InvalidArgument, "no eigenfunctions available");
    std::vector<int> components;
    for (int j : {2, 4, 6, 10}) {
        const int capped = std::min(j, available_components);
        if (std::find(components.begin(), components.end(), capped) == components.end()) components.push_back(capped);
    }
    return HyperGrid::product(default_depths(n), components, {8, 16, 32}, {10.0, 100.0});
}

DataSplit stratified_split(std::span<const Label> labels, std::uint64_t seed, double validation_fraction) {
    require(validation_fraction > 0.0 && validation_fraction < 1.0, ErrorKind::InvalidArgument,
            "validation fraction must lie in (0, 1)");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] == Label::Positive ? 1 : 0].push_back(i);
    std::mt19937_64 rng(seed);
    DataSplit split;
    for (auto& members : by_class) {
        require(members.size() >= 2, ErrorKind::EmptyClass, "each class needs at least two samples to split");
        std::shuffle(members.begin(), members.end(), rng);
        auto n_val = static_cast<std::size_t>(std::lround(validation_fraction * static_cast<double>(members.size())));
        n_val = std::clamp<std::size_t>(n_val, 1, members.size() - 1);
        split.validation.insert(split.validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
        split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    return split;
}

namespace {

// Counts f*y < 0, plus f == 0 on a negative sample: a zero output is
// predicted +1, and counting it as correct for both classes would let a dead
// network score perfectly.
double margin_error(const NetworkParams& params, const ScoreMatrix& data) {
    const Eigen::VectorXd out = forward_rows(params, data.scores);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < data.rows(); ++i) wrong += sign_label(out[static_cast<Eigen::Index>(i)]) != data.labels[i];
    return static_cast<double>(wrong) / static_cast<double>(data.rows());
}

// A run under bound `small` that never produced an entry above `small` is
// the same run under any larger bound, provided the init ranges agree.
bool init_ranges_agree(const NetworkArchitecture& arch, const TrainConfig& cfg, double small, double large) {
    int fan_in = arch.input_dim;
    std::vector<int> outs = arch.widths;
    outs.push_back(1);
    for (int fan_out : outs) {
        const double a = cfg.init_scale * std::sqrt(6.0 / (fan_in + fan_out));
        if (std::min(small, a) != std::min(large, a)) return false;
        fan_in = fan_out;
    }
    return true;
}

// Sample order is canonicalized (lexicographic in the values, then the label)
// so that permuting the input with a fixed split assignment reproduces the
// same fit bit for bit.
bool canonical_less(const FunctionalObservation& a, const FunctionalObservation& b) {
    const auto& x = a.values;
    const auto& y = b.values;
    if (std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end())) return true;
    if (std::lexicographical_compare(y.begin(), y.end(), x.begin(), x.end())) return false;
    return a.label < b.label;
}

std::vector<std::size_t> canonical_order(std::span<const FunctionalObservation> samples,
                                         std::vector<std::size_t> indices) {
    std::stable_sort(indices.begin(), indices.end(),
                     [&](std::size_t i, std::size_t j) { return canonical_less(samples[i], samples[j]); });
    return indices;
}

void check_labels(std::span<const FunctionalObservation> samples) {
    std::size_t counts[2] = {0, 0};
    for (const auto& s : samples) {
        require(s.label.has_value(), ErrorKind::InvalidArgument, "training samples must be labeled");
        ++counts[*s.label == Label::Positive ? 1 : 0];
    }
    require(counts[0] > 0 && counts[1] > 0, ErrorKind::EmptyClass, "training data must contain both classes");
}

}  // namespace

FDNNModel fit_fdnn(std::span<const FunctionalObservation> samples, const HyperGrid& hyper, const TrainConfig& cfg,
                   std::uint64_t split_seed) {
    check_labels(samples);
    std::vector<Label> labels;
    for (const auto& s : samples) labels.push_back(*s.label);
    return fit_fdnn(samples, hyper, cfg, stratified_split(labels, split_seed));
}

FDNNModel fit_fdnn(std::span<const FunctionalObservation> samples, const HyperGrid& hyper, const TrainConfig& cfg,
                   const DataSplit& split) {
    require(samples.size() >= 10, ErrorKind::InsufficientData, "FDNN fitting needs at least 10 samples");
    check_labels(samples);
    std::vector<std::size_t> all(samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<FunctionalObservation> ordered;
    ordered.reserve(samples.size());
    for (std::size_t i : canonical_order(samples, std::move(all))) ordered.push_back(samples[i]);
    return fit_fdnn(samples, fit_fpca(ordered), hyper, cfg, split);
}

FDNNModel fit_fdnn(std::span<const FunctionalObservation> samples, EigenSystem eigensystem, const HyperGrid& hyper,
                   const TrainConfig& cfg, const DataSplit& split) {
    require(samples.size() >= 10, ErrorKind::InsufficientData, "FDNN fitting needs at least 10 samples");
    check_labels(samples);
    require(!hyper.candidates.empty(), ErrorKind::InvalidArgument, "hyperparameter grid is empty");
    require(!split.train.empty() && !split.validation.empty(), ErrorKind::InvalidArgument, "split has an empty part");
    for (std::size_t i : split.train) require(i < samples.size(), ErrorKind::InvalidArgument, "split index out of range");
    for (std::size_t i : split.validation)
        require(i < samples.size(), ErrorKind::InvalidArgument, "split index out of range");
    cfg.validate();

    FDNNModel model;
    model.eigensystem = std::move(eigensystem);
    int max_components = 0;
    for (const auto& c : hyper.candidates) {
        require(c.components >= 1 && c.components <= model.eigensystem.size(), ErrorKind::InvalidArgument,
                "candidate J=" + std::to_string(c.components) + " exceeds the " +
                    std::to_string(model.eigensystem.size()) + " available eigenfunctions");
        c.architecture().validate();
        max_components = std::max(max_components, c.components);
    }
    const ScoreMatrix all_scores = project_scores(samples, model.eigensystem, max_components);
    const ScoreMatrix train_scores = all_scores.subset(canonical_order(samples, split.train));
    const ScoreMatrix validation_scores = all_scores.subset(canonical_order(samples, split.validation));

    // Candidates sharing (L, J, width) are trained in increasing B so that
    // inactive projections can be reused.
    std::vector<std::size_t> order(hyper.candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = hyper.candidates[a];
        const auto& y = hyper.candidates[b];
        return std::tie(x.depth, x.components, x.width, x.bound) < std::tie(y.depth, y.components, y.width, y.bound);
    });

    model.selection_report.resize(hyper.candidates.size());
    std::vector<NetworkParams> fitted(hyper.candidates.size());
    const HyperCandidate* previous = nullptr;
    TrainTrace previous_trace;
    for (std::size_t idx : order) {
        const HyperCandidate& c = hyper.candidates[idx];
        const NetworkArchitecture arch = c.architecture();
        const bool reusable = previous && previous->depth == c.depth && previous->components == c.components &&
                              previous->width == c.width && previous_trace.peak_magnitude <= previous->bound &&
                              previous->bound <= c.bound && init_ranges_agree(arch, cfg, previous->bound, c.bound);
        if (!reusable) {
            previous_trace = train_traced(train_scores.leading(c.components), arch, cfg);
            previous = &c;
        }
        model.selection_report[idx] = {c, margin_error(previous_trace.params, validation_scores.leading(c.components))};
        fitted[idx] = previous_trace.params;
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < model.selection_report.size(); ++i) {
        const auto& row = model.selection_report[i];
        const auto& incumbent = model.selection_report[best];
        if (row.validation_error < incumbent.validation_error ||
            (row.validation_error == incumbent.validation_error && simpler_than(row.candidate, incumbent.candidate)))
            best = i;
    }
    model.selected = best;
    const HyperCandidate& winner = model.selection_report[best].candidate;
    model.components = winner.components;
    // The refit on all samples replaces the validated network unless it does
    // worse on the full data, by error rate first and hinge risk second (a
    // refit whose ReLUs all died lands at a constant sign).
    std::vector<std::size_t> everything(samples.size());
    std::iota(everything.begin(), everything.end(), std::size_t{0});
    const ScoreMatrix winner_scores =
        all_scores.subset(canonical_order(samples, std::move(everything))).leading(winner.components);
    NetworkParams refit = train(winner_scores, winner.architecture(), cfg);
    const auto full_data_fit = [&](const NetworkParams& p) {
        return std::pair{margin_error(p, winner_scores), hinge_risk(p, winner_scores)};
    };
    model.params = full_data_fit(refit) <= full_data_fit(fitted[best]) ? std::move(refit) : std::move(fitted[best]);
    return model;
}

double decision_value(const FDNNModel& model, const FunctionalObservation& x) {
    const Eigen::VectorXd xi = project(x, model.eigensystem, model.components);
    return forward(model.params, std::span<const double>(xi.data(), static_cast<std::size_t>(xi.size())));
}

Label predict_fdnn(const FDNNModel& model, const FunctionalObservation& x) { return sign_label(decision_value(model, x)); }

std::vector<Label> predict_fdnn(const FDNNModel& model, std::span<const FunctionalObservation> xs) {
    if (xs.empty()) return {};
    const Eigen::VectorXd out = forward_rows(model.params, project(xs, model.eigensystem, model.components));
    std::vector<Label> labels;
    labels.reserve(xs.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) labels.push_back(sign_label(out[i]));
    return labels;
}

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

std::vector<std::size_t> rows_of(const ScoreMatrix& scores, Label label) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < scores.rows(); ++i)
        if (scores.labels[i] == label) rows.push_back(i);
    return rows;
}

double sample_variance(const Eigen::VectorXd& x) {
    const double mean = x.mean();
    return (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
}

double log_sum_exp(const Eigen::ArrayXd& v) {
    const double top = v.maxCoeff();
    if (!std::isfinite(top)) return top;
    return top + std::log((v - top).exp().sum());
}

void check_query(std::span<const double> x, Eigen::Index expected) {
    require(static_cast<Eigen::Index>(x.size()) == expected, ErrorKind::InvalidArgument,
            "score vector length does not match the model");
}

}  // namespace

QDAModel fit_qda(const ScoreMatrix& scores) {
    QDAModel model;
    const auto n = static_cast<double>(scores.rows());
    for (int k = 0; k < 2; ++k) {
        const Label label = k == 1 ? Label::Positive : Label::Negative;
        const auto rows = rows_of(scores, label);
        require(!rows.empty(), ErrorKind::EmptyClass, "QDA needs samples from both classes");
        require(rows.size() >= 2, ErrorKind::InsufficientData, "QDA needs at least two samples per class");
        const ScoreMatrix part = scores.subset(rows);
        model.mean[k] = part.scores.colwise().mean().transpose();
        model.variance[k].resize(scores.components());
        for (int j = 0; j < scores.components(); ++j) {
            double v = sample_variance(part.scores.col(j));
            if (!(v >= 1e-12)) {
                model.warnings.push_back("class " + std::to_string(static_cast<int>(label)) + " coordinate " +
                                         std::to_string(j) + ": variance floored at 1e-12");
                v = 1e-12;
            }
            model.variance[k][j] = v;
        }
        model.log_prior[k] = std::log(static_cast<double>(rows.size()) / n);
    }
    return model;
}

double qda_log_ratio(const QDAModel& model, std::span<const double> x) {
    check_query(x, model.mean[1].size());
    double score[2];
    for (int k = 0; k < 2; ++k) {
        double s = model.log_prior[k];
        for (std::size_t j = 0; j < x.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double d = x[j] - model.mean[k][jj];
            s -= 0.5 * (kLogTwoPi + std::log(model.variance[k][jj]) + d * d / model.variance[k][jj]);
        }
        score[k] = s;
    }
    return score[1] - score[0];
}

Label predict_qda(const QDAModel& model, std::span<const double> x) { return sign_label(qda_log_ratio(model, x)); }

NPBayesModel fit_npbayes(const ScoreMatrix& scores) {
    NPBayesModel model;
    const auto n = static_cast<double>(scores.rows());
    for (int k = 0; k < 2; ++k) {
        const Label label = k == 1 ? Label::Positive : Label::Negative;
        const auto rows = rows_of(scores, label);
        require(!rows.empty(), ErrorKind::EmptyClass, "NB needs samples from both classes");
        require(rows.size() >= 5, ErrorKind::InsufficientData, "NB needs at least five samples per class");
        model.points[k] = scores.subset(rows).scores;
        const auto m = static_cast<double>(rows.size());
        model.bandwidth[k].resize(scores.components());
        for (int j = 0; j < scores.components(); ++j) {
            const double h = 1.06 * std::sqrt(sample_variance(model.points[k].col(j))) * std::pow(m, -0.2);
            require(h > 0.0 && std::isfinite(h), ErrorKind::DegenerateData,
                    "zero KDE bandwidth for class " + std::to_string(static_cast<int>(label)) + " coordinate " +
                        std::to_string(j));
            model.bandwidth[k][j] = h;
        }
        model.log_prior[k] = std::log(m / n);
    }
    return model;
}

double npbayes_log_ratio(const NPBayesModel& model, std::span<const double> x) {
    check_query(x, model.bandwidth[1].size());
    double score[2];
    for (int k = 0; k < 2; ++k) {
        const Eigen::MatrixXd& pts = model.points[k];
        const auto m = static_cast<double>(pts.rows());
        double s = model.log_prior[k];
        for (std::size_t j = 0; j < x.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double h = model.bandwidth[k][jj];
            const Eigen::ArrayXd z = (x[j] - pts.col(jj).array()) / h;
            s += log_sum_exp(-0.5 * z.square()) - std::log(m * h) - 0.5 * kLogTwoPi;
        }
        score[k] = s;
    }
    return score[1] - score[0];
}

Label predict_npbayes(const NPBayesModel& model, std::span<const double> x) {
    return sign_label(npbayes_log_ratio(model, x));
}

double misclassification_rate(std::span<const Label> predictions, std::span<const Label> truth) {
    require(predictions.size() == truth.size(), ErrorKind::InvalidArgument, "prediction and truth lengths differ");
    require(!truth.empty(), ErrorKind::InvalidArgument, "no predictions to score");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) wrong += predictions[i] != truth[i];
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

}  // namespace fdnn
