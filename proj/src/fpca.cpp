#include "fdnn/fpca.hpp"

#include <algorithm>
#include <cmath>

#include "fdnn/errors.hpp"

namespace fdnn {

int EigenSystem::numerical_rank(double relative_tol) const {
    if (eigenvalues.size() == 0 || eigenvalues[0] <= 0.0) return 0;
    const double cutoff = relative_tol * eigenvalues[0];
    int rank = 0;
    while (rank < eigenvalues.size() && eigenvalues[rank] > cutoff) ++rank;
    return rank;
}

ScoreMatrix::ScoreMatrix(Eigen::MatrixXd s, std::vector<Label> l) : scores(std::move(s)), labels(std::move(l)) {
    require(static_cast<std::size_t>(scores.rows()) == labels.size(), ErrorKind::InvalidArgument,
            "score rows and label count differ");
    require(scores.cols() >= 1, ErrorKind::InvalidArgument, "score matrix needs at least one component");
}

ScoreMatrix ScoreMatrix::subset(std::span<const std::size_t> rows) const {
    Eigen::MatrixXd s(static_cast<Eigen::Index>(rows.size()), scores.cols());
    std::vector<Label> l;
    l.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        require(rows[r] < labels.size(), ErrorKind::InvalidArgument, "row index out of range");
        s.row(static_cast<Eigen::Index>(r)) = scores.row(static_cast<Eigen::Index>(rows[r]));
        l.push_back(labels[rows[r]]);
    }
    return ScoreMatrix(std::move(s), std::move(l));
}

ScoreMatrix ScoreMatrix::leading(int components) const {
    require(components >= 1 && components <= scores.cols(), ErrorKind::InvalidArgument, "component count out of range");
    return ScoreMatrix(scores.leftCols(components), labels);
}

namespace {

const SamplingGrid& common_grid(std::span<const FunctionalObservation> samples) {
    require(!samples.empty(), ErrorKind::InsufficientData, "no samples");
    const SamplingGrid& grid = *samples.front().grid;
    for (const auto& s : samples)
        require(same_grid(*s.grid, grid), ErrorKind::IncompatibleGrids, "samples are on different grids");
    return grid;
}

Eigen::Map<const Eigen::VectorXd> as_vector(const std::vector<double>& v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

// Residuals from the class means, one row per sample.
Eigen::MatrixXd within_class_residuals(std::span<const FunctionalObservation> samples) {
    const SamplingGrid& grid = common_grid(samples);
    const auto n_points = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd sums[2] = {Eigen::VectorXd::Zero(n_points), Eigen::VectorXd::Zero(n_points)};
    std::size_t counts[2] = {0, 0};
    for (const auto& s : samples) {
        require(s.label.has_value(), ErrorKind::InvalidArgument, "covariance estimation needs labeled samples");
        const int k = *s.label == Label::Positive ? 1 : 0;
        sums[k] += as_vector(s.values);
        ++counts[k];
    }
    for (int k = 0; k < 2; ++k) {
        require(counts[k] == 0 || counts[k] >= 2, ErrorKind::InsufficientData,
                "every present class needs at least 2 samples");
        if (counts[k] > 0) sums[k] /= static_cast<double>(counts[k]);
    }
    Eigen::MatrixXd residuals(static_cast<Eigen::Index>(samples.size()), n_points);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int k = *samples[i].label == Label::Positive ? 1 : 0;
        residuals.row(static_cast<Eigen::Index>(i)) = (as_vector(samples[i].values) - sums[k]).transpose();
    }
    return residuals;
}

Eigen::VectorXd sqrt_weights(const SamplingGrid& grid) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(grid.size()));
    const auto weights = grid.weights();
    for (std::size_t p = 0; p < weights.size(); ++p) {
        require(weights[p] > 0.0, ErrorKind::InvalidArgument, "eigendecomposition needs strictly positive weights");
        w[static_cast<Eigen::Index>(p)] = std::sqrt(weights[p]);
    }
    return w;
}

// Eigen returns ascending eigenvalues; reverse, clamp and apply the sign rule.
EigenSystem finish(const Eigen::VectorXd& ascending_values, const Eigen::MatrixXd& ascending_vectors,
                   const Eigen::VectorXd& sqrt_w, int keep, GridPtr grid, double matrix_scale) {
    const Eigen::Index total = ascending_values.size();
    const double top = total > 0 ? ascending_values[total - 1] : 0.0;
    EigenSystem eig;
    eig.grid = std::move(grid);
    eig.eigenvalues.resize(keep);
    eig.eigenfunctions.resize(sqrt_w.size(), keep);
    for (int j = 0; j < keep; ++j) {
        const Eigen::Index src = total - 1 - j;
        double lambda = ascending_values[src];
        if (lambda < 0.0) {
            if (lambda < -1e-6 * std::max(top, 0.0) - 1e-12 * matrix_scale)
                fail(ErrorKind::NumericalFailure, "covariance has a significantly negative eigenvalue");
            lambda = 0.0;
        }
        eig.eigenvalues[j] = lambda;
        Eigen::VectorXd psi = ascending_vectors.col(src).cwiseQuotient(sqrt_w);
        Eigen::Index arg = 0;
        psi.cwiseAbs().maxCoeff(&arg);
        if (psi[arg] < 0.0) psi = -psi;
        eig.eigenfunctions.col(j) = psi;
    }
    return eig;
}

}  // namespace

FunctionalObservation class_mean(std::span<const FunctionalObservation> samples, Label label) {
    std::vector<double> sum;
    std::size_t count = 0;
    GridPtr grid;
    for (const auto& s : samples) {
        if (s.label != label) continue;
        if (!grid) {
            grid = s.grid;
            sum.assign(s.values.size(), 0.0);
        }
        require(same_grid(*s.grid, *grid), ErrorKind::IncompatibleGrids, "samples are on different grids");
        for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += s.values[p];
        ++count;
    }
    require(count > 0, ErrorKind::EmptyClass, "no samples with label " + std::to_string(static_cast<int>(label)));
    for (double& v : sum) v /= static_cast<double>(count);
    return FunctionalObservation(grid, std::move(sum), label);
}

Eigen::VectorXd pooled_mean(std::span<const FunctionalObservation> samples) {
    const SamplingGrid& grid = common_grid(samples);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
    for (const auto& s : samples) mean += as_vector(s.values);
    return mean / static_cast<double>(samples.size());
}

Eigen::MatrixXd pooled_covariance(std::span<const FunctionalObservation> samples) {
    const Eigen::MatrixXd residuals = within_class_residuals(samples);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(residuals.cols(), residuals.cols());
    cov.selfadjointView<Eigen::Lower>().rankUpdate(residuals.transpose(), 1.0 / static_cast<double>(residuals.rows()));
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
    return cov;
}

EigenSystem eigendecompose(const Eigen::MatrixXd& covariance, GridPtr grid, int max_components) {
    require(grid != nullptr, ErrorKind::InvalidArgument, "eigendecomposition needs a grid");
    const auto n_points = static_cast<Eigen::Index>(grid->size());
    require(covariance.rows() == n_points && covariance.cols() == n_points, ErrorKind::InvalidArgument,
            "covariance shape does not match the grid");
    require(max_components >= 1 && max_components <= n_points, ErrorKind::InvalidArgument,
            "max_components must lie in [1, grid size]");
    const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
    require((covariance - covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, ErrorKind::InvalidArgument,
            "covariance is not symmetric");
    const Eigen::VectorXd sw = sqrt_weights(*grid);
    const Eigen::MatrixXd weighted = sw.asDiagonal() * covariance * sw.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(weighted);
    if (solver.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "symmetric eigensolver did not converge");
    return finish(solver.eigenvalues(), solver.eigenvectors(), sw, max_components, std::move(grid),
                  weighted.cwiseAbs().maxCoeff());
}

EigenSystem fit_fpca(std::span<const FunctionalObservation> samples, int max_components) {
    const SamplingGrid& grid = common_grid(samples);
    const GridPtr grid_ptr = samples.front().grid;
    const auto n = static_cast<int>(samples.size());
    const auto n_points = static_cast<int>(grid.size());
    const int cap = std::min(n, n_points);
    const int keep = max_components < 0 ? cap : std::min(max_components, cap);
    require(keep >= 1, ErrorKind::InvalidArgument, "max_components must be positive");

    EigenSystem eig;
    if (grid.size() <= kDirectEigenLimit) {
        eig = eigendecompose(pooled_covariance(samples), grid_ptr, keep);
    } else {
        const Eigen::VectorXd sw = sqrt_weights(grid);
        const Eigen::MatrixXd weighted = within_class_residuals(samples) * sw.asDiagonal();
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(weighted, 1.0 / n);
        gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        if (solver.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "symmetric eigensolver did not converge");
        const Eigen::VectorXd& values = solver.eigenvalues();
        const double top = values[n - 1];
        int rank = 0;
        while (rank < keep && values[n - 1 - rank] > 1e-10 * top && values[n - 1 - rank] > 0.0) ++rank;
        require(rank >= 1, ErrorKind::DegenerateData, "training samples have no within-class variation");
        Eigen::VectorXd ascending(rank);
        Eigen::MatrixXd vectors(n_points, rank);
        for (int j = 0; j < rank; ++j) {
            const Eigen::Index src = n - rank + j;
            ascending[j] = values[src];
            vectors.col(j) = weighted.transpose() * solver.eigenvectors().col(src) / std::sqrt(n * values[src]);
        }
        eig = finish(ascending, vectors, sw, rank, grid_ptr, top);
    }
    eig.mean_function = pooled_mean(samples);
    return eig;
}

Eigen::MatrixXd project(std::span<const FunctionalObservation> samples, const EigenSystem& eig, int components) {
    require(components >= 1 && components <= eig.size(), ErrorKind::InvalidArgument,
            "component count " + std::to_string(components) + " outside [1, " + std::to_string(eig.size()) + "]");
    const auto weights = eig.grid->weights();
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
    const Eigen::MatrixXd weighted_basis = w.asDiagonal() * eig.eigenfunctions.leftCols(components);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(samples.size()), components);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        require(same_grid(*samples[i].grid, *eig.grid), ErrorKind::IncompatibleGrids,
                "sample is not on the eigensystem grid");
        out.row(static_cast<Eigen::Index>(i)) = (weighted_basis.transpose() * as_vector(samples[i].values)).transpose();
    }
    return out;
}

Eigen::VectorXd project(const FunctionalObservation& sample, const EigenSystem& eig, int components) {
    return project(std::span<const FunctionalObservation>(&sample, 1), eig, components).row(0).transpose();
}

ScoreMatrix project_scores(std::span<const FunctionalObservation> samples, const EigenSystem& eig, int components) {
    std::vector<Label> labels;
    labels.reserve(samples.size());
    for (const auto& s : samples) {
        require(s.label.has_value(), ErrorKind::InvalidArgument, "project_scores needs labeled samples");
        labels.push_back(*s.label);
    }
    return ScoreMatrix(project(samples, eig, components), std::move(labels));
}

}  // namespace fdnn
