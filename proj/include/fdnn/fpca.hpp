#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fdnn/grid.hpp"

namespace fdnn {

/// Leading eigenpairs of a covariance operator on a sampling grid.
///
/// Column j of `eigenfunctions` holds psi_j evaluated at the grid points.
/// The columns are orthonormal under the grid quadrature, eigenvalues are
/// sorted nonincreasing and clamped at zero, and the largest-magnitude entry
/// of every eigenfunction is positive.
struct EigenSystem {
    GridPtr grid;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenfunctions;
    Eigen::VectorXd mean_function;

    int size() const noexcept { return static_cast<int>(eigenvalues.size()); }

    /// Number of eigenvalues above `relative_tol * eigenvalues[0]`.
    int numerical_rank(double relative_tol = 1e-10) const;
};

/// n x J matrix of projection scores with the matching labels.
struct ScoreMatrix {
    Eigen::MatrixXd scores;
    std::vector<Label> labels;

    ScoreMatrix() = default;
    ScoreMatrix(Eigen::MatrixXd scores, std::vector<Label> labels);

    std::size_t rows() const noexcept { return labels.size(); }
    int components() const noexcept { return static_cast<int>(scores.cols()); }

    ScoreMatrix subset(std::span<const std::size_t> rows) const;
    ScoreMatrix leading(int components) const;
};

/// Pointwise average of the samples carrying `label`.
FunctionalObservation class_mean(std::span<const FunctionalObservation> samples, Label label);

/// Pointwise average of all samples, labeled or not.
Eigen::VectorXd pooled_mean(std::span<const FunctionalObservation> samples);

/// Within-class centered covariance pooled over both classes:
/// C[p,q] = (1/n) sum_k sum_{i in class k} (X_i(p) - mean_k(p)) (X_i(q) - mean_k(q)).
Eigen::MatrixXd pooled_covariance(std::span<const FunctionalObservation> samples);

/// Solves the quadrature-weighted eigenproblem for a covariance sampled on
/// `grid` through the symmetric matrix W^{1/2} C W^{1/2}.
EigenSystem eigendecompose(const Eigen::MatrixXd& covariance, GridPtr grid, int max_components);

/// Pooled covariance followed by its eigendecomposition. Grids larger than
/// `kDirectEigenLimit` points go through the n x n Gram matrix of the weighted
/// residuals instead of the N x N covariance; that route only returns the
/// numerically nonzero eigenpairs.
EigenSystem fit_fpca(std::span<const FunctionalObservation> samples, int max_components = -1);

inline constexpr std::size_t kDirectEigenLimit = 1024;

/// Rows of uncentered scores <X_i, psi_j>, j < components.
Eigen::MatrixXd project(std::span<const FunctionalObservation> samples, const EigenSystem& eig, int components);
Eigen::VectorXd project(const FunctionalObservation& sample, const EigenSystem& eig, int components);

/// As `project`, for labeled samples.
ScoreMatrix project_scores(std::span<const FunctionalObservation> samples, const EigenSystem& eig, int components);

}  // namespace fdnn
