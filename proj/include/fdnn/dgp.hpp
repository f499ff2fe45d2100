#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fdnn/grid.hpp"

namespace fdnn {

enum class LawKind { Normal, StudentT, NoncentralT };

/// Distribution of one coefficient under one class.
///
/// Normal: `location` is the mean and `scale` the standard deviation.
/// StudentT: central t with `dof` degrees of freedom (location 0, scale 1).
/// NoncentralT: (Z + location) / sqrt(chi2_dof / dof), i.e. `location` is the
/// noncentrality parameter.
struct CoordinateLaw {
    LawKind kind = LawKind::Normal;
    double location = 0.0;
    double scale = 1.0;
    double dof = 0.0;

    static CoordinateLaw normal(double mean, double standard_deviation);
    static CoordinateLaw student_t(double dof);
    static CoordinateLaw noncentral_t(double dof, double noncentrality);

    double log_density(double x) const;
    double sample(std::mt19937_64& rng) const;
    std::optional<double> mean() const;
    std::optional<double> variance() const;
    void validate() const;
};

/// Multivariate Student's t block t_nu(mean, scale) over `mean.size()`
/// consecutive coefficients.
struct BlockTLaw {
    double dof = 5.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd scale;

    int size() const noexcept { return static_cast<int>(mean.size()); }
    double log_density(std::span<const double> x) const;
    void sample(std::mt19937_64& rng, std::span<double> out) const;
    void validate() const;
};

using IndependentLaw = std::vector<CoordinateLaw>;
using BlockLaw = std::vector<BlockTLaw>;
using ClassLaw = std::variant<IndependentLaw, BlockLaw>;

using BasisFunction = std::function<double(std::span<const double>)>;

/// A generative process X = sum_j xi_j psi_j with class-conditional laws for
/// xi and equal class priors.
struct DGPSpec {
    int id = 0;
    int dim = 1;
    std::vector<BasisFunction> basis;
    ClassLaw positive;
    ClassLaw negative;

    std::size_t coefficient_count() const noexcept { return basis.size(); }
    void validate() const;
};

/// How the diagonal covariance entries listed for the Gaussian simulation
/// designs are turned into coefficient spreads. StandardDeviation (the
/// default) uses them as standard deviations; Variance uses them as variances.
enum class DiagonalReading { StandardDeviation, Variance };

/// Simulation designs 1-4 plus design 5, a block-dependent multivariate t
/// process (p = 2, nu = 5) on four sine basis functions.
DGPSpec make_dgp(int id, DiagonalReading reading = DiagonalReading::StandardDeviation);

/// Design 5 with caller-chosen blocks. Both classes must cover the same
/// coefficients with blocks of equal sizes.
DGPSpec make_block_t_dgp(BlockLaw positive, BlockLaw negative);

/// Gaussian design with independent coefficients; handy for small oracle checks.
DGPSpec make_gaussian_dgp(std::vector<BasisFunction> basis, std::vector<double> positive_means,
                          std::vector<double> positive_sds, std::vector<double> negative_means,
                          std::vector<double> negative_sds);

enum class DrawMode { Random, Location };

struct LabeledCoefficients {
    Eigen::MatrixXd coefficients;  // n x K
    std::vector<Label> labels;
};

/// Labels uniform on {-1, +1}, then coefficients from the class law.
/// DrawMode::Location replaces every coefficient with its law's location.
LabeledCoefficients draw_coefficients(const DGPSpec& spec, std::size_t n, std::uint64_t seed,
                                      DrawMode mode = DrawMode::Random);

struct SimulatedData {
    FunctionalDataset data;
    LabeledCoefficients truth;
};

/// Curves sampled exactly on `grid` (no observation noise) together with the
/// coefficients that produced them.
SimulatedData generate(const DGPSpec& spec, std::size_t n, GridPtr grid, std::uint64_t seed,
                       DrawMode mode = DrawMode::Random);

/// Basis functions evaluated at the grid points, N x K.
Eigen::MatrixXd basis_matrix(const DGPSpec& spec, const SamplingGrid& grid);

/// log(h_1(xi) / h_{-1}(xi)).
double oracle_log_ratio(const DGPSpec& spec, std::span<const double> xi);

/// +1 when the log ratio is >= 0.
Label bayes_classify(const DGPSpec& spec, std::span<const double> xi);

std::vector<Label> bayes_classify_rows(const DGPSpec& spec, const Eigen::MatrixXd& coefficients);

struct RiskEstimate {
    double rate = 0.0;
    double se = 0.0;
};

/// Monte Carlo misclassification rate of the Bayes rule on m fresh draws,
/// with binomial standard error.
RiskEstimate bayes_risk(const DGPSpec& spec, std::size_t m, std::uint64_t seed);

struct ExcessRisk {
    double classifier_risk = 0.0;
    double bayes_risk = 0.0;
    double excess = 0.0;
    /// Standard error of the paired per-draw loss difference.
    double se = 0.0;
};

/// Paired estimator: both rules are scored on the same draws.
ExcessRisk excess_risk(std::span<const Label> predictions, std::span<const Label> bayes_predictions,
                       std::span<const Label> truth);

using Predictor = std::function<std::vector<Label>(const FunctionalDataset&)>;

/// Generates m observations on `grid`, scores `predict` and the Bayes rule on
/// them, and returns the paired excess risk.
ExcessRisk excess_risk(const Predictor& predict, const DGPSpec& spec, GridPtr grid, std::size_t m,
                       std::uint64_t seed);

}  // namespace fdnn
