#include "fdnn/dgp.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/distributions/non_central_t.hpp>

#include "fdnn/errors.hpp"

namespace fdnn {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double central_t_log_density(double x, double dof) {
    return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) - 0.5 * std::log(dof * std::numbers::pi) -
           0.5 * (dof + 1.0) * std::log1p(x * x / dof);
}

double chi_square_ratio(std::mt19937_64& rng, double dof) {
    std::chi_squared_distribution<double> chi(dof);
    return std::sqrt(chi(rng) / dof);
}

}  // namespace

CoordinateLaw CoordinateLaw::normal(double mean, double standard_deviation) {
    return {LawKind::Normal, mean, standard_deviation, 0.0};
}

CoordinateLaw CoordinateLaw::student_t(double dof) { return {LawKind::StudentT, 0.0, 1.0, dof}; }

CoordinateLaw CoordinateLaw::noncentral_t(double dof, double noncentrality) {
    return {LawKind::NoncentralT, noncentrality, 1.0, dof};
}

void CoordinateLaw::validate() const {
    require(std::isfinite(location), ErrorKind::InvalidArgument, "law location must be finite");
    if (kind == LawKind::Normal) {
        require(scale > 0.0 && std::isfinite(scale), ErrorKind::InvalidArgument, "normal spread must be > 0");
    } else {
        require(dof >= 1.0 && std::isfinite(dof), ErrorKind::InvalidArgument, "t degrees of freedom must be >= 1");
    }
}

double CoordinateLaw::log_density(double x) const {
    switch (kind) {
        case LawKind::Normal: {
            const double z = (x - location) / scale;
            return -0.5 * kLogTwoPi - std::log(scale) - 0.5 * z * z;
        }
        case LawKind::StudentT:
            return central_t_log_density(x, dof);
        case LawKind::NoncentralT: {
            if (location == 0.0) return central_t_log_density(x, dof);
            const boost::math::non_central_t_distribution<double> dist(dof, location);
            return std::log(boost::math::pdf(dist, x));
        }
    }
    return 0.0;
}

double CoordinateLaw::sample(std::mt19937_64& rng) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    switch (kind) {
        case LawKind::Normal:
            return location + scale * gauss(rng);
        case LawKind::StudentT: {
            const double z = gauss(rng);
            return z / chi_square_ratio(rng, dof);
        }
        case LawKind::NoncentralT: {
            const double z = gauss(rng) + location;
            return z / chi_square_ratio(rng, dof);
        }
    }
    return 0.0;
}

std::optional<double> CoordinateLaw::mean() const {
    switch (kind) {
        case LawKind::Normal: return location;
        case LawKind::StudentT: return dof > 1.0 ? std::optional<double>(0.0) : std::nullopt;
        case LawKind::NoncentralT:
            if (dof <= 1.0) return std::nullopt;
            return location * std::sqrt(0.5 * dof) * std::exp(std::lgamma(0.5 * (dof - 1.0)) - std::lgamma(0.5 * dof));
    }
    return std::nullopt;
}

std::optional<double> CoordinateLaw::variance() const {
    switch (kind) {
        case LawKind::Normal: return scale * scale;
        case LawKind::StudentT: return dof > 2.0 ? std::optional<double>(dof / (dof - 2.0)) : std::nullopt;
        case LawKind::NoncentralT: {
            if (dof <= 2.0) return std::nullopt;
            const double m = *mean();
            return dof * (1.0 + location * location) / (dof - 2.0) - m * m;
        }
    }
    return std::nullopt;
}

void BlockTLaw::validate() const {
    require(size() >= 1, ErrorKind::InvalidArgument, "t block needs at least one coordinate");
    require(dof >= 1.0 && std::isfinite(dof), ErrorKind::InvalidArgument, "t degrees of freedom must be >= 1");
    require(scale.rows() == size() && scale.cols() == size(), ErrorKind::InvalidArgument, "t block scale shape mismatch");
    require((scale - scale.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, scale.cwiseAbs().maxCoeff()),
            ErrorKind::InvalidArgument, "t block scale must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(scale);
    require(llt.info() == Eigen::Success, ErrorKind::InvalidArgument, "t block scale must be positive definite");
}

double BlockTLaw::log_density(std::span<const double> x) const {
    require(static_cast<int>(x.size()) == size(), ErrorKind::InvalidArgument, "t block input length mismatch");
    const Eigen::LLT<Eigen::MatrixXd> llt(scale);
    const Eigen::VectorXd centered = Eigen::Map<const Eigen::VectorXd>(x.data(), size()) - mean;
    const Eigen::VectorXd z = llt.matrixL().solve(centered);
    const double p = size();
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return std::lgamma(0.5 * (dof + p)) - std::lgamma(0.5 * dof) - 0.5 * p * std::log(dof * std::numbers::pi) -
           0.5 * log_det - 0.5 * (dof + p) * std::log1p(z.squaredNorm() / dof);
}

void BlockTLaw::sample(std::mt19937_64& rng, std::span<double> out) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd z(size());
    for (int i = 0; i < size(); ++i) z[i] = gauss(rng);
    const double w = chi_square_ratio(rng, dof);
    const Eigen::VectorXd x = mean + Eigen::LLT<Eigen::MatrixXd>(scale).matrixL() * z / w;
    for (int i = 0; i < size(); ++i) out[static_cast<std::size_t>(i)] = x[i];
}

namespace {

std::size_t law_size(const ClassLaw& law) {
    if (const auto* independent = std::get_if<IndependentLaw>(&law)) return independent->size();
    std::size_t total = 0;
    for (const auto& block : std::get<BlockLaw>(law)) total += static_cast<std::size_t>(block.size());
    return total;
}

void validate_law(const ClassLaw& law) {
    if (const auto* independent = std::get_if<IndependentLaw>(&law)) {
        for (const auto& c : *independent) c.validate();
    } else {
        for (const auto& b : std::get<BlockLaw>(law)) b.validate();
    }
}

bool all_normal(const ClassLaw& law) {
    const auto* independent = std::get_if<IndependentLaw>(&law);
    if (!independent) return false;
    for (const auto& c : *independent)
        if (c.kind != LawKind::Normal) return false;
    return true;
}

void draw_from(const ClassLaw& law, std::mt19937_64& rng, DrawMode mode, std::span<double> out) {
    if (const auto* independent = std::get_if<IndependentLaw>(&law)) {
        for (std::size_t j = 0; j < independent->size(); ++j)
            out[j] = mode == DrawMode::Location ? (*independent)[j].location : (*independent)[j].sample(rng);
        return;
    }
    std::size_t offset = 0;
    for (const auto& block : std::get<BlockLaw>(law)) {
        const auto width = static_cast<std::size_t>(block.size());
        if (mode == DrawMode::Location) {
            for (std::size_t i = 0; i < width; ++i) out[offset + i] = block.mean[static_cast<Eigen::Index>(i)];
        } else {
            block.sample(rng, out.subspan(offset, width));
        }
        offset += width;
    }
}

double log_density(const ClassLaw& law, std::span<const double> xi) {
    double total = 0.0;
    if (const auto* independent = std::get_if<IndependentLaw>(&law)) {
        for (std::size_t j = 0; j < independent->size(); ++j) total += (*independent)[j].log_density(xi[j]);
        return total;
    }
    std::size_t offset = 0;
    for (const auto& block : std::get<BlockLaw>(law)) {
        total += block.log_density(xi.subspan(offset, static_cast<std::size_t>(block.size())));
        offset += static_cast<std::size_t>(block.size());
    }
    return total;
}

// Sum of per-coordinate quadratics a xi^2 + b xi + c with lambda = variance.
double gaussian_log_ratio(const IndependentLaw& pos, const IndependentLaw& neg, std::span<const double> xi) {
    double total = 0.0;
    for (std::size_t j = 0; j < pos.size(); ++j) {
        const double lp = pos[j].scale * pos[j].scale;
        const double ln = neg[j].scale * neg[j].scale;
        const double mp = pos[j].location;
        const double mn = neg[j].location;
        const double a = 1.0 / (2.0 * ln) - 1.0 / (2.0 * lp);
        const double b = mp / lp - mn / ln;
        const double c = mn * mn / (2.0 * ln) - mp * mp / (2.0 * lp) + 0.5 * std::log(ln / lp);
        total += (a * xi[j] + b) * xi[j] + c;
    }
    return total;
}

// Block-wise multivariate t ratio; normalizing constants cancel because both
// classes share nu and p in every block.
double block_t_log_ratio(const BlockLaw& pos, const BlockLaw& neg, std::span<const double> xi) {
    double total = 0.0;
    std::size_t offset = 0;
    for (std::size_t b = 0; b < pos.size(); ++b) {
        const int p = pos[b].size();
        const double nu = pos[b].dof;
        const Eigen::Map<const Eigen::VectorXd> zeta(xi.data() + offset, p);
        const Eigen::LLT<Eigen::MatrixXd> llt_pos(pos[b].scale);
        const Eigen::LLT<Eigen::MatrixXd> llt_neg(neg[b].scale);
        const double delta_pos = llt_pos.matrixL().solve(zeta - pos[b].mean).squaredNorm();
        const double delta_neg = llt_neg.matrixL().solve(zeta - neg[b].mean).squaredNorm();
        const double log_det_pos = 2.0 * llt_pos.matrixL().toDenseMatrix().diagonal().array().log().sum();
        const double log_det_neg = 2.0 * llt_neg.matrixL().toDenseMatrix().diagonal().array().log().sum();
        total += 0.5 * (log_det_neg - log_det_pos) +
                 0.5 * (nu + p) * (std::log1p(delta_neg / nu) - std::log1p(delta_pos / nu));
        offset += static_cast<std::size_t>(p);
    }
    return total;
}

const std::vector<BasisFunction>& one_dimensional_basis() {
    static const std::vector<BasisFunction> basis = {
        [](std::span<const double> s) { return std::log(s[0] + 2.0); },
        [](std::span<const double> s) { return s[0]; },
        [](std::span<const double> s) { return s[0] * s[0] * s[0]; },
    };
    return basis;
}

const std::vector<BasisFunction>& two_dimensional_basis() {
    static const std::vector<BasisFunction> basis = {
        [](std::span<const double> s) { return s[0] * s[1]; },
        [](std::span<const double> s) { return s[0] * s[1] * s[1]; },
        [](std::span<const double> s) { return s[0] * s[0] * s[1]; },
        [](std::span<const double> s) { return s[0] * s[0] * s[1] * s[1]; },
    };
    return basis;
}

std::vector<BasisFunction> sine_basis(int count) {
    std::vector<BasisFunction> basis;
    for (int j = 1; j <= count; ++j)
        basis.emplace_back([j](std::span<const double> s) {
            return std::numbers::sqrt2 * std::sin(j * std::numbers::pi * s[0]);
        });
    return basis;
}

IndependentLaw normals(const std::vector<double>& means, const std::vector<double>& diagonal, DiagonalReading reading) {
    IndependentLaw law;
    for (std::size_t j = 0; j < means.size(); ++j) {
        const double sd = reading == DiagonalReading::Variance ? std::sqrt(diagonal[j]) : diagonal[j];
        law.push_back(CoordinateLaw::normal(means[j], sd));
    }
    return law;
}

BlockTLaw t_block(double m0, double m1, double s00, double s01, double s11) {
    BlockTLaw block;
    block.dof = 5.0;
    block.mean = Eigen::Vector2d(m0, m1);
    block.scale.resize(2, 2);
    block.scale << s00, s01, s01, s11;
    return block;
}

}  // namespace

void DGPSpec::validate() const {
    require(dim >= 1, ErrorKind::InvalidArgument, "design dimension must be >= 1");
    require(!basis.empty(), ErrorKind::InvalidArgument, "design needs at least one basis function");
    require(law_size(positive) == basis.size() && law_size(negative) == basis.size(), ErrorKind::InvalidArgument,
            "coefficient law count does not match the basis");
    validate_law(positive);
    validate_law(negative);
    if (const auto* pos = std::get_if<BlockLaw>(&positive)) {
        const auto* neg = std::get_if<BlockLaw>(&negative);
        require(neg != nullptr && neg->size() == pos->size(), ErrorKind::InvalidArgument,
                "both classes need the same block layout");
        for (std::size_t b = 0; b < pos->size(); ++b)
            require((*pos)[b].size() == (*neg)[b].size() && (*pos)[b].dof == (*neg)[b].dof,
                    ErrorKind::InvalidArgument, "matching t blocks need equal size and degrees of freedom");
    }
}

DGPSpec make_dgp(int id, DiagonalReading reading) {
    DGPSpec spec;
    spec.id = id;
    switch (id) {
        case 1:
            spec.dim = 1;
            spec.basis = one_dimensional_basis();
            spec.positive = normals({-1.0, 2.0, -3.0}, {3.0 / 5.0, 2.0 / 5.0, 1.0 / 5.0}, reading);
            spec.negative = normals({-0.5, 2.5, -2.5}, {9.0 / 10.0, 1.0 / 2.0, 3.0 / 10.0}, reading);
            break;
        case 2:
            spec.dim = 1;
            spec.basis = one_dimensional_basis();
            spec.positive = normals({-1.0, 2.0, -3.0}, {3.0, 2.0, 1.0}, reading);
            spec.negative = IndependentLaw{CoordinateLaw::student_t(5.0), CoordinateLaw::student_t(3.0),
                                           CoordinateLaw::student_t(1.0)};
            break;
        case 3:
            spec.dim = 2;
            spec.basis = two_dimensional_basis();
            spec.positive = normals({8.0, -6.0, 4.0, -2.0}, {8.0, 6.0, 4.0, 2.0}, reading);
            spec.negative = normals({-3.5, -2.5, 1.5, -0.5}, {4.5, 3.5, 2.5, 1.5}, reading);
            break;
        case 4: {
            spec.dim = 2;
            spec.basis = two_dimensional_basis();
            IndependentLaw pos;
            IndependentLaw neg;
            const double noncentrality[] = {2.0, 1.5, 1.0, 0.5};
            for (int j = 1; j <= 4; ++j) {
                pos.push_back(CoordinateLaw::noncentral_t(2.0 * j, 0.0));
                neg.push_back(CoordinateLaw::noncentral_t(2.0 * j + 1.0, noncentrality[j - 1]));
            }
            spec.positive = std::move(pos);
            spec.negative = std::move(neg);
            break;
        }
        case 5:
            // Block 1 differs in location, block 2 in scale.
            return make_block_t_dgp({t_block(1.0, 0.5, 1.0, 0.3, 1.0), t_block(0.0, 0.0, 1.0, 0.0, 1.0)},
                                    {t_block(-0.5, -0.5, 1.0, 0.3, 1.0), t_block(0.0, 0.0, 2.5, -0.8, 1.5)});
        default:
            fail(ErrorKind::InvalidArgument, "unknown design id " + std::to_string(id) + " (expected 1-5)");
    }
    spec.validate();
    return spec;
}

DGPSpec make_block_t_dgp(BlockLaw positive, BlockLaw negative) {
    DGPSpec spec;
    spec.id = 5;
    spec.dim = 1;
    std::size_t count = 0;
    for (const auto& b : positive) count += static_cast<std::size_t>(b.size());
    spec.basis = sine_basis(static_cast<int>(count));
    spec.positive = std::move(positive);
    spec.negative = std::move(negative);
    spec.validate();
    return spec;
}

DGPSpec make_gaussian_dgp(std::vector<BasisFunction> basis, std::vector<double> positive_means,
                          std::vector<double> positive_sds, std::vector<double> negative_means,
                          std::vector<double> negative_sds) {
    require(positive_means.size() == positive_sds.size() && negative_means.size() == negative_sds.size(),
            ErrorKind::InvalidArgument, "mean and spread lists differ in length");
    DGPSpec spec;
    spec.id = 0;
    spec.dim = 1;
    spec.basis = std::move(basis);
    spec.positive = normals(positive_means, positive_sds, DiagonalReading::StandardDeviation);
    spec.negative = normals(negative_means, negative_sds, DiagonalReading::StandardDeviation);
    spec.validate();
    return spec;
}

LabeledCoefficients draw_coefficients(const DGPSpec& spec, std::size_t n, std::uint64_t seed, DrawMode mode) {
    require(n >= 1, ErrorKind::InvalidArgument, "need at least one draw");
    const std::size_t k = spec.coefficient_count();
    LabeledCoefficients out;
    out.coefficients.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    out.labels.reserve(n);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::vector<double> row(k);
    for (std::size_t i = 0; i < n; ++i) {
        const Label label = coin(rng) ? Label::Positive : Label::Negative;
        draw_from(label == Label::Positive ? spec.positive : spec.negative, rng, mode, row);
        for (std::size_t j = 0; j < k; ++j) out.coefficients(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        out.labels.push_back(label);
    }
    return out;
}

Eigen::MatrixXd basis_matrix(const DGPSpec& spec, const SamplingGrid& grid) {
    require(grid.dim() == spec.dim, ErrorKind::InvalidArgument,
            "grid dimension " + std::to_string(grid.dim()) + " does not match design dimension " + std::to_string(spec.dim));
    Eigen::MatrixXd psi(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(spec.basis.size()));
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const auto s = grid.point(p);
        for (std::size_t j = 0; j < spec.basis.size(); ++j)
            psi(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j)) = spec.basis[j](s);
    }
    return psi;
}

SimulatedData generate(const DGPSpec& spec, std::size_t n, GridPtr grid, std::uint64_t seed, DrawMode mode) {
    require(grid != nullptr, ErrorKind::InvalidArgument, "generate needs a grid");
    const Eigen::MatrixXd psi = basis_matrix(spec, *grid);
    SimulatedData out;
    out.truth = draw_coefficients(spec, n, seed, mode);
    const Eigen::MatrixXd curves = out.truth.coefficients * psi.transpose();
    out.data.grid = grid;
    out.data.observations.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> values(grid->size());
        Eigen::Map<Eigen::RowVectorXd>(values.data(), static_cast<Eigen::Index>(values.size())) =
            curves.row(static_cast<Eigen::Index>(i));
        out.data.observations.emplace_back(grid, std::move(values), out.truth.labels[i]);
    }
    return out;
}

double oracle_log_ratio(const DGPSpec& spec, std::span<const double> xi) {
    require(xi.size() == spec.coefficient_count(), ErrorKind::InvalidArgument,
            "coefficient vector length does not match the design");
    if (all_normal(spec.positive) && all_normal(spec.negative))
        return gaussian_log_ratio(std::get<IndependentLaw>(spec.positive), std::get<IndependentLaw>(spec.negative), xi);
    if (std::holds_alternative<BlockLaw>(spec.positive))
        return block_t_log_ratio(std::get<BlockLaw>(spec.positive), std::get<BlockLaw>(spec.negative), xi);
    return log_density(spec.positive, xi) - log_density(spec.negative, xi);
}

Label bayes_classify(const DGPSpec& spec, std::span<const double> xi) { return sign_label(oracle_log_ratio(spec, xi)); }

std::vector<Label> bayes_classify_rows(const DGPSpec& spec, const Eigen::MatrixXd& coefficients) {
    std::vector<Label> out;
    out.reserve(static_cast<std::size_t>(coefficients.rows()));
    std::vector<double> row(static_cast<std::size_t>(coefficients.cols()));
    for (Eigen::Index i = 0; i < coefficients.rows(); ++i) {
        for (Eigen::Index j = 0; j < coefficients.cols(); ++j) row[static_cast<std::size_t>(j)] = coefficients(i, j);
        out.push_back(bayes_classify(spec, row));
    }
    return out;
}

RiskEstimate bayes_risk(const DGPSpec& spec, std::size_t m, std::uint64_t seed) {
    require(m >= 1000, ErrorKind::InvalidArgument, "Bayes risk estimation needs at least 1000 draws");
    const LabeledCoefficients draws = draw_coefficients(spec, m, seed);
    const std::vector<Label> predicted = bayes_classify_rows(spec, draws.coefficients);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < m; ++i) errors += predicted[i] != draws.labels[i];
    const double rate = static_cast<double>(errors) / static_cast<double>(m);
    return {rate, std::sqrt(rate * (1.0 - rate) / static_cast<double>(m))};
}

ExcessRisk excess_risk(std::span<const Label> predictions, std::span<const Label> bayes_predictions,
                       std::span<const Label> truth) {
    require(predictions.size() == truth.size() && bayes_predictions.size() == truth.size(), ErrorKind::InvalidArgument,
            "prediction and truth lengths differ");
    require(!truth.empty(), ErrorKind::InvalidArgument, "no draws");
    const auto m = static_cast<double>(truth.size());
    double sum_diff = 0.0;
    double sum_sq = 0.0;
    std::size_t classifier_errors = 0;
    std::size_t bayes_errors = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int c = predictions[i] != truth[i];
        const int b = bayes_predictions[i] != truth[i];
        classifier_errors += static_cast<std::size_t>(c);
        bayes_errors += static_cast<std::size_t>(b);
        const double d = c - b;
        sum_diff += d;
        sum_sq += d * d;
    }
    ExcessRisk out;
    out.classifier_risk = static_cast<double>(classifier_errors) / m;
    out.bayes_risk = static_cast<double>(bayes_errors) / m;
    out.excess = sum_diff / m;
    const double var = truth.size() > 1 ? (sum_sq - m * out.excess * out.excess) / (m - 1.0) : 0.0;
    out.se = std::sqrt(std::max(var, 0.0) / m);
    return out;
}

ExcessRisk excess_risk(const Predictor& predict, const DGPSpec& spec, GridPtr grid, std::size_t m, std::uint64_t seed) {
    const SimulatedData sim = generate(spec, m, std::move(grid), seed);
    const std::vector<Label> predictions = predict(sim.data);
    const std::vector<Label> bayes = bayes_classify_rows(spec, sim.truth.coefficients);
    return excess_risk(predictions, bayes, sim.truth.labels);
}

}  // namespace fdnn
