#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fdnn/dgp.hpp"
#include "fdnn/errors.hpp"
#include "fdnn/fpca.hpp"
#include "helpers.hpp"

using namespace fdnn;
using testing_util::curve;
using testing_util::midpoint_grid;

namespace {

std::vector<FunctionalObservation> random_samples(const GridPtr& grid, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<FunctionalObservation> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = z(rng), b = z(rng), c = z(rng), d = z(rng);
        out.push_back(curve(
            grid, [&](double s) { return a + b * std::sin(3 * s) + c * s * s + d * std::exp(-5 * s) + 0.1 * z(rng); },
            i % 3 == 0 ? Label::Negative : Label::Positive));
    }
    return out;
}

double quadrature_trace(const Eigen::MatrixXd& c, const SamplingGrid& grid) {
    double t = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) t += grid.weights()[p] * c(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    return t;
}

FunctionalObservation column(const EigenSystem& eig, int j) {
    const Eigen::VectorXd v = eig.eigenfunctions.col(j);
    return {eig.grid, std::vector<double>(v.data(), v.data() + v.size())};
}

}  // namespace

TEST(ClassMean, DuplicatesAndAverages) {
    const auto g = midpoint_grid(5);
    const auto c = curve(g, [](double s) { return std::sin(s); }, Label::Positive);
    const std::vector<FunctionalObservation> dup{c, c};
    EXPECT_EQ(class_mean(dup, Label::Positive).values, c.values);

    const std::vector<FunctionalObservation> pair{curve(g, [](double) { return 0.0; }, Label::Negative),
                                                  curve(g, [](double) { return 2.0; }, Label::Negative)};
    for (double v : class_mean(pair, Label::Negative).values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(ClassMean, EmptyClass) {
    const auto g = midpoint_grid(5);
    const std::vector<FunctionalObservation> only_pos{curve(g, [](double s) { return s; }, Label::Positive)};
    try {
        class_mean(only_pos, Label::Negative);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyClass);
    }
}

TEST(ClassMean, DesignOneMeanAtMidpoint) {
    // s = 0.5 is a grid point of the 5-point midpoint grid
    const auto g = midpoint_grid(5);
    const DGPSpec spec = make_dgp(1);
    const auto sim = generate(spec, 10000, g, 11);
    const auto mean = class_mean(sim.data.observations, Label::Positive);
    std::size_t n_pos = 0;
    for (Label l : sim.data.labels()) n_pos += l == Label::Positive;
    const auto& laws = std::get<IndependentLaw>(spec.positive);
    const double psi[3] = {std::log(2.5), 0.5, 0.125};
    double var = 0.0;
    for (int j = 0; j < 3; ++j) var += psi[j] * psi[j] * *laws[static_cast<std::size_t>(j)].variance();
    const double se = std::sqrt(var / static_cast<double>(n_pos));
    const double expected = -1.0 * std::log(2.5) + 2.0 * 0.5 - 3.0 * 0.125;
    EXPECT_NEAR(mean.values[2], expected, 3.0 * se);
}

TEST(PooledCovariance, IdenticalWithinClassIsZero) {
    const auto g = midpoint_grid(6);
    const auto a = curve(g, [](double s) { return s; }, Label::Positive);
    const auto b = curve(g, [](double s) { return 1 - s * s; }, Label::Negative);
    const std::vector<FunctionalObservation> samples{a, a, a, b, b};
    EXPECT_EQ(pooled_covariance(samples).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PooledCovariance, TwoSampleOuterProduct) {
    const auto g = midpoint_grid(7);
    const auto m = curve(g, [](double s) { return 1 + s; });
    const auto r = curve(g, [](double s) { return std::cos(4 * s); });
    std::vector<double> up, down;
    for (std::size_t p = 0; p < g->size(); ++p) {
        up.push_back(m.values[p] + r.values[p]);
        down.push_back(m.values[p] - r.values[p]);
    }
    const std::vector<FunctionalObservation> samples{{g, up, Label::Positive}, {g, down, Label::Positive}};
    const Eigen::MatrixXd c = pooled_covariance(samples);
    for (std::size_t p = 0; p < g->size(); ++p)
        for (std::size_t q = 0; q < g->size(); ++q)
            EXPECT_NEAR(c(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)), r.values[p] * r.values[q], 1e-14);
}

TEST(PooledCovariance, ExactlySymmetricAndOrderInvariant) {
    const auto g = midpoint_grid(20);
    auto samples = random_samples(g, 30, 5);
    const Eigen::MatrixXd c = pooled_covariance(samples);
    EXPECT_TRUE(c == c.transpose());
    std::mt19937_64 rng(8);
    std::shuffle(samples.begin(), samples.end(), rng);
    EXPECT_LE((pooled_covariance(samples) - c).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PooledCovariance, NeedsTwoPerClass) {
    const auto g = midpoint_grid(4);
    const std::vector<FunctionalObservation> samples{curve(g, [](double s) { return s; }, Label::Positive),
                                                     curve(g, [](double s) { return 2 * s; }, Label::Positive),
                                                     curve(g, [](double s) { return -s; }, Label::Negative)};
    try {
        pooled_covariance(samples);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
}

TEST(Eigendecompose, IsotropicOperator) {
    const int n = 20;
    const auto g = midpoint_grid(n);
    const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n) * static_cast<double>(n);
    const EigenSystem eig = eigendecompose(c, g, n);
    ASSERT_EQ(eig.size(), n);
    for (int j = 0; j < n; ++j) EXPECT_NEAR(eig.eigenvalues[j], 1.0, 1e-12);
    EXPECT_NEAR(eig.eigenvalues.sum(), quadrature_trace(c, *g), 1e-10);
}

TEST(Eigendecompose, RankOneRecovery) {
    const auto g = midpoint_grid(40);
    const auto phi = curve(g, [](double s) { return std::exp(s) - 0.3 * s; });
    const Eigen::Map<const Eigen::VectorXd> v(phi.values.data(), static_cast<Eigen::Index>(phi.values.size()));
    const EigenSystem eig = eigendecompose(v * v.transpose(), g, 3);
    const double norm = std::sqrt(inner_product(phi, phi));
    const Eigen::VectorXd expected = v / norm;
    const Eigen::VectorXd got = eig.eigenfunctions.col(0);
    EXPECT_LE(std::min((got - expected).cwiseAbs().maxCoeff(), (got + expected).cwiseAbs().maxCoeff()), 1e-8);
    EXPECT_NEAR(eig.eigenvalues[0], norm * norm, 1e-10);
    EXPECT_LE(eig.eigenvalues[1], 1e-10);
}

TEST(Eigendecompose, SignConvention) {
    const auto g = midpoint_grid(30);
    const EigenSystem eig = fit_fpca(random_samples(g, 25, 2));
    for (int j = 0; j < eig.size(); ++j) {
        Eigen::Index at = 0;
        eig.eigenfunctions.col(j).cwiseAbs().maxCoeff(&at);
        EXPECT_GT(eig.eigenfunctions(at, j), 0.0);
    }
}

TEST(Eigendecompose, DesignOnePopulationSpectrum) {
    // Exact operator on the non-orthogonal basis: eigenvalues of
    // V^{1/2} G V^{1/2} with G the L2 Gram matrix of {log(s+2), s, s^3}.
    const DGPSpec spec = make_dgp(1);
    const auto& laws = std::get<IndependentLaw>(spec.positive);
    const std::function<double(double)> psi[3] = {[](double s) { return std::log(s + 2); }, [](double s) { return s; },
                                                  [](double s) { return s * s * s; }};
    Eigen::Matrix3d gram;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            gram(i, j) = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                [&](double s) { return psi[i](s) * psi[j](s); }, 0.0, 1.0);
    Eigen::Vector3d sd;
    for (int j = 0; j < 3; ++j) sd[j] = std::sqrt(*laws[static_cast<std::size_t>(j)].variance());
    const Eigen::Matrix3d a = sd.asDiagonal() * gram * sd.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> exact(a);
    const Eigen::Vector3d expected = exact.eigenvalues().reverse();

    const auto g = midpoint_grid(50);
    const Eigen::MatrixXd basis = basis_matrix(spec, *g);
    const Eigen::MatrixXd c = basis * (sd.array().square().matrix().asDiagonal()) * basis.transpose();
    const EigenSystem eig = eigendecompose(c, g, 5);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(eig.eigenvalues[j], expected[j], 1e-3) << "j=" << j;
    EXPECT_LE(eig.eigenvalues[3], 1e-10);
}

TEST(Eigendecompose, Errors) {
    const auto g = midpoint_grid(3);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
    asym(0, 1) = 0.5;
    try {
        eigendecompose(asym, g, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
    }
    try {
        eigendecompose(-Eigen::MatrixXd::Identity(3, 3) + Eigen::MatrixXd::Constant(3, 3, 0.1), g, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NumericalFailure);
    }
    try {
        eigendecompose(Eigen::MatrixXd::Identity(3, 3), g, 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
    }
}

TEST(Eigendecompose, TinyNegativesAreClamped) {
    const auto g = midpoint_grid(4);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 4);
    c(0, 0) = 4.0;
    c(3, 3) = -1e-9;
    const EigenSystem eig = eigendecompose(c, g, 4);
    EXPECT_GE(eig.eigenvalues.minCoeff(), 0.0);
}

TEST(Fpca, OrthonormalityTraceAndRetainedCount) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto g = midpoint_grid(60);
        const auto samples = random_samples(g, 40, seed);
        const EigenSystem eig = fit_fpca(samples);
        EXPECT_LE(static_cast<std::size_t>(eig.size()), std::min<std::size_t>(40, 60));
        for (int j = 0; j < eig.size(); ++j)
            for (int k = 0; k < eig.size(); ++k)
                EXPECT_NEAR(inner_product(column(eig, j), column(eig, k)), j == k ? 1.0 : 0.0, 1e-8);
        EXPECT_NEAR(eig.eigenvalues.sum(), quadrature_trace(pooled_covariance(samples), *g), 1e-8);
        for (int j = 1; j < eig.size(); ++j) EXPECT_LE(eig.eigenvalues[j], eig.eigenvalues[j - 1]);
    }
}

TEST(Fpca, GramRouteMatchesDirectRoute) {
    const auto g = testing_util::midpoint_grid_2d(33);
    ASSERT_GT(g->size(), kDirectEigenLimit);
    const auto sim = generate(make_dgp(3), 30, g, 4);
    const auto& samples = sim.data.observations;
    const EigenSystem snapshot = fit_fpca(samples);
    const EigenSystem direct = eigendecompose(pooled_covariance(samples), g, 6);
    ASSERT_GE(snapshot.size(), 4);
    for (int j = 0; j < 4; ++j) {
        EXPECT_NEAR(snapshot.eigenvalues[j], direct.eigenvalues[j], 1e-9 * direct.eigenvalues[0]);
        EXPECT_LE((snapshot.eigenfunctions.col(j) - direct.eigenfunctions.col(j)).cwiseAbs().maxCoeff(), 1e-6);
    }
    EXPECT_LE((snapshot.mean_function - pooled_mean(samples)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Project, EigenfunctionsAsData) {
    const auto g = midpoint_grid(50);
    const EigenSystem eig = fit_fpca(random_samples(g, 30, 9));
    const int j_max = 5;
    const Eigen::VectorXd first = project(column(eig, 0), eig, j_max);
    for (int j = 0; j < j_max; ++j) EXPECT_NEAR(first[j], j == 0 ? 1.0 : 0.0, 1e-8);

    std::vector<double> combo(g->size());
    for (std::size_t p = 0; p < combo.size(); ++p)
        combo[p] = 2.0 * eig.eigenfunctions(static_cast<Eigen::Index>(p), 0) -
                   3.0 * eig.eigenfunctions(static_cast<Eigen::Index>(p), 1);
    const Eigen::VectorXd s = project(FunctionalObservation(g, combo), eig, j_max);
    EXPECT_NEAR(s[0], 2.0, 1e-8);
    EXPECT_NEAR(s[1], -3.0, 1e-8);
    for (int j = 2; j < j_max; ++j) EXPECT_NEAR(s[j], 0.0, 1e-8);
}

TEST(Project, ReconstructionErrorNonincreasing) {
    const auto g = midpoint_grid(50);
    const auto samples = random_samples(g, 30, 10);
    const EigenSystem eig = fit_fpca(samples);
    const Eigen::MatrixXd scores = project(samples, eig, eig.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Eigen::Map<const Eigen::VectorXd> x(samples[i].values.data(), static_cast<Eigen::Index>(g->size()));
        Eigen::VectorXd residual = x;
        double previous = inner_product(samples[i], samples[i]);
        for (int j = 0; j < eig.size(); ++j) {
            residual -= scores(static_cast<Eigen::Index>(i), j) * eig.eigenfunctions.col(j);
            const double err = quadrature_dot(g->weights(), {residual.data(), g->size()}, {residual.data(), g->size()});
            EXPECT_LE(err, previous + 1e-12);
            previous = err;
        }
    }
}

TEST(Project, ReconstructionAtRankForSpanMembers) {
    // Data in a 3-dimensional span (plus its mean); every sample is
    // reconstructed from the rank-many components.
    const auto g = midpoint_grid(50);
    const auto sim = generate(make_dgp(1), 60, g, 12);
    const EigenSystem eig = fit_fpca(sim.data.observations);
    const int rank = eig.numerical_rank();
    EXPECT_EQ(rank, 3);
    // Class means differ from the pooled span; reconstruct centered-by-class
    // residuals, which lie in the span of the covariance.
    const auto m_pos = class_mean(sim.data.observations, Label::Positive);
    for (const auto& obs : sim.data.observations) {
        if (obs.label != Label::Positive) continue;
        std::vector<double> r(g->size());
        for (std::size_t p = 0; p < r.size(); ++p) r[p] = obs.values[p] - m_pos.values[p];
        const FunctionalObservation res(g, r);
        const Eigen::VectorXd s = project(res, eig, rank);
        Eigen::VectorXd rec = eig.eigenfunctions.leftCols(rank) * s;
        const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
        const Eigen::VectorXd diff = rv - rec;
        const double num = quadrature_dot(g->weights(), {diff.data(), g->size()}, {diff.data(), g->size()});
        EXPECT_LE(std::sqrt(num / inner_product(res, res)), 1e-6);
    }
}

TEST(Project, ComponentsOutOfRange) {
    const auto g = midpoint_grid(20);
    const auto samples = random_samples(g, 12, 1);
    const EigenSystem eig = fit_fpca(samples);
    for (int bad : {0, eig.size() + 1}) {
        try {
            project_scores(samples, eig, bad);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
        }
    }
    const auto other = curve(midpoint_grid(21), [](double s) { return s; });
    try {
        project(other, eig, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::IncompatibleGrids);
    }
}

TEST(Project, ScoresAreUncentered) {
    const auto g = midpoint_grid(30);
    const auto samples = random_samples(g, 20, 4);
    const EigenSystem eig = fit_fpca(samples);
    const ScoreMatrix s = project_scores(samples, eig, 2);
    for (std::size_t i = 0; i < samples.size(); ++i)
        EXPECT_NEAR(s.scores(static_cast<Eigen::Index>(i), 1), inner_product(samples[i], column(eig, 1)), 1e-12);
}
