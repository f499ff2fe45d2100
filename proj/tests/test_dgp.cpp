#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fdnn/dgp.hpp"
#include "fdnn/errors.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fdnn;
using testing_util::midpoint_grid;

namespace {

std::vector<BasisFunction> one_basis() {
    return {[](std::span<const double> s) { return s[0]; }};
}

DGPSpec swapped(DGPSpec spec) {
    std::swap(spec.positive, spec.negative);
    return spec;
}

const IndependentLaw& independent(const ClassLaw& law) { return std::get<IndependentLaw>(law); }

}  // namespace

TEST(DesignParameters, GaussianParameters) {
    const DGPSpec d1 = make_dgp(1);
    const double mu_pos[] = {-1, 2, -3}, mu_neg[] = {-0.5, 2.5, -2.5};
    const double sig_pos[] = {0.6, 0.4, 0.2}, sig_neg[] = {0.9, 0.5, 0.3};
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_DOUBLE_EQ(independent(d1.positive)[j].location, mu_pos[j]);
        EXPECT_DOUBLE_EQ(independent(d1.negative)[j].location, mu_neg[j]);
        EXPECT_DOUBLE_EQ(independent(d1.positive)[j].scale, sig_pos[j]);
        EXPECT_DOUBLE_EQ(independent(d1.negative)[j].scale, sig_neg[j]);
    }
    const DGPSpec d1v = make_dgp(1, DiagonalReading::Variance);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(*independent(d1v.positive)[j].variance(), sig_pos[j], 1e-15);

    const DGPSpec d2 = make_dgp(2);
    const double dofs[] = {5, 3, 1};
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_DOUBLE_EQ(independent(d2.positive)[j].scale, 3.0 - static_cast<double>(j));
        EXPECT_EQ(independent(d2.negative)[j].kind, LawKind::StudentT);
        EXPECT_DOUBLE_EQ(independent(d2.negative)[j].dof, dofs[j]);
    }

    const DGPSpec d3 = make_dgp(3);
    const double m3p[] = {8, -6, 4, -2}, s3p[] = {8, 6, 4, 2}, m3n[] = {-3.5, -2.5, 1.5, -0.5}, s3n[] = {4.5, 3.5, 2.5, 1.5};
    EXPECT_EQ(d3.dim, 2);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_DOUBLE_EQ(independent(d3.positive)[j].location, m3p[j]);
        EXPECT_DOUBLE_EQ(independent(d3.positive)[j].scale, s3p[j]);
        EXPECT_DOUBLE_EQ(independent(d3.negative)[j].location, m3n[j]);
        EXPECT_DOUBLE_EQ(independent(d3.negative)[j].scale, s3n[j]);
    }
}

TEST(DesignParameters, StudentTParameters) {
    const DGPSpec d4 = make_dgp(4);
    const double nc[] = {2, 1.5, 1, 0.5};
    for (std::size_t j = 0; j < 4; ++j) {
        const double jj = static_cast<double>(j + 1);
        EXPECT_DOUBLE_EQ(independent(d4.positive)[j].dof, 2 * jj);
        EXPECT_DOUBLE_EQ(independent(d4.positive)[j].location, 0.0);
        EXPECT_DOUBLE_EQ(independent(d4.negative)[j].dof, 2 * jj + 1);
        EXPECT_DOUBLE_EQ(independent(d4.negative)[j].location, nc[j]);
    }
    const DGPSpec d5 = make_dgp(5);
    for (const auto* law : {&d5.positive, &d5.negative})
        for (const auto& b : std::get<BlockLaw>(*law)) {
            EXPECT_EQ(b.size(), 2);
            EXPECT_DOUBLE_EQ(b.dof, 5.0);
        }
}

TEST(Generate, LocationModeCurveAtHalf) {
    // 5-point midpoint grid contains s = 0.5 at index 2
    const auto sim = generate(make_dgp(1), 20, midpoint_grid(5), 3, DrawMode::Location);
    for (const auto& obs : sim.data.observations) {
        if (obs.label != Label::Positive) continue;
        EXPECT_NEAR(obs.values[2], -std::log(2.5) + 1.0 - 0.375, 1e-12);
    }
}

TEST(Generate, DeterministicAndNoiseFree) {
    const auto g = midpoint_grid(50);
    const auto a = generate(make_dgp(2), 30, g, 17);
    const auto b = generate(make_dgp(2), 30, g, 17);
    for (std::size_t i = 0; i < 30; ++i) {
        EXPECT_EQ(a.data.observations[i].values, b.data.observations[i].values);
        EXPECT_EQ(a.data.observations[i].label, b.data.observations[i].label);
    }
    // values are exact basis combinations of the retained coefficients
    const Eigen::MatrixXd psi = basis_matrix(make_dgp(2), *g);
    for (std::size_t i = 0; i < 30; ++i) {
        const Eigen::VectorXd expect = psi * a.truth.coefficients.row(static_cast<Eigen::Index>(i)).transpose();
        for (std::size_t p = 0; p < g->size(); ++p)
            EXPECT_NEAR(a.data.observations[i].values[p], expect[static_cast<Eigen::Index>(p)], 1e-12 * (1 + std::abs(expect[static_cast<Eigen::Index>(p)])));
    }
}

TEST(Generate, LabelFrequency) {
    const auto draws = draw_coefficients(make_dgp(1), 100000, 99);
    double pos = 0;
    for (Label l : draws.labels) pos += l == Label::Positive;
    EXPECT_NEAR(pos / 100000.0, 0.5, 0.005);
}

TEST(Generate, DimensionMismatch) {
    try {
        generate(make_dgp(3), 5, midpoint_grid(10), 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
    }
    EXPECT_THROW(make_dgp(6), Error);
}

TEST(Generate, CoefficientMomentsMatchTheLaws) {
    const std::size_t n = 100000;
    for (int id = 1; id <= 5; ++id) {
        const DGPSpec spec = make_dgp(id);
        const auto draws = draw_coefficients(spec, n, 1000 + static_cast<std::uint64_t>(id));
        for (Label cls : {Label::Positive, Label::Negative}) {
            const ClassLaw& law = cls == Label::Positive ? spec.positive : spec.negative;
            std::vector<Eigen::Index> rows;
            for (std::size_t i = 0; i < n; ++i)
                if (draws.labels[i] == cls) rows.push_back(static_cast<Eigen::Index>(i));
            const auto m = static_cast<double>(rows.size());
            for (std::size_t j = 0; j < spec.coefficient_count(); ++j) {
                // reference moments from textbook formulas
                std::optional<double> mean, var;
                bool fourth_moment = false;
                if (const auto* coords = std::get_if<IndependentLaw>(&law)) {
                    const CoordinateLaw& c = (*coords)[j];
                    if (c.kind == LawKind::Normal) {
                        mean = c.location, var = c.scale * c.scale, fourth_moment = true;
                    } else {
                        if (c.dof > 1) mean = c.location == 0.0 ? 0.0 : oracle::noncentral_t_mean(c.dof, c.location);
                        if (c.dof > 2) var = c.dof * (1 + c.location * c.location) / (c.dof - 2) - *mean * *mean;
                        fourth_moment = c.dof > 4;
                    }
                } else {
                    const auto& blocks = std::get<BlockLaw>(law);
                    const BlockTLaw& b = blocks[j / 2];
                    const auto k = static_cast<Eigen::Index>(j % 2);
                    mean = b.mean[k];
                    var = b.dof / (b.dof - 2) * b.scale(k, k);
                    fourth_moment = b.dof > 4;
                }
                if (!mean || !var) continue;  // Cauchy / t_2 coordinates have no usable SE
                double s = 0, ss = 0;
                for (auto r : rows) s += draws.coefficients(r, static_cast<Eigen::Index>(j));
                const double xbar = s / m;
                double m4 = 0;
                for (auto r : rows) {
                    const double d = draws.coefficients(r, static_cast<Eigen::Index>(j)) - xbar;
                    ss += d * d;
                    m4 += d * d * d * d;
                }
                EXPECT_NEAR(xbar, *mean, 4 * std::sqrt(*var / m)) << "design " << id << " coord " << j;
                if (fourth_moment) {
                    const double s2 = ss / (m - 1);
                    const double se = std::sqrt((m4 / m - s2 * s2) / m);
                    EXPECT_NEAR(s2, *var, 4 * se) << "design " << id << " coord " << j;
                }
            }
        }
    }
}

TEST(NoncentralT, DensityMatchesQuadrature) {
    for (double nu : {3.0, 5.0, 7.0, 9.0})
        for (double mu : {0.5, 1.0, 2.0})
            for (double x : {-3.0, -0.7, 0.0, 0.4, 1.5, 4.0, 9.0}) {
                const double ref = std::log(oracle::noncentral_t_pdf(x, nu, mu));
                EXPECT_NEAR(CoordinateLaw::noncentral_t(nu, mu).log_density(x), ref, 1e-9 * std::max(1.0, std::abs(ref)))
                    << nu << " " << mu << " " << x;
            }
}

TEST(BlockT, DensityMatchesClosedForm) {
    const DGPSpec d5 = make_dgp(5);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 1.5);
    for (const auto* law : {&d5.positive, &d5.negative})
        for (const auto& b : std::get<BlockLaw>(*law))
            for (int k = 0; k < 50; ++k) {
                const double x[2] = {z(rng), z(rng)};
                EXPECT_NEAR(b.log_density(x), oracle::bivariate_t_log_pdf(x[0], x[1], b.dof, b.mean[0], b.mean[1],
                                                                         b.scale(0, 0), b.scale(0, 1), b.scale(1, 1)),
                            1e-12);
            }
}

TEST(BlockT, LayoutValidation) {
    BlockTLaw a;
    a.mean = Eigen::Vector2d(0, 0);
    a.scale = Eigen::Matrix2d::Identity();
    BlockTLaw b = a;
    b.dof = 7.0;
    EXPECT_THROW(make_block_t_dgp({a}, {b}), Error);
    BlockTLaw bad = a;
    bad.scale(0, 1) = 2.0;
    bad.scale(1, 0) = 2.0;  // not positive definite
    EXPECT_THROW(make_block_t_dgp({bad}, {a}), Error);
    EXPECT_NO_THROW(make_block_t_dgp({a, a}, {a, a}));
}

TEST(Oracle, IdenticalLawsGiveZero) {
    const DGPSpec same = make_gaussian_dgp(one_basis(), {0.3}, {1.2}, {0.3}, {1.2});
    for (double x : {-5.0, 0.0, 2.5}) EXPECT_EQ(oracle_log_ratio(same, std::vector<double>{x}), 0.0);
}

TEST(Oracle, DesignOneAtPositiveMean) {
    const DGPSpec spec = make_dgp(1);
    const std::vector<double> xi{-1, 2, -3};
    double ref = 0;
    for (std::size_t j = 0; j < 3; ++j) {
        const auto& p = independent(spec.positive)[j];
        const auto& q = independent(spec.negative)[j];
        ref += oracle::normal_log_pdf(xi[j], p.location, p.scale * p.scale) -
               oracle::normal_log_pdf(xi[j], q.location, q.scale * q.scale);
    }
    EXPECT_NEAR(oracle_log_ratio(spec, xi), ref, 1e-10);
}

TEST(Oracle, DesignTwoAtZero) {
    const DGPSpec spec = make_dgp(2);
    const std::vector<double> xi{0, 0, 0};
    double ref = 0;
    for (std::size_t j = 0; j < 3; ++j) {
        const auto& p = independent(spec.positive)[j];
        ref += oracle::normal_log_pdf(0.0, p.location, p.scale * p.scale) -
               oracle::student_t_log_pdf(0.0, 7.0 - 2.0 * static_cast<double>(j + 1));
    }
    EXPECT_NEAR(oracle_log_ratio(spec, xi), ref, 1e-10);
}

TEST(Oracle, AgreesWithBruteForceEverywhere) {
    for (int id = 1; id <= 5; ++id) {
        const DGPSpec spec = make_dgp(id);
        std::mt19937_64 rng(static_cast<std::uint64_t>(id));
        std::normal_distribution<double> z(0.0, 2.0);
        double worst = 0;
        for (int k = 0; k < 10000; ++k) {
            std::vector<double> xi(spec.coefficient_count());
            for (double& x : xi) x = z(rng);
            worst = std::max(worst, std::abs(oracle_log_ratio(spec, xi) - oracle::brute_force_log_ratio(spec, xi)));
        }
        EXPECT_LE(worst, 1e-10) << "design " << id;
    }
}

TEST(Oracle, SwappingClassesNegates) {
    for (int id = 1; id <= 5; ++id) {
        const DGPSpec spec = make_dgp(id);
        const DGPSpec flip = swapped(spec);
        std::mt19937_64 rng(7);
        std::normal_distribution<double> z(0.0, 2.0);
        for (int k = 0; k < 200; ++k) {
            std::vector<double> xi(spec.coefficient_count());
            for (double& x : xi) x = z(rng);
            const double v = oracle_log_ratio(spec, xi);
            EXPECT_NEAR(oracle_log_ratio(flip, xi), -v, 1e-12 * std::max(1.0, std::abs(v)));
        }
    }
}

TEST(Oracle, BlockRatioUsesHalfLogDeterminantRatio) {
    // at zeta equal to both means the quadratic terms vanish
    BlockTLaw p, q;
    p.mean = q.mean = Eigen::Vector2d(0.2, -0.1);
    p.scale = Eigen::Matrix2d::Identity();
    q.scale = Eigen::Matrix2d::Identity() * 3.0;
    const DGPSpec spec = make_block_t_dgp({p}, {q});
    const std::vector<double> xi{0.2, -0.1};
    EXPECT_NEAR(oracle_log_ratio(spec, xi), 0.5 * std::log(9.0), 1e-12);
}

TEST(Bayes, TieRuleAndThreshold) {
    const DGPSpec same = make_gaussian_dgp(one_basis(), {0}, {1}, {0}, {1});
    for (double x : {-3.0, 0.0, 3.0}) EXPECT_EQ(bayes_classify(same, std::vector<double>{x}), Label::Positive);
    const DGPSpec sym = make_gaussian_dgp(one_basis(), {1}, {1}, {-1}, {1});
    EXPECT_EQ(bayes_classify(sym, std::vector<double>{0.0}), Label::Positive);
    EXPECT_EQ(bayes_classify(sym, std::vector<double>{1e-9}), Label::Positive);
    EXPECT_EQ(bayes_classify(sym, std::vector<double>{-1e-9}), Label::Negative);
}

TEST(Bayes, RiskOfIdenticalLawsIsHalf) {
    const DGPSpec same = make_gaussian_dgp(one_basis(), {0}, {1}, {0}, {1});
    const RiskEstimate r = bayes_risk(same, 100000, 3);
    EXPECT_NEAR(r.rate, 0.5, 3 * r.se);
}

TEST(Bayes, RiskOfUnitShiftIsNormalTail) {
    const DGPSpec sym = make_gaussian_dgp(one_basis(), {1}, {1}, {-1}, {1});
    const RiskEstimate r = bayes_risk(sym, 1000000, 4);
    EXPECT_NEAR(r.rate, oracle::normal_cdf(-1.0), 3 * r.se);
}

TEST(Bayes, DisjointSupportsGiveZero) {
    const DGPSpec far = make_gaussian_dgp(one_basis(), {1}, {1e-3}, {-1}, {1e-3});
    EXPECT_EQ(bayes_risk(far, 10000, 5).rate, 0.0);
    EXPECT_THROW(bayes_risk(far, 999, 5), Error);
}

TEST(ExcessRisk, BayesAgainstItselfIsZero) {
    const DGPSpec spec = make_dgp(1);
    const auto draws = draw_coefficients(spec, 5000, 6);
    const auto b = bayes_classify_rows(spec, draws.coefficients);
    const ExcessRisk ex = excess_risk(b, b, draws.labels);
    EXPECT_EQ(ex.excess, 0.0);
    EXPECT_EQ(ex.se, 0.0);
}

TEST(ExcessRisk, ConstantRuleOnDesignOne) {
    const DGPSpec spec = make_dgp(1);
    const Predictor always_pos = [](const FunctionalDataset& d) {
        return std::vector<Label>(d.observations.size(), Label::Positive);
    };
    const ExcessRisk ex = excess_risk(always_pos, spec, midpoint_grid(20), 200000, 7);
    const RiskEstimate bayes = bayes_risk(spec, 1000000, 8);
    EXPECT_NEAR(ex.excess, 0.5 - bayes.rate, 3 * std::sqrt(ex.se * ex.se + bayes.se * bayes.se));
}
