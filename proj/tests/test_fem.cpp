#include "drillabc/errors.hpp"
#include "drillabc/fem.hpp"
#include "drillabc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace drillabc;

namespace {

const auto kGeom = DrillStringGeometry::field_string();

double annulus(double o, double i) { return std::numbers::pi / 32.0 * (std::pow(o, 4) - std::pow(i, 4)); }

}  // namespace

TEST(ElementMatrices, Templates) {
    const auto e = element_matrices(2.0, 3.0, 1.0, 1.0);  // ρJl = 6, GJ/l = 2/3
    EXPECT_NEAR(e.mass(0, 0), 2.0, 1e-15);
    EXPECT_NEAR(e.mass(0, 1), 1.0, 1e-15);
    EXPECT_NEAR(e.mass(1, 0), 1.0, 1e-15);
    EXPECT_NEAR(e.mass(1, 1), 2.0, 1e-15);
    const auto k = element_matrices(1.0, 1.0, 1.0, 1.0).stiffness;
    EXPECT_EQ(k(0, 0), 1.0);
    EXPECT_EQ(k(0, 1), -1.0);
    EXPECT_EQ(k(1, 0), -1.0);
    EXPECT_EQ(k(1, 1), 1.0);
    EXPECT_EQ((k * Eigen::Vector2d(1, 1)).norm(), 0.0);
    EXPECT_THROW(element_matrices(0.0, 1.0, 1.0, 1.0), DomainError);
    EXPECT_THROW(element_matrices(1.0, 1.0, -1.0, 1.0), DomainError);
}

TEST(PolarMoment, FieldSections) {
    EXPECT_NEAR(polar_moment(0.140, 0.119), annulus(0.140, 0.119), 1e-20);
    EXPECT_NEAR(kGeom.j_dp(), 1.802e-5, 1e-8);
    EXPECT_NEAR(kGeom.j_bha(), annulus(0.161, 0.073), 1e-20);
    EXPECT_THROW(polar_moment(0.1, 0.2), DomainError);
}

TEST(Assemble, StructureAndDampingIdentity) {
    for (auto [nd, nb] : {std::pair{1, 1}, {8, 2}, {3, 5}}) {
        const auto m = assemble(kGeom, nd, nb, 0.5, 0.006);
        const int n = nd + nb;
        ASSERT_EQ(m.mass().rows(), n);
        ASSERT_EQ(m.n_el(), n);
        EXPECT_EQ((m.mass() - m.mass().transpose()).norm(), 0.0);
        EXPECT_EQ((m.stiffness() - m.stiffness().transpose()).norm(), 0.0);
        EXPECT_EQ((m.damping() - (0.5 * m.mass() + 0.006 * m.stiffness())).norm(), 0.0);
        EXPECT_EQ(m.mass().llt().info(), Eigen::Success);
        EXPECT_EQ(m.stiffness().llt().info(), Eigen::Success);
    }
    EXPECT_THROW(assemble(kGeom, 0, 1, 0.5, 0.006), DomainError);
    EXPECT_THROW(assemble(kGeom, 1, 0, 0.5, 0.006), DomainError);
}

TEST(Assemble, InertiaBookkeeping) {
    for (auto [nd, nb] : {std::pair{1, 1}, {8, 2}, {4, 7}}) {
        const auto m = assemble(kGeom, nd, nb, 0.0, 0.0);
        const double jd = annulus(0.140, 0.119), jb = annulus(0.161, 0.073);
        const double whole = 7800.0 * (jd * 4733.0 + jb * 467.0);
        // The clamped node takes its diagonal entry and both couplings.
        const double removed = 7800.0 * jd * (4733.0 / nd) * (1.0 / 3.0 + 2.0 / 6.0);
        EXPECT_NEAR(m.mass().sum(), whole - removed, 1e-10 * whole);
    }
}

TEST(Assemble, StiffnessRowsSumToZeroAwayFromTheClamp) {
    const auto m = assemble(kGeom, 8, 2, 0.5, 0.006);
    const Eigen::VectorXd rows = m.stiffness().rowwise().sum();
    EXPECT_GT(rows(0), 0.0);
    for (Eigen::Index i = 1; i < rows.size(); ++i) EXPECT_NEAR(rows(i), 0.0, 1e-9 * m.stiffness().norm());
}

TEST(ModalProperties, SingleClampedElement) {
    // Clamping one end of a lone element leaves K = k and M = m/3.
    const double k = 7.0, m = 2.0;
    const auto e = element_matrices(1.0, 1.0, m, k);  // ρJl = m, GJ/l = k
    EXPECT_NEAR(std::sqrt(e.stiffness(1, 1) / e.mass(1, 1)), std::sqrt(3.0 * k / m), 1e-14);
}

TEST(ModalProperties, TwoDofAgainstPublishedValues) {
    const auto modes = modal_properties(assemble(kGeom, 1, 1, 0.5, 0.006));
    ASSERT_EQ(modes.size(), 2u);
    EXPECT_NEAR(modes[0].omega_n, 0.85, 0.02 * 0.85);
    EXPECT_NEAR(modes[1].omega_n, 15.60, 0.02 * 15.60);
}

TEST(ModalProperties, TenDofFrequenciesAgainstPublishedValues) {
    const double published[] = {0.83, 2.66, 4.76, 7.11, 9.73, 12.62, 15.63, 18.23, 22.75, 45.00};
    const auto modes = modal_properties(assemble(kGeom, 8, 2, 0.5, 0.006));
    ASSERT_EQ(modes.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(modes[i].omega_n, published[i], 0.02 * published[i]) << i;
}

TEST(ModalProperties, UndampedHasZeroRatios) {
    for (const auto& m : modal_properties(assemble(kGeom, 8, 2, 0.0, 0.0))) EXPECT_EQ(m.xi, 0.0);
}

TEST(ModalProperties, RatiosMatchComplexEigenvaluesOfStateMatrix) {
    // Proportional damping: λ = −ξω ± iω√(1−ξ²), so ξ = −Re λ / |λ|.
    for (double beta : {0.006, 0.0021}) {
        const auto model = assemble(kGeom, 8, 2, 0.5, beta);
        const auto modes = modal_properties(model);
        const auto ev = eigenvalues_general(jacobian_fem_from_slope(model, 0.0));
        std::vector<std::pair<double, double>> from_state;
        for (const auto& l : ev) {
            if (l.imag() > 0) from_state.emplace_back(std::abs(l), -l.real() / std::abs(l));
        }
        std::sort(from_state.begin(), from_state.end());
        ASSERT_EQ(from_state.size(), modes.size());
        for (std::size_t i = 0; i < modes.size(); ++i) {
            EXPECT_NEAR(modes[i].omega_n, from_state[i].first, 1e-8 * from_state[i].first);
            EXPECT_NEAR(modes[i].xi, from_state[i].second, 1e-8);
        }
    }
}

TEST(ModalProperties, FrequenciesMatchSymmetricSolver) {
    const auto model = assemble(kGeom, 8, 2, 0.5, 0.006);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(model.stiffness(), model.mass());
    const auto modes = modal_properties(model);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        EXPECT_NEAR(modes[i].omega_n, std::sqrt(es.eigenvalues()(static_cast<Eigen::Index>(i))), 1e-10);
    }
}

TEST(FemProperty, FirstModeDecreasesMonotonicallyUnderRefinement) {
    double prev = 1e300;
    for (int n : {2, 4, 8, 16}) {
        const double w = modal_properties(assemble(kGeom, n / 2, n / 2, 0.5, 0.006)).front().omega_n;
        EXPECT_LT(w, prev) << n;
        prev = w;
    }
}

TEST(FemProperty, SixteenElementFirstModeWithinOnePercentOfTwoElement) {
    const double two = modal_properties(assemble(kGeom, 1, 1, 0.5, 0.006)).front().omega_n;
    const double sixteen = modal_properties(assemble(kGeom, 8, 8, 0.5, 0.006)).front().omega_n;
    EXPECT_NEAR(two, 0.85, 0.01 * 0.85);
    EXPECT_NEAR(sixteen, two, 0.01 * two);
}

TEST(JacobianFem, PassiveStructureIsStable) {
    const auto model = assemble(kGeom, 8, 2, 0.5, 0.0021);
    const auto zero = BitRockModel(ModelKind::Cubic, std::vector<double>{0, 0, 0, 0});
    const Eigen::MatrixXd a = jacobian_fem(model, zero, WobRatio::unit(), {5, 244.2});
    EXPECT_LT(spectral_abscissa(a), 0.0);
    EXPECT_EQ((a - jacobian_fem_from_slope(model, 0.0)).norm(), 0.0);
}

TEST(JacobianFem, EigenpairsSolveQuadraticProblem) {
    const auto model = assemble(kGeom, 8, 2, 0.5, 0.006);
    const int n = model.n_el();
    for (double slope : {0.0, -400.0, 250.0}) {
        Eigen::MatrixXd c = model.damping();
        c(n - 1, n - 1) += slope;
        const auto ev = eigenvalues_general(jacobian_fem_from_slope(model, slope));
        ASSERT_EQ(ev.size(), static_cast<std::size_t>(2 * n));
        for (const auto& l : ev) {
            const Eigen::MatrixXcd q = (l * l) * model.mass().cast<std::complex<double>>() +
                                       l * c.cast<std::complex<double>>() + model.stiffness().cast<std::complex<double>>();
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(q);
            EXPECT_LT(svd.singularValues()(n - 1), 1e-8 * model.stiffness().norm()) << l;
        }
    }
}

TEST(JacobianFem, SlopeOnlyChangesBitColumn) {
    const auto model = assemble(kGeom, 1, 1, 0.5, 0.006);
    const auto m = published_estimate(ModelKind::ExponentialDecay);
    const Eigen::MatrixXd a = jacobian_fem(model, m, WobRatio::unit(), {5, 244.2});
    const Eigen::MatrixXd b = jacobian_fem_from_slope(model, 0.0);
    const Eigen::MatrixXd d = a - b;
    EXPECT_EQ(d.leftCols(3).norm(), 0.0);
    const Eigen::Vector2d expected =
        -model.mass().llt().solve(Eigen::Vector2d(0, 1)) * torque_derivative(m, WobRatio::unit(), 5) * 1000.0;
    EXPECT_NEAR((d.col(3).tail(2) - expected).norm(), 0.0, 1e-12 * expected.norm());
}
