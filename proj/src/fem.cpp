#include "drillabc/fem.hpp"

#include "drillabc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace drillabc {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

DrillStringGeometry DrillStringGeometry::field_string() {
    return {85e9, 7800.0, 4733.0, 467.0, 0.140, 0.119, 0.161, 0.073};
}

void DrillStringGeometry::validate() const {
    if (!positive_finite(shear_modulus) || !positive_finite(density)) {
        throw DomainError("geometry: material properties must be positive");
    }
    if (!positive_finite(l_dp) || !positive_finite(l_bha)) {
        throw DomainError("geometry: section lengths must be positive");
    }
    if (!(d_dp_outer > d_dp_inner && d_dp_inner > 0.0) || !(d_bha_outer > d_bha_inner && d_bha_inner > 0.0)) {
        throw DomainError("geometry: need outer > inner > 0 for both sections");
    }
}

double DrillStringGeometry::j_dp() const { return polar_moment(d_dp_outer, d_dp_inner); }
double DrillStringGeometry::j_bha() const { return polar_moment(d_bha_outer, d_bha_inner); }

double polar_moment(double outer, double inner) {
    if (!(outer > inner) || !(inner >= 0.0)) throw DomainError("polar_moment: need outer > inner >= 0");
    return std::numbers::pi / 32.0 * (std::pow(outer, 4) - std::pow(inner, 4));
}

ElementMatrices element_matrices(double j, double l_el, double density, double shear_modulus) {
    if (!positive_finite(j) || !positive_finite(l_el) || !positive_finite(density) ||
        !positive_finite(shear_modulus)) {
        throw DomainError("element_matrices: all inputs must be positive");
    }
    ElementMatrices e;
    const double m = density * j * l_el;
    const double k = shear_modulus * j / l_el;
    e.mass << m / 3.0, m / 6.0, m / 6.0, m / 3.0;
    e.stiffness << k, -k, -k, k;
    return e;
}

FemTorsionalModel assemble(const DrillStringGeometry& geometry, int n_dp, int n_bha, double alpha, double beta) {
    geometry.validate();
    if (n_dp < 1 || n_bha < 1) throw DomainError("assemble: need at least one element per section");
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
        throw DomainError("assemble: damping coefficients must be finite and non-negative");
    }

    const int n_el = n_dp + n_bha;
    const int n_nodes = n_el + 1;
    Eigen::MatrixXd m_full = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
    Eigen::MatrixXd k_full = Eigen::MatrixXd::Zero(n_nodes, n_nodes);

    const auto dp = element_matrices(geometry.j_dp(), geometry.l_dp / n_dp, geometry.density, geometry.shear_modulus);
    const auto bha =
        element_matrices(geometry.j_bha(), geometry.l_bha / n_bha, geometry.density, geometry.shear_modulus);
    for (int e = 0; e < n_el; ++e) {
        const auto& el = e < n_dp ? dp : bha;
        m_full.block<2, 2>(e, e) += el.mass;
        k_full.block<2, 2>(e, e) += el.stiffness;
    }

    FemTorsionalModel model;
    model.n_dp_ = n_dp;
    model.n_bha_ = n_bha;
    model.alpha_ = alpha;
    model.beta_ = beta;
    // u(0) = 0 at the rotary table.
    model.mass_ = m_full.bottomRightCorner(n_el, n_el);
    model.stiffness_ = k_full.bottomRightCorner(n_el, n_el);
    model.damping_ = alpha * model.mass_ + beta * model.stiffness_;

    if (Eigen::LLT<Eigen::MatrixXd>(model.stiffness_).info() != Eigen::Success) {
        throw AssemblyError("assemble: constrained stiffness is not positive definite");
    }
    if (Eigen::LLT<Eigen::MatrixXd>(model.mass_).info() != Eigen::Success) {
        throw AssemblyError("assemble: mass matrix is not positive definite");
    }
    return model;
}

std::vector<Mode> modal_properties(const FemTorsionalModel& model) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(model.stiffness(), model.mass(),
                                                                     Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) throw NumericError("modal_properties: eigen-solver failed");
    std::vector<Mode> modes;
    const auto& w2 = solver.eigenvalues();
    for (Eigen::Index i = 0; i < w2.size(); ++i) {
        if (!(w2(i) > 0.0)) throw NumericError("modal_properties: non-positive eigenvalue");
        const double w = std::sqrt(w2(i));
        modes.push_back({w, 0.5 * (model.alpha() / w + model.beta() * w)});
    }
    std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) { return a.omega_n < b.omega_n; });
    return modes;
}

Eigen::MatrixXd jacobian_fem_from_slope(const FemTorsionalModel& model, double slope) {
    const int n = model.n_el();
    Eigen::MatrixXd c_nl = model.damping();
    c_nl(n - 1, n - 1) += slope;
    const Eigen::LLT<Eigen::MatrixXd> llt(model.mass());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    a.topRightCorner(n, n).setIdentity();
    a.bottomLeftCorner(n, n) = -llt.solve(model.stiffness());
    a.bottomRightCorner(n, n) = -llt.solve(c_nl);
    return a;
}

Eigen::MatrixXd jacobian_fem(const FemTorsionalModel& model, const BitRockModel& bitrock, const WobRatio& r,
                             const OperatingPoint& op) {
    return jacobian_fem_from_slope(model, torque_derivative(bitrock, r, op.omega) * 1000.0);
}

}  // namespace drillabc
