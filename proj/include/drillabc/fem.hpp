#pragma once

#include "drillabc/bitrock.hpp"
#include "drillabc/dynamics.hpp"

#include <Eigen/Dense>

#include <vector>

namespace drillabc {

struct DrillStringGeometry {
    double shear_modulus;  // Pa
    double density;        // kg/m³
    double l_dp;           // drill-pipe length, m
    double l_bha;          // BHA length, m
    double d_dp_outer;
    double d_dp_inner;
    double d_bha_outer;
    double d_bha_inner;

    // 5 km field string: G = 85 GPa, ρ = 7800 kg/m³, 4733 m of 0.140/0.119 m
    // pipe above 467 m of 0.161/0.073 m BHA.
    static DrillStringGeometry field_string();

    void validate() const;
    double j_dp() const;
    double j_bha() const;
};

// Polar moment of an annulus, m⁴.
double polar_moment(double outer, double inner);

struct ElementMatrices {
    Eigen::Matrix2d mass;
    Eigen::Matrix2d stiffness;
};

ElementMatrices element_matrices(double j, double l_el, double density, double shear_modulus);

// Torsional FE chain with the top DOF clamped; DOF n-1 is the bit.
class FemTorsionalModel {
public:
    int n_el() const noexcept { return n_dp_ + n_bha_; }
    int n_dp() const noexcept { return n_dp_; }
    int n_bha() const noexcept { return n_bha_; }
    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    const Eigen::MatrixXd& mass() const noexcept { return mass_; }
    const Eigen::MatrixXd& stiffness() const noexcept { return stiffness_; }
    const Eigen::MatrixXd& damping() const noexcept { return damping_; }

private:
    friend FemTorsionalModel assemble(const DrillStringGeometry&, int, int, double, double);

    int n_dp_ = 0;
    int n_bha_ = 0;
    double alpha_ = 0.0;
    double beta_ = 0.0;
    Eigen::MatrixXd mass_;
    Eigen::MatrixXd stiffness_;
    Eigen::MatrixXd damping_;
};

// Uniform elements per section, drill pipe on top, C = αM + βK.
FemTorsionalModel assemble(const DrillStringGeometry& geometry, int n_dp, int n_bha, double alpha, double beta);

struct Mode {
    double omega_n;  // rad/s
    double xi;
};

// Ascending natural frequencies of K v = ω² M v with proportional-damping
// ratios ξ = (α/ω + βω)/2.
std::vector<Mode> modal_properties(const FemTorsionalModel& model);

// State matrix [[0, I], [-M⁻¹K, -M⁻¹C_NL]] where C_NL adds the bit-rock
// torque slope to the bit DOF.
Eigen::MatrixXd jacobian_fem(const FemTorsionalModel& model, const BitRockModel& bitrock, const WobRatio& r,
                             const OperatingPoint& op);

// Same, for a given bit-rock slope in N·m·s/rad.
Eigen::MatrixXd jacobian_fem_from_slope(const FemTorsionalModel& model, double slope);

}  // namespace drillabc
