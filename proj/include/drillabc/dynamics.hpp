#pragma once

#include "drillabc/bitrock.hpp"

#include <Eigen/Dense>

#include <vector>

namespace drillabc {

// Equivalent single-DOF torsional drill string (SI units).
class LumpedDrillString {
public:
    LumpedDrillString(double i_eq, double c_eq, double k_eq);

    double i_eq() const noexcept { return i_eq_; }
    double c_eq() const noexcept { return c_eq_; }
    double k_eq() const noexcept { return k_eq_; }
    double natural_frequency() const;
    double damping_ratio() const;

private:
    double i_eq_;
    double c_eq_;
    double k_eq_;
};

LumpedDrillString from_modal(double i_eq, double omega_n, double xi);

// I_eq = 383.33 kg·m², ω_n = 0.85 rad/s, ξ = 0.25.
LumpedDrillString field_lumped_model();

struct OperatingPoint {
    OperatingPoint(double omega, double wob);

    double omega;  // rotary table speed, rad/s
    double wob;    // weight on bit, kN
};

struct TorsionalState {
    double theta = 0.0;      // rad
    double theta_dot = 0.0;  // rad/s
    double time = 0.0;       // s
};

// Steady twist θ0 with T_bit(Ω) = k_eq·θ0 (bit lagging the table).
double equilibrium_twist(const BitRockModel& model, const WobRatio& r, const LumpedDrillString& ds,
                         const OperatingPoint& op);

Eigen::Matrix2d jacobian_1dof(const BitRockModel& model, const WobRatio& r, const LumpedDrillString& ds,
                              const OperatingPoint& op);

// Right-hand side of the first-order system at time t.
Eigen::Vector2d state_derivative(const BitRockModel& model, const WobRatio& r, const LumpedDrillString& ds,
                                 const OperatingPoint& op, const TorsionalState& x);

// Fixed-step RK4 of the lumped equation of motion. A step that would leave
// the bit spinning backwards is clamped to θ̇ = 0 (sticking); the torque is
// evaluated at 0⁺ while stuck. Returns ceil(t_end/dt)+1 samples.
std::vector<TorsionalState> simulate(const BitRockModel& model, const WobRatio& r, const LumpedDrillString& ds,
                                     const OperatingPoint& op, const TorsionalState& initial, double t_end,
                                     double dt = 1e-3);

}  // namespace drillabc
