#include "drillabc/dynamics.hpp"

#include "drillabc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace drillabc {

namespace {

constexpr double kKiloNewton = 1000.0;

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

LumpedDrillString::LumpedDrillString(double i_eq, double c_eq, double k_eq)
    : i_eq_(i_eq), c_eq_(c_eq), k_eq_(k_eq) {
    if (!positive_finite(i_eq) || !positive_finite(c_eq) || !positive_finite(k_eq)) {
        throw DomainError("lumped drill string: inertia, damping and stiffness must be positive");
    }
}

double LumpedDrillString::natural_frequency() const { return std::sqrt(k_eq_ / i_eq_); }

double LumpedDrillString::damping_ratio() const { return c_eq_ / (2.0 * std::sqrt(i_eq_ * k_eq_)); }

LumpedDrillString from_modal(double i_eq, double omega_n, double xi) {
    if (!positive_finite(i_eq) || !positive_finite(omega_n) || !positive_finite(xi)) {
        throw DomainError("from_modal: inertia, natural frequency and damping ratio must be positive");
    }
    const double k = i_eq * omega_n * omega_n;
    const double c = 2.0 * xi * std::sqrt(i_eq * k);
    return {i_eq, c, k};
}

LumpedDrillString field_lumped_model() { return from_modal(383.33, 0.85, 0.25); }

OperatingPoint::OperatingPoint(double omega_, double wob_) : omega(omega_), wob(wob_) {
    if (!positive_finite(omega_) || !positive_finite(wob_)) {
        throw DomainError("operating point: table speed and weight on bit must be positive");
    }
}

double equilibrium_twist(const BitRockModel& model, const WobRatio& r, const LumpedDrillString& ds,
                         const OperatingPoint& op) {
    return torque(model, r, op.omega) * kKiloNewton / ds.k_eq();
}

Eigen::Matrix2d jacobian_1dof(const BitRockModel& model, const WobRatio& r, const LumpedDrillString& ds,
                              const OperatingPoint& op) {
    const double wn = ds.natural_frequency();
    const double xi = ds.damping_ratio();
    const double dt = torque_derivative(model, r, op.omega) * kKiloNewton;
    Eigen::Matrix2d a;
    a << 0.0, 1.0, -wn * wn, -2.0 * wn * xi - dt / ds.i_eq();
    return a;
}

Eigen::Vector2d state_derivative(const BitRockModel& model, const WobRatio& r, const LumpedDrillString& ds,
                                 const OperatingPoint& op, const TorsionalState& x) {
    const double speed = std::max(x.theta_dot, 0.0);
    const double tb = r.ratio() * detail::unit_torque(model.kind(), model.params().data(), speed) * kKiloNewton;
    const double acc = (ds.k_eq() * (op.omega * x.time - x.theta) + ds.c_eq() * (op.omega - x.theta_dot) - tb) /
                       ds.i_eq();
    return {x.theta_dot, acc};
}

std::vector<TorsionalState> simulate(const BitRockModel& model, const WobRatio& r, const LumpedDrillString& ds,
                                     const OperatingPoint& op, const TorsionalState& initial, double t_end,
                                     double dt) {
    if (!positive_finite(dt) || !(t_end > dt) || !std::isfinite(t_end)) {
        throw DomainError("simulate: need dt > 0 and t_end > dt");
    }
    if (!std::isfinite(initial.theta) || !std::isfinite(initial.theta_dot) || !std::isfinite(initial.time)) {
        throw DomainError("simulate: non-finite initial state");
    }
    const double ratio = t_end / dt;
    const double rounded = std::round(ratio);
    const auto steps = static_cast<std::size_t>(std::abs(ratio - rounded) < 1e-9 * ratio ? rounded : std::ceil(ratio));

    std::vector<TorsionalState> out;
    out.reserve(steps + 1);
    out.push_back(initial);

    auto f = [&](double t, double th, double thd) {
        return state_derivative(model, r, ds, op, TorsionalState{th, thd, t});
    };

    TorsionalState x = initial;
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = initial.time + static_cast<double>(i) * dt;
        const Eigen::Vector2d k1 = f(t, x.theta, x.theta_dot);
        const Eigen::Vector2d k2 = f(t + 0.5 * dt, x.theta + 0.5 * dt * k1[0], x.theta_dot + 0.5 * dt * k1[1]);
        const Eigen::Vector2d k3 = f(t + 0.5 * dt, x.theta + 0.5 * dt * k2[0], x.theta_dot + 0.5 * dt * k2[1]);
        const Eigen::Vector2d k4 = f(t + dt, x.theta + dt * k3[0], x.theta_dot + dt * k3[1]);
        TorsionalState next;
        next.theta = x.theta + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        next.theta_dot = x.theta_dot + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        next.time = initial.time + static_cast<double>(i + 1) * dt;
        if (!std::isfinite(next.theta) || !std::isfinite(next.theta_dot)) {
            throw IntegrationError("simulate: state diverged", x.time);
        }
        if (next.theta_dot < 0.0) next.theta_dot = 0.0;
        out.push_back(next);
        x = next;
    }
    return out;
}

}  // namespace drillabc
