#pragma once

#include "drillabc/bitrock.hpp"
#include "drillabc/dynamics.hpp"
#include "drillabc/fem.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace drillabc {

using Plant = std::variant<LumpedDrillString, FemTorsionalModel>;

// Largest eigenvalue real part must be below -kStabilityTie; anything
// closer to the imaginary axis counts as unstable.
inline constexpr double kStabilityTie = 1e-10;

// Stability test for one plant as a function of the bit-rock slope alone
// (N·m·s/rad). Everything that does not depend on the slope is factored out
// once, so a map costs one small eigenproblem per evaluation.
class StabilityKernel {
public:
    explicit StabilityKernel(const Plant& plant);

    bool stable(double slope) const;
    double abscissa(double slope) const;

private:
    bool lumped_;
    double omega_sq_ = 0.0;
    double damping_term_ = 0.0;  // 2·ω_n·ξ
    double inv_inertia_ = 0.0;
    Eigen::MatrixXd base_;       // FE Jacobian with zero slope
    Eigen::VectorXd bit_column_; // M⁻¹ e_bit
};

// Eigenvalues of the assembled Jacobian (1-DOF or FE).
bool classify(const BitRockModel& model, const Plant& plant, const OperatingPoint& op, double w_ref = kReferenceWob);

// 1-DOF only: sign of the Jacobian trace.
bool classify_by_trace(const BitRockModel& model, const LumpedDrillString& ds, const OperatingPoint& op,
                       double w_ref = kReferenceWob);

struct GridSpec {
    double omega_min = 1.0;   // rad/s
    double omega_max = 20.0;
    double wob_min = 0.2 * kReferenceWob;  // kN
    double wob_max = 3.0 * kReferenceWob;
    int n_omega = 80;
    int n_wob = 80;
    double w_ref = kReferenceWob;
    int bisection_steps = 10;

    void validate() const;
    std::vector<double> omega_axis() const;
    std::vector<double> wob_axis() const;
    double omega_step() const { return (omega_max - omega_min) / (n_omega - 1); }
    double wob_step() const { return (wob_max - wob_min) / (n_wob - 1); }
};

struct StabilityGrid {
    std::vector<double> omega_axis;  // rad/s
    std::vector<double> wob_axis;    // kN
    double w_ref = kReferenceWob;
    // Row-major by omega: index i·n_wob + j.
    std::vector<std::uint8_t> stable;
    std::vector<double> probability;  // P(unstable); 0/1 for a single model
    std::string source;

    std::size_t index(std::size_t i, std::size_t j) const { return i * wob_axis.size() + j; }
    bool is_stable(std::size_t i, std::size_t j) const { return stable[index(i, j)] != 0; }
};

struct BoundaryPoint {
    double omega;
    double wob;
    // Consecutive columns with one crossing each share a branch; a column
    // without a crossing, or a multi-valued column, starts a new one.
    int branch = 0;

    bool operator==(const BoundaryPoint&) const = default;
};

struct BoundaryCurve {
    std::vector<BoundaryPoint> points;  // ascending omega
    bool monotone = true;     // W strictly increasing with omega
    bool multivalued = false; // some column crosses more than once

    bool operator==(const BoundaryCurve&) const = default;
};

struct StabilityMap {
    StabilityGrid grid;
    BoundaryCurve boundary;
};

// Classification of every grid node, then one boundary point per column by
// bisection in W between the straddling nodes. Columns with more than one
// crossing emit the node midpoints and set multivalued.
StabilityMap map_deterministic(const BitRockModel& model, const Plant& plant, const GridSpec& spec = {},
                               const std::string& source = "map");

// P(unstable) over the particles; boundary where P first reaches percentile.
StabilityMap map_stochastic(std::span<const BitRockModel> particles, const Plant& plant, const GridSpec& spec,
                            double percentile, const std::string& source = "posterior");

struct MixtureComponent {
    std::span<const BitRockModel> particles;
    double weight;
};

// Weighted P(unstable); boundary cut at the smallest of the components' own
// largest boundary speeds.
StabilityMap map_mixture(const std::vector<MixtureComponent>& components, const Plant& plant, const GridSpec& spec,
                         double percentile, const std::string& source = "mixture");

namespace reference {

StabilityMap map_deterministic(const BitRockModel& model, const Plant& plant, const GridSpec& spec = {},
                               const std::string& source = "map");
StabilityMap map_stochastic(std::span<const BitRockModel> particles, const Plant& plant, const GridSpec& spec,
                            double percentile, const std::string& source = "posterior");
StabilityMap map_mixture(const std::vector<MixtureComponent>& components, const Plant& plant, const GridSpec& spec,
                         double percentile, const std::string& source = "mixture");

}  // namespace reference

// Symmetric Hausdorff distance between two boundary polylines (points of one
// against the branch segments of the other) with each axis scaled by the grid step
// and the Chebyshev norm, so 1 means one grid cell. Each branch is extended
// linearly by one omega step past its ends. Two
// empty curves are at distance 0, one empty curve at +inf.
double boundary_distance_cells(const BoundaryCurve& a, const BoundaryCurve& b, const GridSpec& spec);

}  // namespace drillabc
