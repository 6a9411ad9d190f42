#include "drillabc/stability.hpp"

#include "drillabc/errors.hpp"
#include "drillabc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace drillabc {

StabilityKernel::StabilityKernel(const Plant& plant) : lumped_(std::holds_alternative<LumpedDrillString>(plant)) {
    if (lumped_) {
        const auto& ds = std::get<LumpedDrillString>(plant);
        omega_sq_ = ds.k_eq() / ds.i_eq();
        damping_term_ = ds.c_eq() / ds.i_eq();
        inv_inertia_ = 1.0 / ds.i_eq();
        return;
    }
    const auto& fem = std::get<FemTorsionalModel>(plant);
    const int n = fem.n_el();
    base_ = jacobian_fem_from_slope(fem, 0.0);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(n - 1) = 1.0;
    bit_column_ = fem.mass().llt().solve(e);
}

double StabilityKernel::abscissa(double slope) const {
    if (lumped_) {
        // Closed-form roots of λ² − tr·λ + det.
        const double half_trace = -0.5 * (damping_term_ + slope * inv_inertia_);
        const double disc = half_trace * half_trace - omega_sq_;
        return disc > 0.0 ? half_trace + std::sqrt(disc) : half_trace;
    }
    Eigen::MatrixXd a = base_;
    const auto n = bit_column_.size();
    a.col(2 * n - 1).tail(n) -= slope * bit_column_;
    return spectral_abscissa(a);
}

bool StabilityKernel::stable(double slope) const { return abscissa(slope) < -kStabilityTie; }

bool classify(const BitRockModel& model, const Plant& plant, const OperatingPoint& op, double w_ref) {
    const WobRatio r(op.wob, w_ref);
    if (const auto* ds = std::get_if<LumpedDrillString>(&plant)) {
        const Eigen::MatrixXd j = jacobian_1dof(model, r, *ds, op);
        return spectral_abscissa(j) < -kStabilityTie;
    }
    return spectral_abscissa(jacobian_fem(std::get<FemTorsionalModel>(plant), model, r, op)) < -kStabilityTie;
}

bool classify_by_trace(const BitRockModel& model, const LumpedDrillString& ds, const OperatingPoint& op,
                       double w_ref) {
    const Eigen::Matrix2d j = jacobian_1dof(model, WobRatio(op.wob, w_ref), ds, op);
    return 0.5 * j.trace() < -kStabilityTie;
}

void GridSpec::validate() const {
    if (!(omega_min > 0.0 && omega_max > omega_min)) throw DomainError("grid: need 0 < omega_min < omega_max");
    if (!(wob_min > 0.0 && wob_max > wob_min)) throw DomainError("grid: need 0 < wob_min < wob_max");
    if (n_omega < 2 || n_wob < 2) throw DomainError("grid: resolution must be >= 2 per axis");
    if (!(w_ref > 0.0)) throw DomainError("grid: w_ref must be > 0");
    if (bisection_steps < 0) throw DomainError("grid: bisection_steps must be >= 0");
}

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    v.back() = b;
    return v;
}

}  // namespace

std::vector<double> GridSpec::omega_axis() const { return linspace(omega_min, omega_max, n_omega); }
std::vector<double> GridSpec::wob_axis() const { return linspace(wob_min, wob_max, n_wob); }

namespace {

// Absorbs the rounding of weighted sums such as 0.4·p + 0.6·p.
constexpr double kLevelSlack = 1e-12;

struct Component {
    std::span<const BitRockModel> particles;
    double weight;
};

struct ColumnResult {
    std::vector<BoundaryPoint> points;
    bool multivalued = false;
    std::vector<bool> covered;  // per component: its own level set crosses this column
    std::exception_ptr error;
};

class MapEngine {
public:
    MapEngine(std::vector<Component> comps, const Plant& plant, const GridSpec& spec, double level)
        : comps_(std::move(comps)), kernel_(plant), spec_(spec), level_(level),
          omega_(spec.omega_axis()), wob_(spec.wob_axis()) {}

    StabilityMap run(bool parallel, const std::string& source, bool truncate) const {
        const auto n_omega = omega_.size();
        const auto n_wob = wob_.size();
        StabilityMap out;
        out.grid.omega_axis = omega_;
        out.grid.wob_axis = wob_;
        out.grid.w_ref = spec_.w_ref;
        out.grid.source = source;
        out.grid.stable.assign(n_omega * n_wob, 0);
        out.grid.probability.assign(n_omega * n_wob, 0.0);

        std::vector<ColumnResult> cols(n_omega);
#pragma omp parallel for schedule(dynamic) if (parallel)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n_omega); ++i) {
            const auto c = static_cast<std::size_t>(i);
            try {
                cols[c] = column(c, out.grid);
            } catch (...) {
                cols[c].error = std::current_exception();
            }
        }
        for (const auto& c : cols) {
            if (c.error) std::rethrow_exception(c.error);
        }

        double cut = std::numeric_limits<double>::infinity();
        if (truncate) {
            for (std::size_t k = 0; k < comps_.size(); ++k) {
                double last = -std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < n_omega; ++i) {
                    if (cols[i].covered[k]) last = omega_[i];
                }
                cut = std::min(cut, last);
            }
        }

        auto& b = out.boundary;
        int branch = -1;
        bool continues = false;
        for (std::size_t i = 0; i < n_omega; ++i) {
            if (omega_[i] > cut) break;
            const auto& col = cols[i];
            b.multivalued = b.multivalued || col.multivalued;
            if (col.points.size() == 1 && continues) {
                b.points.push_back({col.points[0].omega, col.points[0].wob, branch});
            } else {
                for (const auto& p : col.points) b.points.push_back({p.omega, p.wob, ++branch});
            }
            continues = col.points.size() == 1;
        }
        b.monotone = !b.multivalued;
        for (std::size_t p = 1; p < b.points.size() && b.monotone; ++p) {
            if (!(b.points[p].wob > b.points[p - 1].wob)) b.monotone = false;
        }
        return out;
    }

private:
    // Unit-ratio slopes (kN·m·s/rad) of every particle at one speed.
    std::vector<std::vector<double>> slopes_at(double omega) const {
        std::vector<std::vector<double>> s(comps_.size());
        for (std::size_t k = 0; k < comps_.size(); ++k) {
            s[k].reserve(comps_[k].particles.size());
            for (const auto& m : comps_[k].particles) {
                s[k].push_back(detail::unit_torque_derivative(m.kind(), m.params().data(), omega));
            }
        }
        return s;
    }

    double component_probability(const std::vector<double>& slopes, double wob) const {
        const double scale = 1000.0 * wob / spec_.w_ref;
        std::size_t unstable = 0;
        for (double d : slopes) unstable += kernel_.stable(scale * d) ? 0 : 1;
        return static_cast<double>(unstable) / static_cast<double>(slopes.size());
    }

    double probability(const std::vector<std::vector<double>>& slopes, double wob, std::vector<double>* parts) const {
        double p = 0.0;
        for (std::size_t k = 0; k < comps_.size(); ++k) {
            if (comps_[k].weight == 0.0 && parts == nullptr) continue;
            const double pk = component_probability(slopes[k], wob);
            if (parts) (*parts)[k] = pk;
            p += comps_[k].weight * pk;
        }
        return p;
    }

    bool beyond(double p) const { return p >= level_ - kLevelSlack; }

    ColumnResult column(std::size_t i, StabilityGrid& grid) const {
        const auto slopes = slopes_at(omega_[i]);
        const auto n_wob = wob_.size();
        ColumnResult res;
        std::vector<bool> side(n_wob);
        std::vector<std::vector<bool>> comp_side(comps_.size(), std::vector<bool>(n_wob));
        std::vector<double> parts(comps_.size());
        for (std::size_t j = 0; j < n_wob; ++j) {
            const double p = probability(slopes, wob_[j], &parts);
            grid.probability[grid.index(i, j)] = p;
            side[j] = beyond(p);
            grid.stable[grid.index(i, j)] = side[j] ? 0 : 1;
            for (std::size_t k = 0; k < comps_.size(); ++k) comp_side[k][j] = beyond(parts[k]);
        }
        res.covered.resize(comps_.size());
        for (std::size_t k = 0; k < comps_.size(); ++k) {
            res.covered[k] = std::adjacent_find(comp_side[k].begin(), comp_side[k].end(),
                                                std::not_equal_to<>()) != comp_side[k].end();
        }

        std::vector<std::size_t> crossings;
        for (std::size_t j = 0; j + 1 < n_wob; ++j) {
            if (side[j] != side[j + 1]) crossings.push_back(j);
        }
        if (crossings.size() > 1) {
            res.multivalued = true;
            for (auto j : crossings) res.points.push_back({omega_[i], 0.5 * (wob_[j] + wob_[j + 1])});
        } else if (crossings.size() == 1) {
            const auto j = crossings.front();
            double lo = wob_[j];
            double hi = wob_[j + 1];
            for (int s = 0; s < spec_.bisection_steps; ++s) {
                const double mid = 0.5 * (lo + hi);
                if (beyond(probability(slopes, mid, nullptr)) == side[j]) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            res.points.push_back({omega_[i], 0.5 * (lo + hi)});
        }
        return res;
    }

    std::vector<Component> comps_;
    StabilityKernel kernel_;
    GridSpec spec_;
    double level_;
    std::vector<double> omega_;
    std::vector<double> wob_;
};

void check_level(double percentile) {
    if (!(percentile > 0.0 && percentile < 1.0)) throw DomainError("percentile must lie in (0, 1)");
}

void check_particles(std::span<const BitRockModel> particles) {
    if (particles.size() < 100) {
        throw InsufficientSampleError("stochastic map needs >= 100 particles, got " +
                                      std::to_string(particles.size()));
    }
}

StabilityMap deterministic_impl(const BitRockModel& model, const Plant& plant, const GridSpec& spec,
                                const std::string& source, bool parallel) {
    spec.validate();
    // A single particle is unstable with probability 0 or 1.
    MapEngine engine({{std::span<const BitRockModel>(&model, 1), 1.0}}, plant, spec, 0.5);
    return engine.run(parallel, source, false);
}

StabilityMap stochastic_impl(std::span<const BitRockModel> particles, const Plant& plant, const GridSpec& spec,
                             double percentile, const std::string& source, bool parallel) {
    spec.validate();
    check_level(percentile);
    check_particles(particles);
    MapEngine engine({{particles, 1.0}}, plant, spec, percentile);
    return engine.run(parallel, source, false);
}

StabilityMap mixture_impl(const std::vector<MixtureComponent>& components, const Plant& plant, const GridSpec& spec,
                          double percentile, const std::string& source, bool parallel) {
    spec.validate();
    check_level(percentile);
    if (components.empty()) throw DomainError("mixture: no components");
    double total = 0.0;
    std::vector<Component> comps;
    for (const auto& c : components) {
        if (!(c.weight >= 0.0)) throw DomainError("mixture: weights must be >= 0");
        check_particles(c.particles);
        total += c.weight;
        comps.push_back({c.particles, c.weight});
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("mixture: weights must sum to 1");
    MapEngine engine(std::move(comps), plant, spec, percentile);
    return engine.run(parallel, source, true);
}

}  // namespace

StabilityMap map_deterministic(const BitRockModel& model, const Plant& plant, const GridSpec& spec,
                               const std::string& source) {
    return deterministic_impl(model, plant, spec, source, true);
}

StabilityMap map_stochastic(std::span<const BitRockModel> particles, const Plant& plant, const GridSpec& spec,
                            double percentile, const std::string& source) {
    return stochastic_impl(particles, plant, spec, percentile, source, true);
}

StabilityMap map_mixture(const std::vector<MixtureComponent>& components, const Plant& plant, const GridSpec& spec,
                         double percentile, const std::string& source) {
    return mixture_impl(components, plant, spec, percentile, source, true);
}

namespace reference {

StabilityMap map_deterministic(const BitRockModel& model, const Plant& plant, const GridSpec& spec,
                               const std::string& source) {
    return deterministic_impl(model, plant, spec, source, false);
}

StabilityMap map_stochastic(std::span<const BitRockModel> particles, const Plant& plant, const GridSpec& spec,
                            double percentile, const std::string& source) {
    return stochastic_impl(particles, plant, spec, percentile, source, false);
}

StabilityMap map_mixture(const std::vector<MixtureComponent>& components, const Plant& plant, const GridSpec& spec,
                         double percentile, const std::string& source) {
    return mixture_impl(components, plant, spec, percentile, source, false);
}

}  // namespace reference

double boundary_distance_cells(const BoundaryCurve& a, const BoundaryCurve& b, const GridSpec& spec) {
    if (a.points.empty() && b.points.empty()) return 0.0;
    if (a.points.empty() || b.points.empty()) return std::numeric_limits<double>::infinity();
    const double dw = spec.omega_step();
    const double dl = spec.wob_step();
    // Chebyshev distance from p to the segment q0-q1 in cell units. The
    // distance along the segment is convex in t, so ternary search is exact
    // to rounding.
    auto to_segment = [&](const BoundaryPoint& p, const BoundaryPoint& q0, const BoundaryPoint& q1) {
        const double x0 = (q0.omega - p.omega) / dw, y0 = (q0.wob - p.wob) / dl;
        const double x1 = (q1.omega - p.omega) / dw, y1 = (q1.wob - p.wob) / dl;
        auto f = [&](double t) { return std::max(std::abs(x0 + t * (x1 - x0)), std::abs(y0 + t * (y1 - y0))); };
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 100; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (f(m1) <= f(m2)) hi = m2;
            else lo = m1;
        }
        return std::min({f(0.0), f(1.0), f(0.5 * (lo + hi))});
    };
    // Segments of each branch, extended linearly by one omega step at both
    // ends: a branch ends where the curve leaves the window between two
    // columns, which the grid itself cannot resolve.
    auto segments = [&](const BoundaryCurve& y) {
        std::vector<std::pair<BoundaryPoint, BoundaryPoint>> segs;
        std::size_t i = 0;
        while (i < y.points.size()) {
            std::size_t j = i;
            while (j + 1 < y.points.size() && y.points[j + 1].branch == y.points[i].branch) ++j;
            if (j == i) {
                segs.emplace_back(y.points[i], y.points[i]);
            } else {
                auto extend = [&](const BoundaryPoint& end, const BoundaryPoint& inner) {
                    const double f = dw / std::abs(end.omega - inner.omega);
                    return BoundaryPoint{end.omega + f * (end.omega - inner.omega), end.wob + f * (end.wob - inner.wob),
                                         end.branch};
                };
                segs.emplace_back(extend(y.points[i], y.points[i + 1]), y.points[i]);
                for (std::size_t m = i; m < j; ++m) segs.emplace_back(y.points[m], y.points[m + 1]);
                segs.emplace_back(y.points[j], extend(y.points[j], y.points[j - 1]));
            }
            i = j + 1;
        }
        return segs;
    };
    auto directed = [&](const BoundaryCurve& x, const BoundaryCurve& y) {
        const auto segs = segments(y);
        double worst = 0.0;
        for (const auto& p : x.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& [q0, q1] : segs) best = std::min(best, to_segment(p, q0, q1));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

}  // namespace drillabc
