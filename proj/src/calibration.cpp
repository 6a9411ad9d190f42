#include "drillabc/calibration.hpp"

#include "drillabc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace drillabc {

ResidualMetric::ResidualMetric(const TorqueDataset& dataset, const WobRatio& r) : ratio_(r.ratio()) {
    double norm2 = 0.0;
    for (const auto& s : dataset.samples) {
        if (s.split != Split::Calibration) continue;
        speeds_.push_back(s.speed);
        torques_.push_back(s.torque);
        norm2 += s.torque * s.torque;
    }
    if (speeds_.size() < 3) {
        throw DataError("need at least 3 calibration samples, have " + std::to_string(speeds_.size()));
    }
    if (!(norm2 > 0.0)) throw DataError("all calibration torques are zero; metric undefined");
    inv_norm2_ = 1.0 / norm2;
}

double ResidualMetric::operator()(ModelKind kind, const double* params) const noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < speeds_.size(); ++i) {
        const double e = torques_[i] - ratio_ * detail::unit_torque(kind, params, speeds_[i]);
        acc += e * e;
    }
    return acc * inv_norm2_;
}

double metric(const TorqueDataset& dataset, const BitRockModel& model, const WobRatio& r) {
    return ResidualMetric(dataset, r)(model);
}

ParameterBounds ParameterBounds::defaults(ModelKind kind) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const auto n = parameter_count(kind);
    ParameterBounds b{std::vector<double>(n, -inf), std::vector<double>(n, inf)};
    switch (kind) {
        case ModelKind::TanhRational: b.lower[1] = 0.0; b.lower[3] = 0.0; break;
        case ModelKind::ExponentialDecay: b.lower[0] = 0.0; b.lower[1] = 0.0; b.lower[2] = 0.0; break;
        case ModelKind::BumpTanh: b.lower[1] = 0.0; b.lower[5] = 0.0; break;
        case ModelKind::Cubic: break;
    }
    return b;
}

bool ParameterBounds::contains(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    }
    return true;
}

void ParameterBounds::project(std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
}

namespace {

struct Vertex {
    std::vector<double> x;
    double f;
};

class Minimizer {
public:
    Minimizer(const ResidualMetric& metric, ModelKind kind, const ParameterBounds& bounds, const FitOptions& opt)
        : metric_(metric), kind_(kind), bounds_(bounds), opt_(opt), n_(parameter_count(kind)) {}

    double evaluate(std::vector<double>& x) {
        bounds_.project(x);
        ++evaluations_;
        if (!BitRockModel::satisfies_invariants(kind_, x)) return std::numeric_limits<double>::infinity();
        const double f = metric_(kind_, x.data());
        return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    }

    bool exhausted() const { return evaluations_ >= opt_.max_evaluations; }
    std::size_t evaluations() const { return evaluations_; }

    // One Nelder–Mead run from `start`; returns the best vertex and whether
    // the tolerance test (rather than the budget) stopped it.
    std::pair<Vertex, bool> run(const Vertex& start) {
        const double dn = static_cast<double>(n_);
        // Dimension-adaptive coefficients (Gao & Han).
        const double c_reflect = 1.0;
        const double c_expand = 1.0 + 2.0 / dn;
        const double c_contract = 0.75 - 0.5 / dn;
        const double c_shrink = 1.0 - 1.0 / dn;

        std::vector<Vertex> s;
        s.push_back(start);
        for (std::size_t i = 0; i < n_; ++i) {
            Vertex v{start.x, 0.0};
            const double step = start.x[i] != 0.0 ? opt_.initial_step * std::abs(start.x[i]) : 2.5e-4;
            v.x[i] += step;
            if (v.x[i] > bounds_.upper[i]) v.x[i] = start.x[i] - step;
            v.f = evaluate(v.x);
            s.push_back(std::move(v));
        }

        auto order = [&] {
            std::stable_sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
        };
        std::vector<double> centroid(n_), trial(n_);
        auto along = [&](double coef) {
            for (std::size_t i = 0; i < n_; ++i) trial[i] = centroid[i] + coef * (centroid[i] - s.back().x[i]);
            std::vector<double> t = trial;
            const double f = evaluate(t);
            return Vertex{std::move(t), f};
        };

        while (true) {
            order();
            if (converged(s)) return {s.front(), true};
            if (exhausted()) return {s.front(), false};

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t j = 0; j < n_; ++j) {
                for (std::size_t i = 0; i < n_; ++i) centroid[i] += s[j].x[i] / dn;
            }
            Vertex r = along(c_reflect);
            if (r.f < s.front().f) {
                Vertex e = along(c_reflect * c_expand);
                s.back() = e.f < r.f ? std::move(e) : std::move(r);
                continue;
            }
            if (r.f < s[n_ - 1].f) {
                s.back() = std::move(r);
                continue;
            }
            Vertex c = r.f < s.back().f ? along(c_reflect * c_contract) : along(-c_contract);
            if (c.f < std::min(r.f, s.back().f)) {
                s.back() = std::move(c);
                continue;
            }
            for (std::size_t j = 1; j <= n_; ++j) {
                for (std::size_t i = 0; i < n_; ++i) s[j].x[i] = s[0].x[i] + c_shrink * (s[j].x[i] - s[0].x[i]);
                s[j].f = evaluate(s[j].x);
            }
        }
    }

private:
    bool converged(const std::vector<Vertex>& s) const {
        const auto& best = s.front();
        if (std::isfinite(s.back().f) && s.back().f - best.f < opt_.spread_tol) return true;
        double diam = 0.0;
        for (std::size_t j = 1; j < s.size(); ++j) {
            for (std::size_t i = 0; i < n_; ++i) {
                const double scale = std::max(std::abs(best.x[i]), 1e-10);
                diam = std::max(diam, std::abs(s[j].x[i] - best.x[i]) / scale);
            }
        }
        return diam < opt_.diameter_tol;
    }

    const ResidualMetric& metric_;
    ModelKind kind_;
    const ParameterBounds& bounds_;
    const FitOptions& opt_;
    std::size_t n_;
    std::size_t evaluations_ = 0;
};

}  // namespace

FitResult fit(const TorqueDataset& dataset, ModelKind kind, const WobRatio& r, const std::vector<double>& initial,
              const std::optional<ParameterBounds>& bounds, const FitOptions& options) {
    const ResidualMetric rho(dataset, r);
    const ParameterBounds b = bounds.value_or(ParameterBounds::defaults(kind));
    if (initial.size() != parameter_count(kind) || b.lower.size() != initial.size() ||
        b.upper.size() != initial.size()) {
        throw DomainError("fit: initial point / bounds do not match " + model_name(kind));
    }
    if (!BitRockModel::satisfies_invariants(kind, initial) || !b.contains(initial)) {
        throw DomainError("fit: initial point violates model invariants or bounds");
    }

    Minimizer nm(rho, kind, b, options);
    Vertex best{initial, 0.0};
    best.f = nm.evaluate(best.x);
    bool converged = false;
    for (int restart = 0; restart <= options.max_restarts; ++restart) {
        auto [v, ok] = nm.run(best);
        converged = ok;
        const bool improved = v.f < best.f - options.spread_tol;
        if (v.f < best.f) best = std::move(v);
        if (!ok || !improved) break;
    }
    return {BitRockModel(kind, best.x), best.f, nm.evaluations(), converged};
}

FitResult fit_multistart(const TorqueDataset& dataset, ModelKind kind, const WobRatio& r,
                         const std::vector<double>& initial, int starts, double jitter, std::uint64_t seed,
                         const FitOptions& options) {
    if (starts < 1) throw DomainError("fit_multistart: need at least one start");
    const ParameterBounds b = ParameterBounds::defaults(kind);

    std::vector<std::vector<double>> inits{initial};
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    while (static_cast<int>(inits.size()) < starts) {
        std::vector<double> x = initial;
        for (int attempt = 0; attempt < 100; ++attempt) {
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = initial[i] * (1.0 + jitter * normal(gen));
            b.project(x);
            if (BitRockModel::satisfies_invariants(kind, x)) break;
            x = initial;
        }
        inits.push_back(std::move(x));
    }

    // Validate on the calling thread so errors surface as exceptions.
    (void)ResidualMetric(dataset, r);
    std::vector<std::optional<FitResult>> results(inits.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(inits.size()); ++i) {
        results[static_cast<std::size_t>(i)] = fit(dataset, kind, r, inits[static_cast<std::size_t>(i)], b, options);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (results[i]->metric_value < results[best]->metric_value) best = i;
    }
    return *results[best];
}

}  // namespace drillabc
