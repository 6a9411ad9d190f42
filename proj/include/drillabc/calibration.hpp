#pragma once

#include "drillabc/bitrock.hpp"
#include "drillabc/dataio.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace drillabc {

// Relative residual energy ‖y − A(φ)‖² / ‖y‖² over the calibration split,
// with the data copied once so repeated evaluation allocates nothing.
class ResidualMetric {
public:
    ResidualMetric(const TorqueDataset& dataset, const WobRatio& r);

    double operator()(ModelKind kind, const double* params) const noexcept;
    double operator()(const BitRockModel& model) const { return (*this)(model.kind(), model.params().data()); }

    std::size_t size() const noexcept { return speeds_.size(); }

private:
    std::vector<double> speeds_;
    std::vector<double> torques_;
    double ratio_;
    double inv_norm2_;
};

double metric(const TorqueDataset& dataset, const BitRockModel& model, const WobRatio& r);

struct ParameterBounds {
    std::vector<double> lower;
    std::vector<double> upper;

    // Sign constraints of the model (0 lower bound on strictly positive
    // parameters), unbounded elsewhere.
    static ParameterBounds defaults(ModelKind kind);
    bool contains(const std::vector<double>& x) const;
    void project(std::vector<double>& x) const;
};

struct FitOptions {
    std::size_t max_evaluations = 50000;
    double diameter_tol = 1e-8;
    double spread_tol = 1e-12;
    double initial_step = 0.05;
    int max_restarts = 20;
};

struct FitResult {
    BitRockModel model;
    double metric_value;
    std::size_t iterations;  // objective evaluations
    bool converged;
};

// Nelder–Mead minimisation of the metric with projection onto the bounds.
// Restarts from the best vertex until a restart stops improving. Hitting the
// evaluation cap returns converged = false with the best point found.
FitResult fit(const TorqueDataset& dataset, ModelKind kind, const WobRatio& r, const std::vector<double>& initial,
              const std::optional<ParameterBounds>& bounds = std::nullopt, const FitOptions& options = {});

// Best of `starts` fits: the initial point plus jittered copies
// initial·(1 + jitter·N(0,1)). Starts run in parallel; output depends only
// on the seed.
FitResult fit_multistart(const TorqueDataset& dataset, ModelKind kind, const WobRatio& r,
                         const std::vector<double>& initial, int starts = 5, double jitter = 0.1,
                         std::uint64_t seed = 0, const FitOptions& options = {});

}  // namespace drillabc
