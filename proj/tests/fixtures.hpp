#pragma once

// Shared synthetic ABC setup: M3 generator, noise 0.8 kN·m, priors δ = 0.4
// centred on least-squares fits started from the published estimates.

#include "drillabc/abc.hpp"
#include "drillabc/calibration.hpp"
#include "drillabc/dataio.hpp"

#include <vector>

namespace fixture {

using namespace drillabc;

inline TorqueDataset synthetic_m3(std::uint64_t seed, double noise = 0.8) {
    return synthesize(published_estimate(ModelKind::BumpTanh), WobRatio::unit(), default_speed_grid(), noise, seed);
}

inline std::vector<FitResult> ls_fits(const TorqueDataset& d) {
    std::vector<FitResult> fits;
    for (auto k : kAllModels) {
        const auto m = published_estimate(k);
        fits.push_back(fit_multistart(d, k, WobRatio::unit(), std::vector<double>(m.params().begin(), m.params().end()),
                                      1, 0.1, 0));
    }
    return fits;
}

struct Run {
    TorqueDataset data;
    std::vector<PriorSpec> priors;
    AbcState state;
};

inline Run synthetic_m3_run(std::uint64_t seed, std::size_t n, double eps_floor = 0.014) {
    Run run;
    run.data = synthetic_m3(seed);
    const auto fits = ls_fits(run.data);
    run.priors = build_priors(fits, 0.4);
    AbcOptions opt;
    opt.n = n;
    opt.eps_floor = eps_floor;
    opt.seed = seed;
    run.state = drillabc::run(run.data, WobRatio::unit(), run.priors, ModelPrior::uniform(), opt);
    return run;
}

}  // namespace fixture
