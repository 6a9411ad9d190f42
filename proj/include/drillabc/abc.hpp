#pragma once

#include "drillabc/bitrock.hpp"
#include "drillabc/calibration.hpp"
#include "drillabc/dataio.hpp"
#include "drillabc/errors.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace drillabc {

// Counter-based generator: the stream for one ABC attempt is a pure function
// of (seed, population, attempt), so any evaluation order gives the same
// draws.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t population, std::uint64_t attempt);
    explicit CounterRng(std::uint64_t seed) : CounterRng(seed, 0, 0) {}

    std::uint64_t next() noexcept;
    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

// Independent uniform box φ̂_j·(1 ± δ), endpoints ordered so lower < upper.
struct PriorSpec {
    ModelKind kind;
    double delta;
    std::vector<double> center;
    std::vector<double> lower;
    std::vector<double> upper;

    void sample(CounterRng& rng, double* out) const noexcept;
    bool contains(std::span<const double> phi) const;
};

PriorSpec build_prior(const BitRockModel& center, double delta);
std::vector<PriorSpec> build_priors(std::span<const FitResult> fits, double delta);

// Discrete prior over the four models.
struct ModelPrior {
    std::array<double, 4> probability{0.25, 0.25, 0.25, 0.25};

    static ModelPrior uniform() { return {}; }
    static ModelPrior only(ModelKind k);
    void validate() const;
    ModelKind sample(double u) const noexcept;
};

struct Particle {
    ModelKind kind;
    std::vector<double> phi;
    double distance;

    bool operator==(const Particle&) const = default;
};

struct Population {
    double tolerance;  // +inf for the accept-all first population
    std::vector<Particle> particles;
    std::uint64_t attempts = 0;
    std::array<std::uint64_t, 4> attempts_per_model{};
    std::array<std::uint64_t, 4> accepted_per_model{};

    bool operator==(const Population&) const = default;
};

enum class Termination { FloorReached, MaxPopulations };

struct AbcOptions {
    std::size_t n = 1000;  // particles per population
    double eps_floor = 0.014;
    std::size_t max_populations = 20;
    std::uint64_t seed = 0;
    double stall_rate = 1e-5;
    std::uint64_t stall_window = 2'000'000;  // attempts
    std::size_t block_size = 8192;           // attempts evaluated per parallel batch

    void validate() const;
};

struct AbcState {
    std::vector<Population> populations;
    AbcOptions options;
    ModelPrior model_prior;
    std::vector<PriorSpec> priors;
    Termination termination = Termination::MaxPopulations;

    std::vector<double> tolerances() const;
    const Population& population(std::size_t g) const;  // 1-based

    bool operator==(const AbcState& o) const {
        return populations == o.populations && termination == o.termination;
    }
};

// Acceptance rate collapsed; carries the populations completed so far.
class AbcStallError : public StallError {
public:
    AbcStallError(const std::string& what, double tolerance, AbcState partial)
        : StallError(what, tolerance), partial_(std::move(partial)) {}
    const AbcState& partial() const noexcept { return partial_; }

private:
    AbcState partial_;
};

// Rejection sampler with joint model selection. Population 1 accepts every
// draw; each later tolerance is the median distance of the previous
// population. Stops after the first population whose tolerance is at or
// below eps_floor, or after max_populations. Attempts are evaluated in
// parallel blocks and accepted in attempt order.
AbcState run(const TorqueDataset& dataset, const WobRatio& r, const std::vector<PriorSpec>& priors,
             const ModelPrior& model_prior, const AbcOptions& options);

namespace reference {

// One attempt at a time, no threading. Same output as drillabc::run.
AbcState run_serial(const TorqueDataset& dataset, const WobRatio& r, const std::vector<PriorSpec>& priors,
                    const ModelPrior& model_prior, const AbcOptions& options);

}  // namespace reference

// Acceptance frequencies per model in population g (1-based).
struct ModelPosterior {
    std::array<std::size_t, 4> counts{};
    std::size_t total = 0;

    double probability(ModelKind k) const {
        return total == 0 ? 0.0 : static_cast<double>(counts[static_cast<std::size_t>(model_index(k) - 1)]) /
                                      static_cast<double>(total);
    }
};

ModelPosterior model_posterior(const AbcState& state, std::size_t g);

std::vector<BitRockModel> particle_models(const AbcState& state, std::size_t g, ModelKind kind);

struct Marginal {
    std::string name;
    double lower;
    double upper;
    std::vector<std::size_t> counts;
    std::vector<double> density;  // histogram, integrates to 1 over the box
    std::vector<double> kde;      // Gaussian KDE at bin centres
    double mean;
    double stddev;
};

struct PosteriorStats {
    ModelKind kind;
    std::size_t count;
    std::vector<Marginal> marginals;
    Eigen::MatrixXd correlation;  // Pearson; rows of constant parameters are 0 off-diagonal
    std::vector<bool> constant;   // zero-variance parameter flags
};

// Histograms over the prior box (fixed binning) and Pearson correlations of
// the model-k particles in population g.
PosteriorStats posterior_stats(const AbcState& state, std::size_t g, const PriorSpec& prior, int bins = 64);

struct EnvelopePoint {
    double speed;
    double low;
    double median;
    double high;
};

// Pointwise (1−coverage)/2 and 1−(1−coverage)/2 quantiles (linear
// interpolation between order statistics) of the particle torque curves.
std::vector<EnvelopePoint> predictive_envelope(const AbcState& state, std::size_t g, ModelKind kind,
                                               const std::vector<double>& speeds, double coverage,
                                               const WobRatio& r = WobRatio::unit());

// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

}  // namespace drillabc
