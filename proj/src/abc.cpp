#include "drillabc/abc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace drillabc {

namespace {

std::uint64_t splitmix(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::size_t slot(ModelKind k) { return static_cast<std::size_t>(model_index(k) - 1); }

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t population, std::uint64_t attempt)
    : state_(splitmix(splitmix(splitmix(seed) ^ population) ^ attempt)) {}

std::uint64_t CounterRng::next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void PriorSpec::sample(CounterRng& rng, double* out) const noexcept {
    for (std::size_t j = 0; j < lower.size(); ++j) out[j] = lower[j] + (upper[j] - lower[j]) * rng.uniform();
}

bool PriorSpec::contains(std::span<const double> phi) const {
    if (phi.size() != lower.size()) return false;
    for (std::size_t j = 0; j < phi.size(); ++j) {
        if (phi[j] < lower[j] || phi[j] > upper[j]) return false;
    }
    return true;
}

PriorSpec build_prior(const BitRockModel& center, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("build_prior: delta must lie in (0, 1)");
    PriorSpec p{center.kind(), delta, {}, {}, {}};
    for (double c : center.params()) {
        if (c == 0.0) {
            throw DomainError("build_prior: zero least-squares estimate gives a zero-width interval for " +
                              model_name(center.kind()));
        }
        const double a = c * (1.0 - delta);
        const double b = c * (1.0 + delta);
        p.center.push_back(c);
        p.lower.push_back(std::min(a, b));
        p.upper.push_back(std::max(a, b));
    }
    return p;
}

std::vector<PriorSpec> build_priors(std::span<const FitResult> fits, double delta) {
    std::vector<PriorSpec> out;
    out.reserve(fits.size());
    for (const auto& f : fits) out.push_back(build_prior(f.model, delta));
    return out;
}

ModelPrior ModelPrior::only(ModelKind k) {
    ModelPrior p;
    p.probability.fill(0.0);
    p.probability[slot(k)] = 1.0;
    return p;
}

void ModelPrior::validate() const {
    double sum = 0.0;
    for (double v : probability) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("model prior: probabilities must be >= 0");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw DomainError("model prior: probabilities must sum to 1");
}

ModelKind ModelPrior::sample(double u) const noexcept {
    double acc = 0.0;
    int last = 0;
    for (int i = 0; i < 4; ++i) {
        if (probability[static_cast<std::size_t>(i)] <= 0.0) continue;
        last = i;
        acc += probability[static_cast<std::size_t>(i)];
        if (u < acc) return static_cast<ModelKind>(i + 1);
    }
    return static_cast<ModelKind>(last + 1);
}

void AbcOptions::validate() const {
    if (n < 1) throw DomainError("abc: population size must be >= 1");
    if (!(eps_floor > 0.0)) throw DomainError("abc: eps_floor must be > 0");
    if (max_populations < 1) throw DomainError("abc: max_populations must be >= 1");
    if (block_size < 1 || stall_window < 1) throw DomainError("abc: block size and stall window must be >= 1");
}

std::vector<double> AbcState::tolerances() const {
    std::vector<double> t;
    for (const auto& p : populations) t.push_back(p.tolerance);
    return t;
}

const Population& AbcState::population(std::size_t g) const {
    if (g < 1 || g > populations.size()) {
        throw DomainError("population " + std::to_string(g) + " does not exist (have " +
                          std::to_string(populations.size()) + ")");
    }
    return populations[g - 1];
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw InsufficientSampleError("quantile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) {
    if (v.empty()) throw InsufficientSampleError("median of empty sample");
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return lower + 0.5 * (upper - lower);
}

namespace {

struct Trial {
    ModelKind kind;
    std::array<double, kMaxParameters> phi;
    double distance;
};

class Sampler {
public:
    Sampler(const TorqueDataset& dataset, const WobRatio& r, const std::vector<PriorSpec>& priors,
            const ModelPrior& model_prior, const AbcOptions& options)
        : rho_(dataset, r), model_prior_(model_prior), options_(options) {
        options_.validate();
        model_prior_.validate();
        prior_for_.fill(-1);
        for (std::size_t i = 0; i < priors.size(); ++i) {
            const auto& p = priors[i];
            if (p.lower.size() != parameter_count(p.kind) || p.upper.size() != p.lower.size()) {
                throw DomainError("abc: malformed prior for " + model_name(p.kind));
            }
            prior_for_[slot(p.kind)] = static_cast<int>(i);
        }
        for (auto k : kAllModels) {
            if (model_prior_.probability[slot(k)] > 0.0 && prior_for_[slot(k)] < 0) {
                throw DomainError("abc: " + model_name(k) + " has prior probability but no parameter prior");
            }
        }
        priors_ = priors;
    }

    Trial attempt(std::uint64_t g, std::uint64_t a) const noexcept {
        CounterRng rng(options_.seed, g, a);
        Trial t;
        t.kind = model_prior_.sample(rng.uniform());
        t.phi.fill(0.0);
        priors_[static_cast<std::size_t>(prior_for_[slot(t.kind)])].sample(rng, t.phi.data());
        t.distance = rho_(t.kind, t.phi.data());
        return t;
    }

    AbcState make_state() const {
        AbcState s;
        s.options = options_;
        s.model_prior = model_prior_;
        s.priors = priors_;
        return s;
    }

    const AbcOptions& options() const { return options_; }

private:
    ResidualMetric rho_;
    ModelPrior model_prior_;
    AbcOptions options_;
    std::vector<PriorSpec> priors_;
    std::array<int, 4> prior_for_{};
};

// Sliding-window acceptance tracker, updated once per full block.
class StallMonitor {
public:
    explicit StallMonitor(const AbcOptions& o)
        : window_blocks_(static_cast<std::size_t>((o.stall_window + o.block_size - 1) / o.block_size)),
          block_size_(o.block_size),
          rate_(o.stall_rate) {}

    bool stalled(std::uint64_t accepted_in_block) {
        blocks_.push_back(accepted_in_block);
        sum_ += accepted_in_block;
        if (blocks_.size() > window_blocks_) {
            sum_ -= blocks_.front();
            blocks_.pop_front();
        }
        if (blocks_.size() < window_blocks_) return false;
        const double attempts = static_cast<double>(window_blocks_ * block_size_);
        return static_cast<double>(sum_) < rate_ * attempts;
    }

private:
    std::size_t window_blocks_;
    std::size_t block_size_;
    double rate_;
    std::deque<std::uint64_t> blocks_;
    std::uint64_t sum_ = 0;
};

void record(Population& pop, const Trial& t, bool accepted) {
    ++pop.attempts;
    ++pop.attempts_per_model[slot(t.kind)];
    if (!accepted) return;
    ++pop.accepted_per_model[slot(t.kind)];
    const auto n = parameter_count(t.kind);
    pop.particles.push_back({t.kind, std::vector<double>(t.phi.begin(), t.phi.begin() + static_cast<std::ptrdiff_t>(n)),
                             t.distance});
}

[[noreturn]] void throw_stall(const AbcState& state, std::size_t g, double eps) {
    throw AbcStallError("abc: acceptance rate fell below threshold in population " + std::to_string(g) +
                            " at tolerance " + std::to_string(eps),
                        eps, state);
}

template <typename PopulationFn>
AbcState drive(const Sampler& sampler, PopulationFn&& generate) {
    AbcState state = sampler.make_state();
    const auto& opt = sampler.options();
    double eps = std::numeric_limits<double>::infinity();
    for (std::size_t g = 1;; ++g) {
        state.populations.push_back(generate(g, eps, state));
        if (eps <= opt.eps_floor) {
            state.termination = Termination::FloorReached;
            break;
        }
        if (g == opt.max_populations) {
            state.termination = Termination::MaxPopulations;
            break;
        }
        std::vector<double> d;
        d.reserve(opt.n);
        for (const auto& p : state.populations.back().particles) d.push_back(p.distance);
        eps = median(std::move(d));
    }
    return state;
}

}  // namespace

AbcState run(const TorqueDataset& dataset, const WobRatio& r, const std::vector<PriorSpec>& priors,
             const ModelPrior& model_prior, const AbcOptions& options) {
    const Sampler sampler(dataset, r, priors, model_prior, options);
    const auto block = options.block_size;
    std::vector<Trial> trials(block);

    return drive(sampler, [&](std::size_t g, double eps, const AbcState& state) {
        Population pop;
        pop.tolerance = eps;
        pop.particles.reserve(options.n);
        StallMonitor monitor(options);
        std::uint64_t base = 0;
        while (true) {
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(block); ++i) {
                trials[static_cast<std::size_t>(i)] = sampler.attempt(g, base + static_cast<std::uint64_t>(i));
            }
            std::uint64_t accepted = 0;
            for (std::size_t i = 0; i < block; ++i) {
                const bool ok = trials[i].distance < eps;
                record(pop, trials[i], ok);
                accepted += ok ? 1 : 0;
                if (pop.particles.size() == options.n) return pop;
            }
            if (monitor.stalled(accepted)) throw_stall(state, g, eps);
            base += block;
        }
    });
}

namespace reference {

AbcState run_serial(const TorqueDataset& dataset, const WobRatio& r, const std::vector<PriorSpec>& priors,
                    const ModelPrior& model_prior, const AbcOptions& options) {
    const Sampler sampler(dataset, r, priors, model_prior, options);
    return drive(sampler, [&](std::size_t g, double eps, const AbcState& state) {
        Population pop;
        pop.tolerance = eps;
        StallMonitor monitor(options);
        std::uint64_t in_block = 0;
        for (std::uint64_t a = 0;; ++a) {
            const Trial t = sampler.attempt(g, a);
            const bool ok = t.distance < eps;
            record(pop, t, ok);
            in_block += ok ? 1 : 0;
            if (pop.particles.size() == options.n) return pop;
            if ((a + 1) % options.block_size == 0) {
                if (monitor.stalled(in_block)) throw_stall(state, g, eps);
                in_block = 0;
            }
        }
    });
}

}  // namespace reference

ModelPosterior model_posterior(const AbcState& state, std::size_t g) {
    const auto& pop = state.population(g);
    ModelPosterior mp;
    for (const auto& p : pop.particles) ++mp.counts[slot(p.kind)];
    mp.total = pop.particles.size();
    return mp;
}

std::vector<BitRockModel> particle_models(const AbcState& state, std::size_t g, ModelKind kind) {
    std::vector<BitRockModel> out;
    for (const auto& p : state.population(g).particles) {
        if (p.kind == kind) out.push_back(BitRockModel::unvalidated(kind, p.phi));
    }
    return out;
}

PosteriorStats posterior_stats(const AbcState& state, std::size_t g, const PriorSpec& prior, int bins) {
    if (bins < 1) throw DomainError("posterior_stats: bins must be >= 1");
    const auto kind = prior.kind;
    std::vector<const Particle*> ps;
    for (const auto& p : state.population(g).particles) {
        if (p.kind == kind) ps.push_back(&p);
    }
    if (ps.size() < 2) {
        throw InsufficientSampleError("posterior_stats: population " + std::to_string(g) + " has " +
                                      std::to_string(ps.size()) + " particles of " + model_name(kind));
    }
    const auto n = static_cast<double>(ps.size());
    const auto dim = parameter_count(kind);
    const auto names = parameter_names(kind);

    PosteriorStats st{kind, ps.size(), {}, Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim),
                                                                     static_cast<Eigen::Index>(dim)),
                      std::vector<bool>(dim, false)};
    Eigen::MatrixXd x(static_cast<Eigen::Index>(ps.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < ps.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ps[i]->phi[j];
    }

    for (std::size_t j = 0; j < dim; ++j) {
        const auto col = x.col(static_cast<Eigen::Index>(j));
        Marginal m;
        m.name = names[j];
        m.lower = prior.lower[j];
        m.upper = prior.upper[j];
        m.mean = col.mean();
        m.stddev = std::sqrt((col.array() - m.mean).square().sum() / (n - 1.0));
        m.counts.assign(static_cast<std::size_t>(bins), 0);
        const double width = (m.upper - m.lower) / bins;
        for (Eigen::Index i = 0; i < col.size(); ++i) {
            auto b = static_cast<int>(std::floor((col(i) - m.lower) / width));
            b = std::clamp(b, 0, bins - 1);
            ++m.counts[static_cast<std::size_t>(b)];
        }
        m.density.resize(m.counts.size());
        for (std::size_t b = 0; b < m.counts.size(); ++b) m.density[b] = static_cast<double>(m.counts[b]) / (n * width);

        // Silverman's rule; falls back to the histogram for a constant column.
        m.kde = m.density;
        if (m.stddev > 0.0) {
            const double h = 1.06 * m.stddev * std::pow(n, -0.2);
            const double norm = 1.0 / (n * h * std::sqrt(2.0 * 3.14159265358979323846));
            for (int b = 0; b < bins; ++b) {
                const double c = m.lower + (b + 0.5) * width;
                double acc = 0.0;
                for (Eigen::Index i = 0; i < col.size(); ++i) {
                    const double z = (c - col(i)) / h;
                    acc += std::exp(-0.5 * z * z);
                }
                m.kde[static_cast<std::size_t>(b)] = acc * norm;
            }
        }
        st.constant[j] = !(m.stddev > 0.0);
        st.marginals.push_back(std::move(m));
    }

    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered;
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i; j < dim; ++j) {
            const auto a = static_cast<Eigen::Index>(i);
            const auto b = static_cast<Eigen::Index>(j);
            if (i == j) {
                st.correlation(a, b) = 1.0;
            } else if (st.constant[i] || st.constant[j]) {
                st.correlation(a, b) = 0.0;
            } else {
                st.correlation(a, b) = std::clamp(cov(a, b) / std::sqrt(cov(a, a) * cov(b, b)), -1.0, 1.0);
            }
            st.correlation(b, a) = st.correlation(a, b);
        }
    }
    return st;
}

std::vector<EnvelopePoint> predictive_envelope(const AbcState& state, std::size_t g, ModelKind kind,
                                               const std::vector<double>& speeds, double coverage,
                                               const WobRatio& r) {
    if (!(coverage >= 0.0 && coverage <= 1.0)) throw DomainError("predictive_envelope: coverage must be in [0, 1]");
    const auto models = particle_models(state, g, kind);
    if (models.size() < 50) {
        throw InsufficientSampleError("predictive_envelope: need >= 50 particles of " + model_name(kind) + ", have " +
                                      std::to_string(models.size()));
    }
    const double tail = 0.5 * (1.0 - coverage);
    std::vector<EnvelopePoint> out;
    std::vector<double> values(models.size());
    for (double s : speeds) {
        for (std::size_t j = 0; j < models.size(); ++j) values[j] = torque(models[j], r, s);
        std::sort(values.begin(), values.end());
        out.push_back({s, quantile(values, tail), quantile(values, 0.5), quantile(values, 1.0 - tail)});
    }
    return out;
}

}  // namespace drillabc
