#include "drillabc/abc.hpp"
#include "drillabc/errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace drillabc;

namespace {

const WobRatio kUnit = WobRatio::unit();

std::vector<PriorSpec> published_priors(double delta = 0.4) {
    std::vector<PriorSpec> p;
    for (auto k : kAllModels) p.push_back(build_prior(published_estimate(k), delta));
    return p;
}

AbcOptions small(std::size_t n, std::size_t max_pop, std::uint64_t seed = 3) {
    AbcOptions o;
    o.n = n;
    o.max_populations = max_pop;
    o.seed = seed;
    o.block_size = 256;
    return o;
}

const fixture::Run& m3_run() {
    static const fixture::Run run = fixture::synthetic_m3_run(1, 5000);
    return run;
}

}  // namespace

TEST(Prior, BoxAroundPositiveEstimate) {
    const auto p = build_prior(BitRockModel(ModelKind::Cubic, std::vector<double>{10, -0.93, 0.057, -1.2e-3}), 0.4);
    EXPECT_DOUBLE_EQ(p.lower[0], 6.0);
    EXPECT_DOUBLE_EQ(p.upper[0], 14.0);
    // Negative estimate: endpoints swapped.
    EXPECT_NEAR(p.lower[1], -1.302, 1e-12);
    EXPECT_NEAR(p.upper[1], -0.558, 1e-12);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_LT(p.lower[j], p.upper[j]);
}

TEST(Prior, ZeroEstimateIsRejected) {
    const auto m = BitRockModel::unvalidated(ModelKind::Cubic, std::vector<double>{10, 0, 0.05, -1e-3});
    EXPECT_THROW(build_prior(m, 0.4), DomainError);
}

TEST(Prior, DeltaOutsideUnitInterval) {
    EXPECT_THROW(build_prior(published_estimate(ModelKind::Cubic), 0.0), DomainError);
    EXPECT_THROW(build_prior(published_estimate(ModelKind::Cubic), 1.0), DomainError);
}

TEST(Prior, UniformSamplingStatistics) {
    const auto p = build_prior(published_estimate(ModelKind::BumpTanh), 0.4);
    const int n = 100000;
    std::vector<double> lo(6, INFINITY), hi(6, -INFINITY), sum(6, 0.0);
    std::vector<double> x(6);
    for (int i = 0; i < n; ++i) {
        CounterRng rng(7, 0, static_cast<std::uint64_t>(i));
        p.sample(rng, x.data());
        for (int j = 0; j < 6; ++j) {
            lo[j] = std::min(lo[j], x[j]);
            hi[j] = std::max(hi[j], x[j]);
            sum[j] += x[j];
        }
    }
    for (int j = 0; j < 6; ++j) {
        const double w = p.upper[j] - p.lower[j];
        EXPECT_GE(lo[j], p.lower[j]);
        EXPECT_LT(hi[j], p.upper[j]);
        EXPECT_LT(lo[j] - p.lower[j], 1e-3 * w);
        EXPECT_LT(p.upper[j] - hi[j], 1e-3 * w);
        const double sigma = w / std::sqrt(12.0) / std::sqrt(double(n));
        EXPECT_LT(std::abs(sum[j] / n - 0.5 * (p.lower[j] + p.upper[j])), 3.0 * sigma);
    }
}

TEST(Rng, CounterStreamsAreIndependentOfOrder) {
    CounterRng a(5, 2, 11), b(5, 2, 11), c(5, 2, 12);
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
}

TEST(Quantile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.25), 2.5);
    EXPECT_DOUBLE_EQ(median({5}), 5.0);
}

TEST(Run, AcceptAllFirstPopulation) {
    const auto d = fixture::synthetic_m3(2);
    const auto s = run(d, kUnit, published_priors(), ModelPrior::uniform(), small(100, 1));
    ASSERT_EQ(s.populations.size(), 1u);
    const auto& p = s.population(1);
    EXPECT_TRUE(std::isinf(p.tolerance));
    EXPECT_EQ(p.particles.size(), 100u);
    EXPECT_EQ(p.attempts, 100u);
    EXPECT_EQ(s.termination, Termination::MaxPopulations);
    for (const auto& q : p.particles) {
        const auto& prior = s.priors[static_cast<std::size_t>(model_index(q.kind) - 1)];
        EXPECT_TRUE(prior.contains(q.phi));
        EXPECT_DOUBLE_EQ(q.distance, metric(d, BitRockModel::unvalidated(q.kind, q.phi), kUnit));
    }
}

TEST(Run, TolerancesStrictlyDecreaseAndParticlesRevalidate) {
    const auto& r = m3_run();
    const auto eps = r.state.tolerances();
    ASSERT_GE(eps.size(), 2u);
    for (std::size_t g = 1; g < eps.size(); ++g) EXPECT_LT(eps[g], eps[g - 1]);
    for (std::size_t g = 1; g <= r.state.populations.size(); ++g) {
        const auto& pop = r.state.population(g);
        EXPECT_EQ(pop.particles.size(), 5000u);
        for (std::size_t j = 0; j < pop.particles.size(); j += 7) {
            const auto& q = pop.particles[j];
            const double rho = metric(r.data, BitRockModel::unvalidated(q.kind, q.phi), kUnit);
            EXPECT_EQ(rho, q.distance);
            EXPECT_LT(rho, pop.tolerance);
            EXPECT_GE(rho, 0.0);
        }
    }
}

TEST(Run, TerminationIsDistinguishable) {
    const auto& r = m3_run();
    const double last = r.state.tolerances().back();
    if (r.state.termination == Termination::FloorReached) {
        EXPECT_LE(last, 0.014);
    } else {
        EXPECT_EQ(r.state.populations.size(), r.state.options.max_populations);
    }
    for (std::size_t g = 0; g + 1 < r.state.populations.size(); ++g) {
        EXPECT_GT(r.state.populations[g].tolerance, 0.014);
    }
}

TEST(Run, DeterministicUnderSeed) {
    const auto d = fixture::synthetic_m3(4);
    const auto pri = published_priors();
    const auto a = run(d, kUnit, pri, ModelPrior::uniform(), small(200, 4, 9));
    const auto b = run(d, kUnit, pri, ModelPrior::uniform(), small(200, 4, 9));
    EXPECT_TRUE(a == b);
    const auto c = run(d, kUnit, pri, ModelPrior::uniform(), small(200, 4, 10));
    EXPECT_FALSE(a == c);
}

TEST(Run, ParallelMatchesSerialReference) {
    const auto d = fixture::synthetic_m3(4);
    const auto pri = published_priors();
    auto opt = small(300, 5, 21);
    const auto par = run(d, kUnit, pri, ModelPrior::uniform(), opt);
    const auto ser = reference::run_serial(d, kUnit, pri, ModelPrior::uniform(), opt);
    EXPECT_TRUE(par == ser);
    // Block size only changes scheduling.
    opt.block_size = 17;
    EXPECT_TRUE(run(d, kUnit, pri, ModelPrior::uniform(), opt) == par);
}

TEST(Run, StallCarriesPartialState) {
    const auto d = fixture::synthetic_m3(4);
    auto opt = small(100, 50, 1);
    opt.eps_floor = 1e-9;
    opt.stall_window = 20000;
    opt.stall_rate = 1e-3;
    try {
        run(d, kUnit, published_priors(), ModelPrior::uniform(), opt);
        FAIL() << "expected a stall";
    } catch (const AbcStallError& e) {
        EXPECT_GE(e.partial().populations.size(), 1u);
        EXPECT_TRUE(std::isfinite(e.tolerance()));
        EXPECT_EQ(e.tolerance(), median([&] {
                      std::vector<double> v;
                      for (const auto& q : e.partial().populations.back().particles) v.push_back(q.distance);
                      return v;
                  }()));
    }
}

TEST(Run, InvalidOptions) {
    const auto d = fixture::synthetic_m3(4);
    EXPECT_THROW(run(d, kUnit, published_priors(), ModelPrior::uniform(), small(0, 3)), DomainError);
    auto opt = small(10, 3);
    opt.eps_floor = 0.0;
    EXPECT_THROW(run(d, kUnit, published_priors(), ModelPrior::uniform(), opt), DomainError);
}

TEST(ModelPosteriorTest, SingleModelPrior) {
    const auto d = fixture::synthetic_m3(4);
    const auto s = run(d, kUnit, published_priors(), ModelPrior::only(ModelKind::ExponentialDecay), small(200, 4));
    for (std::size_t g = 1; g <= s.populations.size(); ++g) {
        const auto p = model_posterior(s, g);
        EXPECT_EQ(p.probability(ModelKind::TanhRational), 0.0);
        EXPECT_EQ(p.probability(ModelKind::ExponentialDecay), 1.0);
        EXPECT_EQ(p.probability(ModelKind::BumpTanh), 0.0);
        EXPECT_EQ(p.probability(ModelKind::Cubic), 0.0);
    }
}

TEST(ModelPosteriorTest, UniformPriorAtInfiniteTolerance) {
    const auto d = fixture::synthetic_m3(4);
    const std::size_t n = 25000;
    auto opt = small(n, 1, 12);
    opt.block_size = 8192;
    const auto s = run(d, kUnit, published_priors(), ModelPrior::uniform(), opt);
    const auto p = model_posterior(s, 1);
    EXPECT_EQ(std::accumulate(p.counts.begin(), p.counts.end(), std::size_t{0}), n);
    const double sigma = std::sqrt(0.25 * 0.75 / double(n));
    for (auto k : kAllModels) EXPECT_LT(std::abs(p.probability(k) - 0.25), 3.0 * sigma) << model_name(k);
}

TEST(ModelPosteriorTest, SumsToOneEveryPopulation) {
    const auto& r = m3_run();
    for (std::size_t g = 1; g <= r.state.populations.size(); ++g) {
        const auto p = model_posterior(r.state, g);
        EXPECT_EQ(std::accumulate(p.counts.begin(), p.counts.end(), std::size_t{0}), p.total);
    }
}

TEST(PosteriorStatsTest, CorrelationShape) {
    const auto& r = m3_run();
    for (std::size_t g = 1; g <= r.state.populations.size(); ++g) {
        const auto k = ModelKind::BumpTanh;
        if (model_posterior(r.state, g).counts[2] < 2) continue;
        const auto st = posterior_stats(r.state, g, r.priors[2]);
        const auto& c = st.correlation;
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            EXPECT_DOUBLE_EQ(c(i, i), 1.0);
            for (Eigen::Index j = 0; j < c.cols(); ++j) {
                EXPECT_DOUBLE_EQ(c(i, j), c(j, i));
                EXPECT_LE(std::abs(c(i, j)), 1.0);
            }
        }
        EXPECT_EQ(st.kind, k);
    }
}

TEST(PosteriorStatsTest, PriorDrawsAreUncorrelated) {
    const auto d = fixture::synthetic_m3(4);
    auto opt = small(25000, 1, 5);
    opt.block_size = 8192;
    const auto s = run(d, kUnit, published_priors(), ModelPrior::only(ModelKind::BumpTanh), opt);
    const auto st = posterior_stats(s, 1, s.priors[2]);
    for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 6; ++j)
            if (i != j) EXPECT_LT(std::abs(st.correlation(i, j)), 0.05);
    for (const auto& m : st.marginals) {
        const double w = (m.upper - m.lower) / double(m.density.size());
        double area = 0.0;
        for (double v : m.density) area += v * w;
        EXPECT_NEAR(area, 1.0, 1e-12);
        EXPECT_EQ(std::accumulate(m.counts.begin(), m.counts.end(), std::size_t{0}), 25000u);
    }
}

namespace {

AbcState handmade(ModelKind k, const std::vector<std::vector<double>>& phis) {
    AbcState s;
    for (auto kk : kAllModels) s.priors.push_back(build_prior(published_estimate(kk), 0.4));
    Population p;
    p.tolerance = INFINITY;
    for (const auto& phi : phis) p.particles.push_back({k, phi, 0.1});
    s.populations.push_back(p);
    return s;
}

}  // namespace

TEST(PosteriorStatsTest, ConstantColumnIsFlagged) {
    std::vector<std::vector<double>> phis;
    for (int i = 0; i < 10; ++i) phis.push_back({6.5, 12.0 + 0.1 * i, 0.3});
    const auto s = handmade(ModelKind::ExponentialDecay, phis);
    const auto st = posterior_stats(s, 1, s.priors[1]);
    EXPECT_TRUE(st.constant[0]);
    EXPECT_FALSE(st.constant[1]);
    EXPECT_TRUE(st.constant[2]);
    EXPECT_FALSE(st.correlation.hasNaN());
    EXPECT_EQ(st.correlation(0, 0), 1.0);
    EXPECT_EQ(st.correlation(0, 1), 0.0);
}

TEST(PosteriorStatsTest, FewerThanTwoParticles) {
    const auto s = handmade(ModelKind::ExponentialDecay, {{6.5, 13, 0.3}});
    EXPECT_THROW(posterior_stats(s, 1, s.priors[1]), InsufficientSampleError);
}

TEST(Envelope, IdenticalParticlesGiveTheModelCurve) {
    const std::vector<double> phi{2.72, 1, 0.09, 9.52, 4, 0.08};
    const auto s = handmade(ModelKind::BumpTanh, std::vector<std::vector<double>>(60, phi));
    const auto env = predictive_envelope(s, 1, ModelKind::BumpTanh, {0.5, 3.0, 10.0}, 0.98);
    for (const auto& e : env) {
        const double t = oracle::m3(phi, e.speed);
        EXPECT_DOUBLE_EQ(e.low, t);
        EXPECT_DOUBLE_EQ(e.high, t);
    }
}

TEST(Envelope, ZeroCoverageIsTheMedian) {
    const auto& r = m3_run();
    const auto env = predictive_envelope(r.state, 1, ModelKind::Cubic, {1.0, 5.0}, 0.0);
    for (const auto& e : env) {
        EXPECT_EQ(e.low, e.median);
        EXPECT_EQ(e.high, e.median);
    }
}

TEST(Envelope, TooFewParticles) {
    const auto s = handmade(ModelKind::BumpTanh, std::vector<std::vector<double>>(49, {2.72, 1, 0.09, 9.52, 4, 0.08}));
    EXPECT_THROW(predictive_envelope(s, 1, ModelKind::BumpTanh, {1.0}, 0.98), InsufficientSampleError);
}

TEST(Envelope, FourthPopulationCoversValidationData) {
    const auto& r = m3_run();
    ASSERT_GE(r.state.populations.size(), 4u);
    std::vector<double> speeds, torque;
    for (const auto& s : r.data.validation()) {
        speeds.push_back(s.speed);
        torque.push_back(s.torque);
    }
    const auto env = predictive_envelope(r.state, 4, ModelKind::BumpTanh, speeds, 0.98);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < env.size(); ++i) inside += env[i].low <= torque[i] && torque[i] <= env[i].high;
    EXPECT_GE(double(inside), 0.9 * double(env.size())) << inside << " of " << env.size();
}
