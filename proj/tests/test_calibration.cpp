#include "drillabc/calibration.hpp"
#include "drillabc/errors.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace drillabc;

namespace {

const WobRatio kUnit = WobRatio::unit();

TorqueDataset noiseless(ModelKind k) { return synthesize(published_estimate(k), kUnit, default_speed_grid(), 0.0, 0); }

std::vector<double> scaled(ModelKind k, double f) {
    const auto m = published_estimate(k);
    std::vector<double> p(m.params().begin(), m.params().end());
    for (auto& v : p) v *= f;
    return p;
}

void expect_recovered(const FitResult& r, ModelKind k) {
    const auto truth = published_estimate(k).params();
    EXPECT_TRUE(r.converged);
    for (std::size_t j = 0; j < truth.size(); ++j) {
        EXPECT_NEAR(r.model.params()[j], truth[j], 1e-3 * std::abs(truth[j])) << model_name(k) << " param " << j;
    }
}

}  // namespace

TEST(Metric, ExactModelGivesZero) {
    EXPECT_EQ(metric(noiseless(ModelKind::Cubic), published_estimate(ModelKind::Cubic), kUnit), 0.0);
}

TEST(Metric, ZeroPredictionGivesOne) {
    const BitRockModel zero(ModelKind::Cubic, std::vector<double>{0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(metric(noiseless(ModelKind::BumpTanh), zero, kUnit), 1.0);
}

TEST(Metric, PerturbedStaticTorqueAgainstElementwiseSum) {
    const auto d = noiseless(ModelKind::ExponentialDecay);
    const BitRockModel perturbed(ModelKind::ExponentialDecay, std::vector<double>{6.5, 13.0 * 1.01, 0.3});
    long double num = 0, den = 0;
    for (const auto& s : d.samples) {
        if (s.split != Split::Calibration) continue;
        const long double y = oracle::m2(6.5, 13.0, 0.3, s.speed);
        const long double a = oracle::m2(6.5, 13.13, 0.3, s.speed);
        num += (y - a) * (y - a);
        den += y * y;
    }
    EXPECT_NEAR(metric(d, perturbed, kUnit), static_cast<double>(num / den), 1e-12);
}

TEST(Metric, DegenerateData) {
    TorqueDataset d;
    for (int i = 0; i < 5; ++i) d.samples.push_back({double(i), 0.0, Split::Calibration});
    EXPECT_THROW(metric(d, published_estimate(ModelKind::Cubic), kUnit), DataError);
}

TEST(Fit, RecoversExponentialDecayFromOffsetStart) {
    const auto k = ModelKind::ExponentialDecay;
    expect_recovered(fit(noiseless(k), k, kUnit, scaled(k, 1.2)), k);
}

TEST(Fit, RecoversCubicFromOffsetStart) {
    const auto k = ModelKind::Cubic;
    expect_recovered(fit(noiseless(k), k, kUnit, scaled(k, 0.8)), k);
}

TEST(Fit, RecoversTanhRationalAndBumpTanh) {
    expect_recovered(fit(noiseless(ModelKind::TanhRational), ModelKind::TanhRational, kUnit,
                         scaled(ModelKind::TanhRational, 1.1)),
                     ModelKind::TanhRational);
    expect_recovered(fit(noiseless(ModelKind::BumpTanh), ModelKind::BumpTanh, kUnit, scaled(ModelKind::BumpTanh, 0.9)),
                     ModelKind::BumpTanh);
}

TEST(Fit, OptimumIsAFixedPoint) {
    const auto k = ModelKind::ExponentialDecay;
    const auto r = fit(noiseless(k), k, kUnit, scaled(k, 1.0));
    EXPECT_EQ(r.metric_value, 0.0);
    expect_recovered(r, k);
}

TEST(Fit, NeverWorseThanInitialPoint) {
    const auto d = synthesize(published_estimate(ModelKind::BumpTanh), kUnit, default_speed_grid(), 0.8, 2);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> f(0.7, 1.3);
    for (int t = 0; t < 12; ++t) {
        const auto k = kAllModels[static_cast<std::size_t>(t % 4)];
        auto p = scaled(k, 1.0);
        for (auto& v : p) v *= f(rng);
        if (k == ModelKind::ExponentialDecay) std::sort(p.begin(), p.begin() + 2);
        FitOptions opt;
        opt.max_evaluations = 300;
        const auto r = fit(d, k, kUnit, p, std::nullopt, opt);
        EXPECT_LE(r.metric_value, metric(d, BitRockModel(k, p), kUnit));
        EXPECT_TRUE(BitRockModel::satisfies_invariants(k, r.model.params()));
    }
}

TEST(Fit, EvaluationCapReturnsBestPointUnconverged) {
    const auto k = ModelKind::BumpTanh;
    FitOptions opt;
    opt.max_evaluations = 40;
    const auto r = fit(noiseless(k), k, kUnit, scaled(k, 0.7), std::nullopt, opt);
    EXPECT_FALSE(r.converged);
    EXPECT_LE(r.iterations, 40u + 10u);
    EXPECT_LT(r.metric_value, metric(noiseless(k), BitRockModel(k, scaled(k, 0.7)), kUnit));
}

TEST(Fit, RejectsInvalidInitialPoint) {
    const auto d = noiseless(ModelKind::ExponentialDecay);
    EXPECT_THROW(fit(d, ModelKind::ExponentialDecay, kUnit, {13, 6.5, 0.3}), DomainError);
    EXPECT_THROW(fit(d, ModelKind::ExponentialDecay, kUnit, {6.5, 13}), DomainError);
    ParameterBounds b = ParameterBounds::defaults(ModelKind::ExponentialDecay);
    b.upper[2] = 0.1;
    EXPECT_THROW(fit(d, ModelKind::ExponentialDecay, kUnit, {6.5, 13, 0.3}, b), DomainError);
}

TEST(Fit, RespectsBounds) {
    const auto d = noiseless(ModelKind::ExponentialDecay);
    ParameterBounds b = ParameterBounds::defaults(ModelKind::ExponentialDecay);
    b.upper[2] = 0.25;
    const auto r = fit(d, ModelKind::ExponentialDecay, kUnit, {6.0, 12.0, 0.2}, b);
    EXPECT_LE(r.model.params()[2], 0.25);
    EXPECT_GT(r.metric_value, 0.0);
}

TEST(FitProperty, RowOrderDoesNotMatter) {
    auto d = synthesize(published_estimate(ModelKind::Cubic), kUnit, default_speed_grid(), 0.5, 9);
    const auto k = ModelKind::Cubic;
    const auto a = fit(d, k, kUnit, scaled(k, 0.9));
    const double m_before = metric(d, published_estimate(k), kUnit);
    std::mt19937_64 rng(1);
    std::shuffle(d.samples.begin(), d.samples.end(), rng);
    EXPECT_NEAR(metric(d, published_estimate(k), kUnit), m_before, 1e-14 * m_before);
    const auto b = fit(d, k, kUnit, scaled(k, 0.9));
    EXPECT_NEAR(a.metric_value, b.metric_value, 1e-10 * a.metric_value);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_NEAR(a.model.params()[j], b.model.params()[j], 1e-5 * std::abs(a.model.params()[j]));
    }
}

TEST(FitProperty, MultistartIsDeterministicAndNoWorseThanSingleStart) {
    const auto d = synthesize(published_estimate(ModelKind::BumpTanh), kUnit, default_speed_grid(), 0.8, 4);
    const auto k = ModelKind::BumpTanh;
    const auto p0 = scaled(k, 1.0);
    const auto single = fit(d, k, kUnit, p0);
    const auto a = fit_multistart(d, k, kUnit, p0, 5, 0.1, 77);
    const auto b = fit_multistart(d, k, kUnit, p0, 5, 0.1, 77);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.metric_value, b.metric_value);
    EXPECT_LE(a.metric_value, single.metric_value);
}
