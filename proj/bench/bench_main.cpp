// Parallel kernels against their serial references. Run with
// OMP_NUM_THREADS set to compare thread counts; outputs are identical.

#include "drillabc/abc.hpp"
#include "drillabc/stability.hpp"
#include "fixtures.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace drillabc;

namespace {

const Plant& fe_plant() {
    static const Plant p = assemble(DrillStringGeometry::field_string(), 8, 2, 0.5, 0.0021);
    return p;
}

const std::vector<BitRockModel>& m3_particles() {
    static const auto ps = [] {
        std::vector<BitRockModel> out;
        const auto prior = build_prior(published_estimate(ModelKind::BumpTanh), 0.1);
        std::vector<double> x(6);
        for (std::uint64_t i = 0; i < 1000; ++i) {
            CounterRng rng(11, 0, i);
            prior.sample(rng, x.data());
            out.push_back(BitRockModel::unvalidated(ModelKind::BumpTanh, x));
        }
        return out;
    }();
    return ps;
}

struct AbcFixture {
    TorqueDataset data = fixture::synthetic_m3(1);
    std::vector<PriorSpec> priors = build_priors(fixture::ls_fits(data), 0.4);
    AbcOptions options = [] {
        AbcOptions o;
        o.n = 2000;
        o.max_populations = 4;
        o.seed = 1;
        return o;
    }();
};

const AbcFixture& abc_fixture() {
    static const AbcFixture f;
    return f;
}

void BM_MapDeterministicFem(benchmark::State& state) {
    const auto m = published_estimate(ModelKind::BumpTanh);
    for (auto _ : state) benchmark::DoNotOptimize(map_deterministic(m, fe_plant()));
}

void BM_MapDeterministicFemSerial(benchmark::State& state) {
    const auto m = published_estimate(ModelKind::BumpTanh);
    for (auto _ : state) benchmark::DoNotOptimize(reference::map_deterministic(m, fe_plant()));
}

void BM_MapStochasticLumped(benchmark::State& state) {
    const Plant p = field_lumped_model();
    for (auto _ : state) benchmark::DoNotOptimize(map_stochastic(m3_particles(), p, GridSpec{}, 0.02));
}

void BM_MapStochasticLumpedSerial(benchmark::State& state) {
    const Plant p = field_lumped_model();
    for (auto _ : state) benchmark::DoNotOptimize(reference::map_stochastic(m3_particles(), p, GridSpec{}, 0.02));
}

void BM_AbcRun(benchmark::State& state) {
    const auto& f = abc_fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(run(f.data, WobRatio::unit(), f.priors, ModelPrior::uniform(), f.options));
    }
}

void BM_AbcRunSerial(benchmark::State& state) {
    const auto& f = abc_fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            reference::run_serial(f.data, WobRatio::unit(), f.priors, ModelPrior::uniform(), f.options));
    }
}

}  // namespace

BENCHMARK(BM_MapDeterministicFem)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MapDeterministicFemSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MapStochasticLumped)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MapStochasticLumpedSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AbcRun)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AbcRunSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

int main(int argc, char** argv) {
    benchmark::Initialize(&argc, argv);
    benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
