#include <benchmark/benchmark.h>

#include <vector>

#include "bhtwa/chaos.hpp"
#include "bhtwa/ensemble.hpp"

using namespace bhtwa;

namespace {

PhaseState filled(std::size_t L) {
    const auto p = ChainParams::from_ratios(L, 1.0, 0.05);
    InitialConditionPreset preset;
    preset.filled_sites = {2};
    return sample_one(build_spec(preset, p), 1, 0);
}

void BM_Drift(benchmark::State& st) {
    const auto L = static_cast<std::size_t>(st.range(0));
    const auto p = ChainParams::from_ratios(L, 1.0, 0.05);
    const auto s = filled(L);
    std::vector<double> out(2 * L);
    for (auto _ : st) {
        drift(s.flat(), p, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_Drift)->Arg(10)->Arg(40);

void BM_Evolve(benchmark::State& st) {
    const auto L = static_cast<std::size_t>(st.range(0));
    const auto p = ChainParams::from_ratios(L, 1.0, 0.05);
    const auto s = filled(L);
    IntegratorConfig cfg;
    cfg.step = 1.0;
    cfg.t_final = 1000.0;
    cfg.output_stride = 100;
    for (auto _ : st) benchmark::DoNotOptimize(evolve(s, p, cfg));
    st.SetItemsProcessed(st.iterations() * 1000);
}
BENCHMARK(BM_Evolve)->Arg(10)->Arg(40);

void BM_Ensemble(benchmark::State& st) {
    const auto p = ChainParams::from_ratios(10, 1.0, 0.05);
    InitialConditionPreset preset;
    preset.filled_sites = {2};
    const auto spec = build_spec(preset, p);
    IntegratorConfig cfg;
    cfg.step = 1.0;
    cfg.t_final = 1000.0;
    cfg.output_stride = 10;
    EnsembleOptions o;
    o.count = 64;
    o.corrections = static_cast<Corrections>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(run_ensemble(spec, p, cfg, o));
}
BENCHMARK(BM_Ensemble)
    ->Arg(static_cast<int>(Corrections::none))
    ->Arg(static_cast<int>(Corrections::integrated))
    ->Arg(static_cast<int>(Corrections::langevin))
    ->Unit(benchmark::kMillisecond);

void BM_Ftle(benchmark::State& st) {
    const auto p = ChainParams::from_ratios(10, 1.0, 0.0);
    const auto s = filled(10);
    IntegratorConfig cfg;
    cfg.step = 1.0;
    cfg.t_final = 1000.0;
    cfg.output_stride = 100;
    for (auto _ : st) benchmark::DoNotOptimize(ftle(s, p, cfg));
}
BENCHMARK(BM_Ftle)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
