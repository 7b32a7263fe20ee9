/// Euler-loop throughput (fixed iteration budget) and full solves.

#include <benchmark/benchmark.h>

#include "mimoloc/radar_model.hpp"
#include "mimoloc/solver.hpp"

namespace {

using namespace mimoloc;

constexpr long kSteps = 100000;

struct Problem {
    Scenario sc;
    MeasurementSet meas;
    MeasurementSet with_antennas;
};

Problem problem(const benchmark::State& state) {
    Problem p{builtin_scenario(state.range(0) == 2 ? "scenario1-2d" : "scenario2-3d"), {}, {}};
    NoiseModel noise = noise_from_snr(p.sc, 10.0);
    set_antenna_variance(noise, p.sc, 10.0);
    p.meas = simulate_measurements(p.sc, noise, 1);
    p.with_antennas = p.meas;
    p.with_antennas.antennas = simulate_antenna_positions(p.sc, noise, 2);
    return p;
}

/// Runs exactly kSteps Euler steps; reports the per-step rate.
SolverConfig fixed_budget() {
    SolverConfig cfg;
    cfg.eps1 = 1e-300;
    cfg.max_iters = kSteps;
    return cfg;
}

void BM_RnfnnSteps(benchmark::State& state) {
    const Problem p = problem(state);
    const SolverConfig cfg = fixed_budget();
    for (auto _ : state) benchmark::DoNotOptimize(solve_rnfnn(p.meas, p.sc, cfg, 1).estimate);
    state.SetItemsProcessed(state.iterations() * kSteps);
}
BENCHMARK(BM_RnfnnSteps)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_LpnnSteps(benchmark::State& state) {
    const Problem p = problem(state);
    const SolverConfig cfg = fixed_budget();
    for (auto _ : state) benchmark::DoNotOptimize(solve_lpnn(p.meas, p.sc, cfg, 1).estimate);
    state.SetItemsProcessed(state.iterations() * kSteps);
}
BENCHMARK(BM_LpnnSteps)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_ExtendedSteps(benchmark::State& state) {
    const Problem p = problem(state);
    const SolverConfig cfg = fixed_budget();
    for (auto _ : state) benchmark::DoNotOptimize(solve_rnfnn_antenna(p.with_antennas, cfg, 1).estimate);
    state.SetItemsProcessed(state.iterations() * kSteps);
}
BENCHMARK(BM_ExtendedSteps)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_RnfnnSolve(benchmark::State& state) {
    const Problem p = problem(state);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_rnfnn(p.meas, p.sc, SolverConfig{}, 1).estimate);
    }
}
BENCHMARK(BM_RnfnnSolve)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_OracleGrid(benchmark::State& state) {
    const Problem p = problem(state);
    const SearchBox box{p.sc.target.array() - 50.0, p.sc.target.array() + 50.0};
    for (auto _ : state) benchmark::DoNotOptimize(oracle_ml_estimate(p.meas, p.sc, box, 10.0));
}
BENCHMARK(BM_OracleGrid)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
