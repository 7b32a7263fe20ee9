/// Cost of single derivative and objective evaluations.

#include <benchmark/benchmark.h>

#include "mimoloc/energy.hpp"
#include "mimoloc/metrics.hpp"
#include "mimoloc/radar_model.hpp"
#include "mimoloc/validate.hpp"

namespace {

using namespace mimoloc;

const char* scenario_name(const benchmark::State& state) {
    return state.range(0) == 2 ? "scenario1-2d" : "scenario2-3d";
}

void BM_RnfnnDerivative(benchmark::State& state) {
    const Scenario sc = builtin_scenario(scenario_name(state));
    const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 10.0), 1);
    const RnfState x = random_rnf_state(sc, 2);
    RnfState out = x;
    for (auto _ : state) {
        rnfnn_derivative(x, meas, sc, 0.1, out);
        benchmark::DoNotOptimize(out.u.data());
    }
}
BENCHMARK(BM_RnfnnDerivative)->Arg(2)->Arg(3);

void BM_LpnnDerivative(benchmark::State& state) {
    const Scenario sc = builtin_scenario(scenario_name(state));
    const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 10.0), 1);
    const LpnnState y = random_lpnn_state(sc, 2);
    LpnnState out = y;
    for (auto _ : state) {
        lpnn_derivative(y, meas, sc, 1.0, out);
        benchmark::DoNotOptimize(out.u.data());
    }
}
BENCHMARK(BM_LpnnDerivative)->Arg(2)->Arg(3);

void BM_ExtendedDerivative(benchmark::State& state) {
    const Scenario sc = builtin_scenario(scenario_name(state));
    NoiseModel noise = noise_from_snr(sc, 10.0);
    set_antenna_variance(noise, sc, 10.0);
    MeasurementSet meas = simulate_measurements(sc, noise, 1);
    meas.antennas = simulate_antenna_positions(sc, noise, 2);
    const ExtendedRnfState x = random_extended_state(sc, 3);
    ExtendedRnfState out = x;
    for (auto _ : state) {
        extended_rnfnn_derivative(x, meas, 0.1, out);
        benchmark::DoNotOptimize(out.u.data());
    }
}
BENCHMARK(BM_ExtendedDerivative)->Arg(2)->Arg(3);

void BM_MlObjective(benchmark::State& state) {
    const Scenario sc = builtin_scenario(scenario_name(state));
    const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 10.0), 1);
    const Vec u = sc.target;
    for (auto _ : state) benchmark::DoNotOptimize(ml_objective(u, meas, sc));
}
BENCHMARK(BM_MlObjective)->Arg(2)->Arg(3);

void BM_Crlb(benchmark::State& state) {
    const Scenario sc = builtin_scenario(scenario_name(state));
    NoiseModel noise = noise_from_snr(sc, 10.0);
    set_antenna_variance(noise, sc, 10.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(crlb(sc, noise).root);
        benchmark::DoNotOptimize(crlb_with_antenna_errors(sc, noise).root);
    }
}
BENCHMARK(BM_Crlb)->Arg(2)->Arg(3);

}  // namespace
