#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mimoloc/energy.hpp"
#include "mimoloc/errors.hpp"
#include "mimoloc/radar_model.hpp"
#include "mimoloc/rng.hpp"
#include "mimoloc/solver.hpp"

namespace {

using namespace mimoloc;

/// Stable step for relaxed-network-only runs in 3-D, used to keep the
/// longer batches fast.
constexpr double kRelaxedStep3d = 0.0005;

MeasurementSet noise_free(const Scenario& sc) {
    MeasurementSet meas;
    meas.noise = noise_from_snr(sc, 10.0);
    meas.range = bistatic_ranges(sc.target, sc.transmitters, sc.receivers);
    meas.weight = pair_weights(meas.noise.pair_variance);
    return meas;
}

MeasurementSet with_antennas(const Scenario& sc, double snr, double variance, std::uint64_t seed) {
    NoiseModel noise = noise_from_snr(sc, snr);
    set_antenna_variance(noise, sc, variance);
    MeasurementSet meas = simulate_measurements(sc, noise, seed);
    meas.antennas = simulate_antenna_positions(sc, noise, seed + 1000);
    return meas;
}

TEST(SolverConfig, RejectsInvalidFields) {
    SolverConfig c;
    EXPECT_NO_THROW(c.validate());
    for (auto mutate : {+[](SolverConfig& x) { x.rho = 0.0; }, +[](SolverConfig& x) { x.c = -1.0; },
                        +[](SolverConfig& x) { x.dt = 0.0; }, +[](SolverConfig& x) { x.eps1 = 0.0; },
                        +[](SolverConfig& x) { x.max_iters = 0; }}) {
        SolverConfig bad;
        mutate(bad);
        EXPECT_THROW(bad.validate(), InvalidInput);
    }
}

TEST(InitState, DeterministicBoxedAndFeasible) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    const MeasurementSet meas = noise_free(sc);
    const SolverConfig cfg;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto a = std::get<RnfState>(init_state(sc, meas, cfg, seed, Network::Rnfnn));
        const auto b = std::get<RnfState>(init_state(sc, meas, cfg, seed, Network::Rnfnn));
        EXPECT_EQ(a.pack(), b.pack());
        EXPECT_LE(a.u.cwiseAbs().maxCoeff(), 400.0);
        for (int m = 0; m < 3; ++m) EXPECT_EQ(a.h_t(m), (a.u - sc.transmitters.col(m)).norm());
        for (int n = 0; n < 3; ++n) EXPECT_EQ(a.h_s(n), (a.u - sc.receivers.col(n)).norm());

        const auto y = std::get<LpnnState>(init_state(sc, meas, cfg, seed, Network::Lpnn));
        EXPECT_GE(y.lambda_t.minCoeff(), 0.0);
        EXPECT_LE(y.lambda_t.maxCoeff(), 1.0);
        EXPECT_LE(y.u.cwiseAbs().maxCoeff(), 400.0);
    }
}

TEST(SolveRnfnn, NoiseFreeConvergesToTruth) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    const MeasurementSet meas = noise_free(sc);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SolveResult r = solve_rnfnn(meas, sc, SolverConfig{}, seed);
        EXPECT_TRUE(r.converged);
        EXPECT_LT((r.estimate - sc.target).norm(), 1e-3);
    }
}

TEST(SolveLpnn, NoiseFreeConvergesToTruth) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    const MeasurementSet meas = noise_free(sc);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const SolveResult r = solve_lpnn(meas, sc, SolverConfig{}, seed);
        EXPECT_TRUE(r.converged);
        EXPECT_LT((r.estimate - sc.target).norm(), 1e-2);
    }
}

TEST(SolveRnfnn, HugeThresholdStopsAfterOneIteration) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 10.0), 1);
    SolverConfig cfg;
    cfg.eps1 = 1e10;
    const SolveResult r = solve_rnfnn(meas, sc, cfg, 1);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(solve_lpnn(meas, sc, cfg, 1).iterations, 1);
}

TEST(SolveRnfnn, HugeStepDivergesAndRestarts) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 10.0), 1);
    SolverConfig cfg;
    cfg.dt = 1e3;
    cfg.max_iters = 1000;
    const SolveResult r = solve_rnfnn(meas, sc, cfg, 1);
    EXPECT_GE(r.restarts, 1);
    EXPECT_TRUE(r.diverged);
    EXPECT_FALSE(r.converged);
    EXPECT_FALSE(r.diagnostic.empty());
    EXPECT_LE(r.iterations, cfg.max_iters * (r.restarts + 1));
}

TEST(SolveRnfnn, IterationCapIsRespected) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 10.0), 1);
    SolverConfig cfg;
    cfg.max_iters = 500;
    const SolveResult r = solve_rnfnn(meas, sc, cfg, 1);
    EXPECT_EQ(r.iterations, 500);
    EXPECT_FALSE(r.converged);
    EXPECT_FALSE(r.diverged);
}

TEST(SolveLpnn, SameSeedIsBitIdentical) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 20.0), 5);
    SolverConfig cfg;
    cfg.record_trajectory = true;
    cfg.trajectory_stride = 1000;
    const SolveResult a = solve_lpnn(meas, sc, cfg, 9);
    const SolveResult b = solve_lpnn(meas, sc, cfg, 9);
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ(a.final_e, b.final_e);
    ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
    for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
        EXPECT_EQ(a.trajectory[i].state, b.trajectory[i].state);
    }
    EXPECT_NE(solve_lpnn(meas, sc, cfg, 10).iterations, a.iterations);
}

TEST(SolveRnfnn, ConvergedImpliesStationaryFinalState) {
    for (const char* name : {"scenario1-2d", "scenario2-3d"}) {
        const Scenario sc = builtin_scenario(name);
        const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 10.0), 3);
        SolverConfig cfg;
        cfg.record_trajectory = true;
        cfg.trajectory_stride = 100000;
        const SolveResult r = solve_rnfnn(meas, sc, cfg, 4);
        ASSERT_TRUE(r.converged);
        const Vec& last = r.trajectory.back().state;
        const RnfState x = RnfState::unpack(last, sc.dim, sc.num_tx(), sc.num_rx());
        EXPECT_LT(stationarity(meas, sc, cfg, x), cfg.eps1);
        EXPECT_EQ(x.u, r.estimate);

        const SolveResult q = solve_lpnn(meas, sc, cfg, 4);
        ASSERT_TRUE(q.converged);
        const LpnnState y =
            LpnnState::unpack(q.trajectory.back().state, sc.dim, sc.num_tx(), sc.num_rx());
        EXPECT_LT(stationarity(meas, sc, cfg, y), cfg.eps1);
    }
}

TEST(SolveRnfnn, EnergyIsAlmostAlwaysNonIncreasing) {
    for (const char* name : {"scenario1-2d", "scenario2-3d"}) {
        const Scenario sc = builtin_scenario(name);
        const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 10.0), 6);
        SolverConfig cfg;
        cfg.record_trajectory = true;
        cfg.trajectory_stride = 1;
        cfg.max_iters = 200000;
        const SolveResult r = solve_rnfnn(meas, sc, cfg, 7);
        ASSERT_GT(r.trajectory.size(), 1000u);
        // Energy at physical scale: the internal energy is this one divided by
        // unit^2, with rho divided by unit^2.
        const double rho = cfg.rho / (r.length_unit * r.length_unit);
        double prev = 0.0;
        long steps = 0;
        long increases = 0;
        for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
            const RnfState x =
                RnfState::unpack(r.trajectory[i].state, sc.dim, sc.num_tx(), sc.num_rx());
            const double e = rnf_energy(x, meas, sc, rho);
            if (i > 0) {
                ++steps;
                if (e > prev) ++increases;
            }
            prev = e;
        }
        EXPECT_LE(static_cast<double>(increases), 0.01 * static_cast<double>(steps)) << name;
    }
}

TEST(SolveRnfnn, ObservedAntennasAreRejected) {
    const Scenario sc = builtin_scenario("scenario2-3d");
    const MeasurementSet meas = with_antennas(sc, 10.0, 10.0, 1);
    EXPECT_THROW(solve_rnfnn(meas, sc, SolverConfig{}, 1), InvalidInput);
    EXPECT_THROW(solve_lpnn(meas, sc, SolverConfig{}, 1), InvalidInput);
}

TEST(SolveRnfnnAntenna, RequiresObservedAntennas) {
    const Scenario sc = builtin_scenario("scenario2-3d");
    const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 10.0), 1);
    EXPECT_THROW(solve_rnfnn_antenna(meas, SolverConfig{}, 1), InvalidInput);
}

TEST(SolveRnfnnAntenna, ExactAntennasReproducePlainNetwork) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    MeasurementSet meas = noise_free(sc);
    NoiseModel noise = meas.noise;
    set_antenna_variance(noise, sc, 1e-30);
    meas.antennas = simulate_antenna_positions(sc, noise, 2);
    MeasurementSet plain = meas;
    plain.antennas.reset();
    SolverConfig cfg;
    cfg.eps1 = 1e-14;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const SolveResult a = solve_rnfnn_antenna(meas, cfg, seed);
        const SolveResult b = solve_rnfnn(plain, sc, cfg, seed);
        ASSERT_TRUE(a.converged);
        ASSERT_TRUE(b.converged);
        EXPECT_LT((a.estimate - b.estimate).norm(), 1e-6);
    }
}

TEST(SolveRnfnnAntenna, ConvergesAtModerateAntennaErrors) {
    const Scenario sc = builtin_scenario("scenario2-3d");
    SolverConfig cfg;
    cfg.dt = kRelaxedStep3d;
    int good = 0;
    for (std::uint64_t t = 0; t < 200; ++t) {
        const MeasurementSet meas = with_antennas(sc, 10.0, 10.0, derive_seed({77, t}));
        const SolveResult r = solve_rnfnn_antenna(meas, cfg, derive_seed({78, t}));
        if (r.converged && r.estimate.allFinite()) ++good;
    }
    EXPECT_GE(good, 190);
}

TEST(OracleMlEstimate, NoiseFreeFindsTruthWithinResolution) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    const MeasurementSet meas = noise_free(sc);
    const SearchBox box{Vec::Constant(2, -400.0), Vec::Constant(2, 400.0)};
    const Vec est = oracle_ml_estimate(meas, sc, box, 10.0);
    EXPECT_LE((est - sc.target).cwiseAbs().maxCoeff(), 0.01);
}

TEST(OracleMlEstimate, AgreesWithRelaxedNetworkAtModerateNoise) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    const double resolution = 0.01;
    for (std::uint64_t t = 0; t < 3; ++t) {
        const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 20.0), 500 + t);
        const SearchBox box{sc.target.array() - 50.0, sc.target.array() + 50.0};
        const Vec oracle = oracle_ml_estimate(meas, sc, box, 10.0);
        const Vec net = solve_rnfnn(meas, sc, SolverConfig{}, t).estimate;
        EXPECT_LE((oracle - net).norm(), 3.0 * resolution);
        double slack = 0.0;
        const double j = ml_objective(oracle, meas, sc);
        for (int d = 0; d < 2; ++d) {
            for (double sgn : {-1.0, 1.0}) {
                Vec p = oracle;
                p(d) += sgn * resolution;
                slack = std::max(slack, std::abs(ml_objective(p, meas, sc) - j));
            }
        }
        EXPECT_LE(j, ml_objective(net, meas, sc) + slack);
    }
}

TEST(Trajectory, CsvHasHeaderAndDecimatedRows) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    const MeasurementSet meas = simulate_measurements(sc, noise_from_snr(sc, 10.0), 1);
    SolverConfig cfg;
    cfg.record_trajectory = true;
    cfg.max_iters = 100;
    const SolveResult r = solve_rnfnn(meas, sc, cfg, 1);
    EXPECT_EQ(r.trajectory.size(), 10u);
    EXPECT_EQ(r.trajectory.front().k, 10);
    std::ostringstream out;
    write_trajectory_csv(out, r, 2);
    EXPECT_EQ(out.str().rfind("k,e,u_1,u_2", 0), 0u);
}

}  // namespace
