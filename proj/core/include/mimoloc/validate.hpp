#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mimoloc/energy.hpp"
#include "mimoloc/radar_model.hpp"

namespace mimoloc {

/// Central-difference gradient with one Richardson extrapolation step.
/// `step` is relative to max(1, |x_i|).
Vec numerical_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double step = 1e-4);

/// ||a - b|| / max(||b||, 1e-300).
double relative_error(const Vec& a, const Vec& b);

/// Random network states around a scenario: u uniform in +-span per axis,
/// auxiliary ranges at the true distances plus N(0, jitter^2), multipliers
/// uniform on [0, 1] and antenna states at the observed positions plus noise.
RnfState random_rnf_state(const Scenario& scenario, std::uint64_t seed, double span = 1000.0,
                          double jitter = 50.0);
LpnnState random_lpnn_state(const Scenario& scenario, std::uint64_t seed, double span = 1000.0,
                            double jitter = 50.0);
ExtendedRnfState random_extended_state(const Scenario& scenario, std::uint64_t seed,
                                       double span = 1000.0, double jitter = 50.0);

/// Worst relative error between each analytic derivative and the finite
/// difference of its energy over `samples` random states. The LPNN check
/// flips the sign of the multiplier rows (ascent), the extended check uses
/// the half-weight antenna energy.
double rnfnn_gradient_error(const MeasurementSet& meas, const Scenario& scenario, double rho,
                            int samples, std::uint64_t seed);
double lpnn_gradient_error(const MeasurementSet& meas, const Scenario& scenario, double c,
                           int samples, std::uint64_t seed);
double extended_gradient_error(const MeasurementSet& meas, const Scenario& scenario, double rho,
                               int samples, std::uint64_t seed);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Invariant self-checks over the radar model, energies, bounds and metrics.
std::vector<CheckResult> run_self_checks(std::uint64_t seed = 1);

}  // namespace mimoloc
