#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "mimoloc/energy.hpp"
#include "mimoloc/radar_model.hpp"

namespace mimoloc {

enum class Network { Rnfnn, Lpnn, RnfnnAntenna };

std::string to_string(Network network);

/// Parameters of the discrete Euler emulation.
///
/// `rho` and `c` act on the internally normalized coordinates, where the
/// largest antenna coordinate magnitude maps to `normalized_span`.
/// `init_box` and `eps1` are in physical units (meters, meters^2 per unit
/// time squared).
struct SolverConfig {
    double rho = 0.1;
    double c = 1.0;
    double dt = 0.0001;
    double eps1 = 1e-10;
    long max_iters = 2'000'000;
    double init_box = 400.0;
    double normalized_span = 35.0;
    double divergence_threshold = 1e16;
    bool record_trajectory = false;
    int trajectory_stride = 10;
    bool restart_on_divergence = true;
    int max_restarts = 5;

    /// Throws InvalidInput when any invariant (positive rho, c, dt, eps1,
    /// max_iters >= 1, ...) is violated.
    void validate() const;
};

/// One recorded Euler step: iteration, squared derivative norm and the packed
/// state in physical units (lengths in meters, multipliers unscaled).
struct TrajectoryPoint {
    long k = 0;
    double e = 0.0;
    Vec state;
};

struct SolveResult {
    Vec estimate;
    long iterations = 0;
    bool converged = false;
    bool diverged = false;
    double final_e = 0.0;
    int restarts = 0;
    /// Physical length of one internal unit; the normalized problem uses
    /// positions / length_unit.
    double length_unit = 1.0;
    std::vector<TrajectoryPoint> trajectory;
    double wall_time = 0.0;
    std::string diagnostic;
};

using InitialState = std::variant<RnfState, LpnnState, ExtendedRnfState>;

/// Initial network state in physical units: u uniform on +-init_box per axis,
/// auxiliary ranges equal to the distances at u, multipliers uniform on
/// [0, 1], antenna states at the observed positions.
InitialState init_state(const Scenario& scenario, const MeasurementSet& meas,
                        const SolverConfig& config, std::uint64_t seed, Network mode);

/// Relaxed-energy network. Throws InvalidInput if `meas` carries observed
/// antenna positions (use solve_rnfnn_antenna) or the config is invalid.
SolveResult solve_rnfnn(const MeasurementSet& meas, const Scenario& scenario,
                        const SolverConfig& config, std::uint64_t seed);

/// Weighted augmented-Lagrangian network; pass uniform weights in `meas` for
/// the unweighted variant.
SolveResult solve_lpnn(const MeasurementSet& meas, const Scenario& scenario,
                       const SolverConfig& config, std::uint64_t seed);

/// Relaxed-energy network with antenna positions as unknowns. Only the
/// observed antenna positions in `meas` are used.
SolveResult solve_rnfnn_antenna(const MeasurementSet& meas, const SolverConfig& config,
                                std::uint64_t seed);

/// Squared norm, in physical units, of the network derivative at a physical
/// state. Recomputes what the solver's stopping rule sees.
double stationarity(const MeasurementSet& meas, const Scenario& scenario,
                    const SolverConfig& config, const InitialState& state);

/// Axis-aligned search box.
struct SearchBox {
    Vec lower;
    Vec upper;
};

/// Brute-force minimizer of ml_objective: a coarse grid scan followed by
/// three passes that shrink the step tenfold around the incumbent. Final
/// resolution is coarse_step / 1000.
Vec oracle_ml_estimate(const MeasurementSet& meas, const Scenario& scenario, const SearchBox& box,
                       double coarse_step);

/// `k,e,u_1..u_D,state...` rows.
void write_trajectory_csv(std::ostream& out, const SolveResult& result, int dim);

}  // namespace mimoloc
