#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mimoloc/radar_model.hpp"
#include "mimoloc/solver.hpp"

namespace mimoloc {

/// Where the antenna geometry of an experiment comes from.
struct ScenarioSource {
    enum class Kind { Builtin, Inline, RandomCircle };

    Kind kind = Kind::Builtin;
    std::string builtin = "scenario1-2d";
    Scenario inline_geometry;
    /// Random-circle parameters; a fresh geometry is drawn for every trial.
    int circle_tx = 3;
    int circle_rx = 3;
    double circle_radius = 2000.0;
};

enum class TargetMode { Fixed, UniformBox };

/// Grid oracle settings: a box of +-half_width around the true target,
/// scanned at coarse_step and refined down to coarse_step / 1000.
struct OracleConfig {
    double half_width = 50.0;
    double coarse_step = 10.0;
};

/// Everything needed to reproduce one Monte-Carlo experiment.
struct ExperimentSpec {
    ScenarioSource scenario;
    TargetMode target_mode = TargetMode::Fixed;
    /// Target box for TargetMode::UniformBox. Empty means the default:
    /// +-1000 m horizontally and [0, 1000] m in height for 3-D geometries.
    std::optional<SearchBox> target_box;

    double k2 = 1000.0;
    std::vector<double> snr_db;
    /// Antenna position variances (m^2). Empty means exactly known antennas.
    std::vector<double> antenna_variance;

    std::vector<std::string> methods = {"rnfnn", "mlpnn"};
    int trials = 500;
    std::uint64_t master_seed = 1;
    /// Worker threads; 0 picks the hardware concurrency.
    int workers = 0;

    SolverConfig solver;
    OracleConfig oracle;

    std::string output_dir = "results";
    bool write_trials = true;

    /// Throws InvalidInput on an empty or malformed spec.
    void validate() const;
};

/// Method names accepted in ExperimentSpec::methods.
const std::vector<std::string>& experiment_method_names();

/// Parses a JSON document with sections scenario, noise, solver, sweep and
/// output. Unknown keys are rejected. Throws InvalidInput on malformed input
/// and NotFound on an unknown builtin scenario.
ExperimentSpec parse_experiment_spec(std::string_view text);

/// Reads and parses a spec file. Throws NotFound if the file is missing.
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

/// Canonical JSON rendering; parse_experiment_spec(spec_to_json(s)) == s.
std::string spec_to_json(const ExperimentSpec& spec, int indent = 2);

}  // namespace mimoloc
