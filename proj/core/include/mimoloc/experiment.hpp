#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mimoloc/config.hpp"
#include "mimoloc/metrics.hpp"

namespace mimoloc {

/// One cell of the sweep grid (SNR x antenna variance).
struct SweepPoint {
    double snr_db = 0.0;
    /// Zero when antennas are exactly known.
    double antenna_variance = 0.0;
};

/// Outcome of one method on one Monte-Carlo trial.
struct TrialRecord {
    int point = 0;
    int trial = 0;
    /// Key from which every random stream of the trial is derived.
    std::uint64_t seed = 0;
    Vec truth;
    Vec estimate;
    double error = 0.0;
    long iterations = 0;
    bool converged = false;
    int restarts = 0;
    double root_crlb = 0.0;
};

struct MethodResult {
    std::string method;
    /// One report per sweep point.
    std::vector<MetricsReport> reports;
    /// trials[point][trial].
    std::vector<std::vector<TrialRecord>> trials;
};

struct ExperimentResult {
    std::vector<SweepPoint> points;
    std::vector<MethodResult> methods;

    /// Throws NotFound when the method was not run.
    const MethodResult& method(const std::string& name) const;
};

/// Cross product of the SNR and antenna-variance lists, SNR-major. An empty
/// SNR list with an antenna sweep falls back to a single 10 dB point.
std::vector<SweepPoint> sweep_points(const ExperimentSpec& spec);

/// Key of trial `trial` at sweep point `point`.
std::uint64_t trial_seed(std::uint64_t master_seed, int point, int trial);

/// Geometry and target of one trial (redrawn for random-circle geometries
/// and uniform-box targets).
Scenario trial_scenario(const ExperimentSpec& spec, int point, int trial);

/// Runs every method on every (point, trial) over a bounded thread pool.
/// Results depend only on the spec, never on worker count or scheduling.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Per-point mean root CRLB without running any estimator.
std::vector<double> crlb_sweep(const ExperimentSpec& spec);

/// `sweep_<method>.csv`, optional `trials_<method>.csv` and `manifest.json`
/// under `dir` (created if missing). Throws Error if the directory is not
/// writable.
void write_experiment_outputs(const ExperimentSpec& spec, const ExperimentResult& result,
                              const std::filesystem::path& dir);

/// Contents of the sweep table for one method.
std::string sweep_table(const ExperimentResult& result, const MethodResult& method);

/// Version string embedded in manifests.
std::string library_version();

}  // namespace mimoloc
