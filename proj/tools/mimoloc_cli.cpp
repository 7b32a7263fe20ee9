/// Command-line front end: experiment runner, geometry printer, bound sweeps,
/// grid-oracle comparison and self-checks.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mimoloc/config.hpp"
#include "mimoloc/errors.hpp"
#include "mimoloc/experiment.hpp"
#include "mimoloc/validate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

void print_positions(const char* label, const mimoloc::Mat& pos) {
    for (Eigen::Index j = 0; j < pos.cols(); ++j) {
        std::printf("%s%ld", label, static_cast<long>(j + 1));
        for (Eigen::Index d = 0; d < pos.rows(); ++d) std::printf(" %.6g", pos(d, j));
        std::printf("\n");
    }
}

int cmd_scenario(const std::string& name) {
    const mimoloc::Scenario s = mimoloc::builtin_scenario(name);
    std::printf("# %s: D=%d M=%d N=%d (meters)\n", name.c_str(), s.dim, s.num_tx(), s.num_rx());
    print_positions("tx", s.transmitters);
    print_positions("rx", s.receivers);
    std::printf("target");
    for (Eigen::Index d = 0; d < s.target.size(); ++d) std::printf(" %.6g", s.target(d));
    std::printf("\n");
    return kExitOk;
}

mimoloc::ExperimentSpec load(const std::string& path, const std::optional<int>& workers) {
    mimoloc::ExperimentSpec spec = mimoloc::load_experiment_spec(path);
    if (workers) spec.workers = *workers;
    spec.validate();
    return spec;
}

int cmd_run(const std::string& path, const std::optional<std::string>& output,
            const std::optional<int>& workers) {
    mimoloc::ExperimentSpec spec = load(path, workers);
    if (output) spec.output_dir = *output;
    const mimoloc::ExperimentResult result = mimoloc::run_experiment(spec);
    mimoloc::write_experiment_outputs(spec, result, spec.output_dir);
    for (const mimoloc::MethodResult& m : result.methods) {
        std::printf("== %s\n%s", m.method.c_str(), mimoloc::sweep_table(result, m).c_str());
    }
    std::printf("wrote %s\n", spec.output_dir.c_str());
    return kExitOk;
}

int cmd_crlb(const std::string& path) {
    const mimoloc::ExperimentSpec spec = load(path, std::nullopt);
    const auto points = mimoloc::sweep_points(spec);
    const auto roots = mimoloc::crlb_sweep(spec);
    std::printf("snr_db,antenna_variance,root_crlb\n");
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::printf("%.17g,%.17g,%.17g\n", points[i].snr_db, points[i].antenna_variance, roots[i]);
    }
    return kExitOk;
}

int cmd_oracle(const std::string& path, const std::optional<int>& workers) {
    mimoloc::ExperimentSpec spec = load(path, workers);
    if (std::find(spec.methods.begin(), spec.methods.end(), "oracle") == spec.methods.end()) {
        spec.methods.push_back("oracle");
    }
    const mimoloc::ExperimentResult result = mimoloc::run_experiment(spec);
    const mimoloc::MethodResult& oracle = result.method("oracle");
    const double resolution = spec.oracle.coarse_step / 1000.0;
    std::printf("method,snr_db,antenna_variance,mean_gap,max_gap,oracle_resolution\n");
    for (const mimoloc::MethodResult& m : result.methods) {
        if (m.method == "oracle") continue;
        for (std::size_t p = 0; p < result.points.size(); ++p) {
            double sum = 0.0;
            double worst = 0.0;
            for (std::size_t t = 0; t < m.trials[p].size(); ++t) {
                const double gap = (m.trials[p][t].estimate - oracle.trials[p][t].estimate).norm();
                sum += gap;
                worst = std::max(worst, gap);
            }
            std::printf("%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.method.c_str(),
                        result.points[p].snr_db, result.points[p].antenna_variance,
                        sum / static_cast<double>(m.trials[p].size()), worst, resolution);
        }
    }
    return kExitOk;
}

int cmd_validate(std::uint64_t seed) {
    int failed = 0;
    for (const mimoloc::CheckResult& r : mimoloc::run_self_checks(seed)) {
        std::printf("%s  %s (%s)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        if (!r.passed) ++failed;
    }
    std::printf("%d check(s) failed\n", failed);
    return failed == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Target localization for distributed MIMO radar with gradient-flow networks"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string scenario_name;
    std::optional<std::string> output;
    std::optional<int> workers;
    std::uint64_t validate_seed = 1;

    auto* run = app.add_subcommand("run", "Run a Monte-Carlo experiment from a spec file");
    run->add_option("spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--output", output, "Override the output directory");
    run->add_option("-j,--workers", workers, "Worker threads (0 = all cores)");

    auto* scenario = app.add_subcommand("scenario", "Print a builtin geometry");
    scenario->add_option("name", scenario_name, "scenario1-2d or scenario2-3d")->required();

    auto* bound = app.add_subcommand("crlb", "Print the root CRLB for every sweep point");
    bound->add_option("spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);

    auto* oracle = app.add_subcommand("oracle", "Compare estimators with the grid ML oracle");
    oracle->add_option("spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
    oracle->add_option("-j,--workers", workers, "Worker threads (0 = all cores)");

    auto* validate = app.add_subcommand("validate", "Run gradient and invariant self-checks");
    validate->add_option("--seed", validate_seed, "Seed for the random states");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run) return cmd_run(spec_path, output, workers);
        if (*scenario) return cmd_scenario(scenario_name);
        if (*bound) return cmd_crlb(spec_path);
        if (*oracle) return cmd_oracle(spec_path, workers);
        if (*validate) return cmd_validate(validate_seed);
    } catch (const mimoloc::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
