#include "mimoloc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "mimoloc/errors.hpp"
#include "mimoloc/rng.hpp"
#include "mimoloc/solver.hpp"

namespace mimoloc {

namespace {

// Stream ids under a trial key. Method streams are offset by the method's
// position in experiment_method_names(), so seeds do not depend on which
// subset of methods a spec lists.
constexpr std::uint64_t kTargetStream = 1;
constexpr std::uint64_t kGeometryStream = 2;
constexpr std::uint64_t kRangeStream = 3;
constexpr std::uint64_t kAntennaStream = 4;
constexpr std::uint64_t kMethodStreamBase = 16;

std::uint64_t method_stream(const std::string& method) {
    const auto& names = experiment_method_names();
    const auto it = std::find(names.begin(), names.end(), method);
    if (it == names.end()) throw NotFound("unknown method '" + method + "'");
    return kMethodStreamBase + static_cast<std::uint64_t>(it - names.begin());
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

SearchBox default_target_box(int dim) {
    SearchBox box{Vec::Constant(dim, -1000.0), Vec::Constant(dim, 1000.0)};
    if (dim == 3) box.lower(2) = 0.0;
    return box;
}

Scenario base_geometry(const ExperimentSpec& spec, int trial) {
    switch (spec.scenario.kind) {
        case ScenarioSource::Kind::Builtin:
            return builtin_scenario(spec.scenario.builtin);
        case ScenarioSource::Kind::Inline:
            return spec.scenario.inline_geometry;
        case ScenarioSource::Kind::RandomCircle:
            // Shared across sweep points so every point sees the same geometries.
            return random_circle_scenario(
                spec.scenario.circle_tx, spec.scenario.circle_rx, spec.scenario.circle_radius,
                derive_seed({spec.master_seed, static_cast<std::uint64_t>(trial), kGeometryStream}));
    }
    throw InvalidInput("unknown scenario source");
}

/// Geometry the estimators see: the true one, or the observed antennas.
Scenario assumed_geometry(const Scenario& truth, const MeasurementSet& meas) {
    if (!meas.antennas) return truth;
    Scenario observed = truth;
    observed.transmitters = meas.antennas->transmitters;
    observed.receivers = meas.antennas->receivers;
    return observed;
}

struct TrialInputs {
    Scenario scenario;
    MeasurementSet meas;
    double root_crlb = 0.0;
};

TrialInputs prepare_trial(const ExperimentSpec& spec, const SweepPoint& point, int p, int trial) {
    TrialInputs in;
    in.scenario = trial_scenario(spec, p, trial);
    const std::uint64_t key = trial_seed(spec.master_seed, p, trial);
    NoiseModel noise = noise_from_snr(in.scenario, point.snr_db, spec.k2);
    const bool antennas = point.antenna_variance > 0.0;
    if (antennas) set_antenna_variance(noise, in.scenario, point.antenna_variance);
    in.meas = simulate_measurements(in.scenario, noise, derive_seed({key, kRangeStream}));
    if (antennas) {
        in.meas.antennas =
            simulate_antenna_positions(in.scenario, noise, derive_seed({key, kAntennaStream}));
        in.root_crlb = crlb_with_antenna_errors(in.scenario, noise).root;
    } else {
        in.root_crlb = crlb(in.scenario, noise).root;
    }
    return in;
}

TrialRecord run_method(const ExperimentSpec& spec, const std::string& method,
                       const TrialInputs& in, int p, int trial) {
    TrialRecord rec;
    rec.point = p;
    rec.trial = trial;
    rec.seed = trial_seed(spec.master_seed, p, trial);
    rec.truth = in.scenario.target;
    rec.root_crlb = in.root_crlb;

    const std::uint64_t solver_seed = derive_seed({rec.seed, method_stream(method)});
    const Scenario assumed = assumed_geometry(in.scenario, in.meas);
    MeasurementSet plain = in.meas;
    plain.antennas.reset();

    if (method == "oracle") {
        const SearchBox box{in.scenario.target.array() - spec.oracle.half_width,
                            in.scenario.target.array() + spec.oracle.half_width};
        rec.estimate = oracle_ml_estimate(plain, assumed, box, spec.oracle.coarse_step);
        rec.converged = true;
    } else {
        SolveResult res;
        if (method == "rnfnn") {
            res = in.meas.antenna_mode() ? solve_rnfnn_antenna(in.meas, spec.solver, solver_seed)
                                         : solve_rnfnn(plain, assumed, spec.solver, solver_seed);
        } else if (method == "mlpnn") {
            res = solve_lpnn(plain, assumed, spec.solver, solver_seed);
        } else if (method == "lpnn") {
            plain.weight = uniform_pair_weights(plain.num_tx(), plain.num_rx());
            res = solve_lpnn(plain, assumed, spec.solver, solver_seed);
        } else {
            throw NotFound("unknown method '" + method + "'");
        }
        rec.estimate = res.estimate;
        rec.iterations = res.iterations;
        rec.converged = res.converged;
        rec.restarts = res.restarts;
    }
    rec.error = (rec.estimate - rec.truth).norm();
    return rec;
}

MetricsReport aggregate(const std::string& method, const SweepPoint& point,
                        const std::vector<TrialRecord>& trials, const Scenario& shape) {
    MetricsReport r;
    r.method = method;
    r.snr_db = point.snr_db;
    r.antenna_variance = point.antenna_variance;
    r.trials = static_cast<int>(trials.size());

    std::vector<Vec> errors;
    std::vector<double> norms;
    double crlb_sum = 0.0;
    double iter_sum = 0.0;
    double clean_sum = 0.0;
    int clean = 0;
    int converged = 0;
    for (const TrialRecord& t : trials) {
        errors.push_back(t.estimate - t.truth);
        norms.push_back(t.error);
        crlb_sum += t.root_crlb;
        iter_sum += static_cast<double>(t.iterations);
        if (t.converged) ++converged;
        if (t.converged && t.restarts == 0) {
            clean_sum += static_cast<double>(t.iterations);
            ++clean;
        }
    }
    const double n = static_cast<double>(trials.size());
    r.rmse = rmse_of_errors(errors);
    r.bias = bias_of_errors(errors);
    r.root_crlb = crlb_sum / n;
    r.mean_iterations = iter_sum / n;
    r.mean_iterations_clean = clean > 0 ? clean_sum / clean : 0.0;
    r.convergence_rate = converged / n;
    r.ecdf = ecdf(norms);
    if (method != "oracle") {
        r.rm_count = rm_count(method, static_cast<std::uint64_t>(shape.num_tx()),
                              static_cast<std::uint64_t>(shape.num_rx()),
                              static_cast<std::uint64_t>(shape.dim),
                              static_cast<std::uint64_t>(std::llround(r.mean_iterations)));
    }
    return r;
}

/// Calls body(i) for i in [0, count) on up to `workers` threads and rethrows
/// the first exception.
template <typename Body>
void parallel_for(int count, int workers, const Body& body) {
    if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::max(1, std::min(workers, count));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

const MethodResult& ExperimentResult::method(const std::string& name) const {
    for (const MethodResult& m : methods) {
        if (m.method == name) return m;
    }
    throw NotFound("method '" + name + "' was not run");
}

std::vector<SweepPoint> sweep_points(const ExperimentSpec& spec) {
    std::vector<double> snrs = spec.snr_db;
    if (snrs.empty()) snrs.push_back(10.0);
    std::vector<SweepPoint> points;
    for (double s : snrs) {
        if (spec.antenna_variance.empty()) {
            points.push_back({s, 0.0});
        } else {
            for (double v : spec.antenna_variance) points.push_back({s, v});
        }
    }
    return points;
}

std::uint64_t trial_seed(std::uint64_t master_seed, int point, int trial) {
    return derive_seed(
        {master_seed, static_cast<std::uint64_t>(point), static_cast<std::uint64_t>(trial)});
}

Scenario trial_scenario(const ExperimentSpec& spec, int /*point*/, int trial) {
    Scenario s = base_geometry(spec, trial);
    if (spec.target_mode == TargetMode::UniformBox) {
        const SearchBox box = spec.target_box ? *spec.target_box : default_target_box(s.dim);
        if (box.lower.size() != s.dim) {
            throw InvalidInput("target_box dimension does not match the scenario");
        }
        Rng rng(derive_seed({spec.master_seed, static_cast<std::uint64_t>(trial), kTargetStream}));
        for (int d = 0; d < s.dim; ++d) s.target(d) = rng.uniform(box.lower(d), box.upper(d));
    }
    s.validate();
    return s;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentResult result;
    result.points = sweep_points(spec);
    const int num_points = static_cast<int>(result.points.size());
    const int trials = spec.trials;
    const int num_methods = static_cast<int>(spec.methods.size());

    for (const std::string& m : spec.methods) {
        MethodResult mr;
        mr.method = m;
        mr.trials.assign(static_cast<std::size_t>(num_points),
                         std::vector<TrialRecord>(static_cast<std::size_t>(trials)));
        result.methods.push_back(std::move(mr));
    }

    parallel_for(num_points * trials, spec.workers, [&](int item) {
        const int p = item / trials;
        const int t = item % trials;
        const TrialInputs in = prepare_trial(spec, result.points[static_cast<std::size_t>(p)], p, t);
        for (int k = 0; k < num_methods; ++k) {
            // Each slot is written by exactly one work item.
            result.methods[static_cast<std::size_t>(k)].trials[static_cast<std::size_t>(p)]
                [static_cast<std::size_t>(t)] = run_method(spec, spec.methods[static_cast<std::size_t>(k)], in, p, t);
        }
    });

    const Scenario shape = trial_scenario(spec, 0, 0);
    for (MethodResult& mr : result.methods) {
        for (int p = 0; p < num_points; ++p) {
            mr.reports.push_back(aggregate(mr.method, result.points[static_cast<std::size_t>(p)],
                                           mr.trials[static_cast<std::size_t>(p)], shape));
        }
    }
    return result;
}

std::vector<double> crlb_sweep(const ExperimentSpec& spec) {
    spec.validate();
    const std::vector<SweepPoint> points = sweep_points(spec);
    std::vector<double> out;
    for (std::size_t p = 0; p < points.size(); ++p) {
        double sum = 0.0;
        for (int t = 0; t < spec.trials; ++t) {
            const Scenario s = trial_scenario(spec, static_cast<int>(p), t);
            NoiseModel noise = noise_from_snr(s, points[p].snr_db, spec.k2);
            if (points[p].antenna_variance > 0.0) {
                set_antenna_variance(noise, s, points[p].antenna_variance);
                sum += crlb_with_antenna_errors(s, noise).root;
            } else {
                sum += crlb(s, noise).root;
            }
        }
        out.push_back(sum / spec.trials);
    }
    return out;
}

std::string sweep_table(const ExperimentResult& result, const MethodResult& method) {
    const bool antenna_sweep =
        std::any_of(result.points.begin(), result.points.end(),
                    [](const SweepPoint& p) { return p.antenna_variance > 0.0; });
    std::string out = metrics_csv_header();
    if (antenna_sweep) out += ",antenna_variance";
    out += '\n';
    for (const MetricsReport& r : method.reports) {
        out += metrics_csv_row(r);
        if (antenna_sweep) out += ',' + format_double(r.antenna_variance);
        out += '\n';
    }
    return out;
}

std::string library_version() { return "mimoloc 0.1.0"; }

void write_experiment_outputs(const ExperimentSpec& spec, const ExperimentResult& result,
                              const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());

    auto write_file = [&](const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw Error("cannot write '" + (dir / name).string() + "'");
        out << content;
        if (!out) throw Error("failed writing '" + (dir / name).string() + "'");
    };

    for (const MethodResult& m : result.methods) {
        write_file("sweep_" + m.method + ".csv", sweep_table(result, m));
        if (spec.write_trials) {
            std::string table = "point,trial,seed,err,iters,converged\n";
            for (const auto& per_point : m.trials) {
                for (const TrialRecord& t : per_point) {
                    table += std::to_string(t.point) + ',' + std::to_string(t.trial) + ',' +
                             std::to_string(t.seed) + ',' + format_double(t.error) + ',' +
                             std::to_string(t.iterations) + ',' + (t.converged ? "1" : "0") + '\n';
                }
            }
            write_file("trials_" + m.method + ".csv", table);
        }
    }

    nlohmann::ordered_json manifest;
    manifest["version"] = library_version();
    manifest["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + '.' +
                        std::to_string(EIGEN_MAJOR_VERSION) + '.' +
                        std::to_string(EIGEN_MINOR_VERSION);
    manifest["master_seed"] = spec.master_seed;
    manifest["seed_derivation"] =
        "trial key = mix(master_seed, point, trial); streams: target/geometry = "
        "mix(master_seed, trial, 1|2), ranges = mix(key, 3), antennas = mix(key, 4), "
        "method = mix(key, 16 + method index)";
    manifest["spec"] = nlohmann::ordered_json::parse(spec_to_json(spec));
    auto& pts = manifest["points"] = nlohmann::ordered_json::array();
    for (const SweepPoint& p : result.points) {
        pts.push_back({{"snr_db", p.snr_db}, {"antenna_variance", p.antenna_variance}});
    }
    auto& reports = manifest["reports"];
    for (const MethodResult& m : result.methods) {
        auto& arr = reports[m.method] = nlohmann::ordered_json::array();
        for (const MetricsReport& r : m.reports) {
            arr.push_back(nlohmann::ordered_json::parse(metrics_to_json(r, -1)));
        }
    }
    write_file("manifest.json", manifest.dump(2) + '\n');
}

}  // namespace mimoloc
