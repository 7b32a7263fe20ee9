#include "mimoloc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "mimoloc/errors.hpp"

namespace mimoloc {

namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

void reject_unknown(const json& obj, std::string_view section,
                    std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) {
        throw InvalidInput("section '" + std::string(section) + "' must be an object");
    }
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw InvalidInput("unknown key '" + item.key() + "' in section '" +
                               std::string(section) + "'");
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("bad value for '") + key + "': " + e.what());
    }
}

Vec read_point(const json& value, const char* what) {
    if (!value.is_array() || value.empty()) {
        throw InvalidInput(std::string(what) + " must be a nonempty array of numbers");
    }
    Vec p(static_cast<Eigen::Index>(value.size()));
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_number()) throw InvalidInput(std::string(what) + " must hold numbers");
        p(static_cast<Eigen::Index>(i)) = value[i].get<double>();
    }
    return p;
}

Mat read_points(const json& value, const char* what) {
    if (!value.is_array() || value.empty()) {
        throw InvalidInput(std::string(what) + " must be a nonempty array of positions");
    }
    const Vec first = read_point(value[0], what);
    Mat out(first.size(), static_cast<Eigen::Index>(value.size()));
    for (std::size_t j = 0; j < value.size(); ++j) {
        const Vec p = read_point(value[j], what);
        if (p.size() != first.size()) {
            throw InvalidInput(std::string(what) + " positions differ in length");
        }
        out.col(static_cast<Eigen::Index>(j)) = p;
    }
    return out;
}

ordered write_point(const Vec& p) {
    ordered out = ordered::array();
    for (Eigen::Index i = 0; i < p.size(); ++i) out.push_back(p(i));
    return out;
}

ordered write_points(const Mat& m) {
    ordered out = ordered::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(write_point(m.col(j)));
    return out;
}

void parse_scenario(const json& j, ExperimentSpec& spec) {
    reject_unknown(j, "scenario",
                   {"builtin", "transmitters", "receivers", "target", "random_circle",
                    "target_mode", "target_box"});
    const int forms = static_cast<int>(j.contains("builtin")) +
                      static_cast<int>(j.contains("transmitters")) +
                      static_cast<int>(j.contains("random_circle"));
    if (forms != 1) {
        throw InvalidInput(
            "scenario needs exactly one of 'builtin', 'transmitters'/'receivers' or "
            "'random_circle'");
    }
    ScenarioSource& src = spec.scenario;
    if (j.contains("builtin")) {
        src.kind = ScenarioSource::Kind::Builtin;
        read(j, "builtin", src.builtin);
        builtin_scenario(src.builtin);  // NotFound early
    } else if (j.contains("transmitters")) {
        src.kind = ScenarioSource::Kind::Inline;
        if (!j.contains("receivers") || !j.contains("target")) {
            throw InvalidInput("inline scenario needs transmitters, receivers and target");
        }
        Scenario& s = src.inline_geometry;
        s.transmitters = read_points(j.at("transmitters"), "transmitters");
        s.receivers = read_points(j.at("receivers"), "receivers");
        s.target = read_point(j.at("target"), "target");
        s.dim = static_cast<int>(s.transmitters.rows());
        s.validate();
    } else {
        src.kind = ScenarioSource::Kind::RandomCircle;
        const json& rc = j.at("random_circle");
        reject_unknown(rc, "scenario.random_circle", {"transmitters", "receivers", "radius"});
        read(rc, "transmitters", src.circle_tx);
        read(rc, "receivers", src.circle_rx);
        read(rc, "radius", src.circle_radius);
    }
    if (j.contains("target_mode")) {
        const std::string mode = j.at("target_mode").get<std::string>();
        if (mode == "fixed") {
            spec.target_mode = TargetMode::Fixed;
        } else if (mode == "uniform-box") {
            spec.target_mode = TargetMode::UniformBox;
        } else {
            throw InvalidInput("target_mode must be 'fixed' or 'uniform-box'");
        }
    }
    if (j.contains("target_box")) {
        const json& b = j.at("target_box");
        reject_unknown(b, "scenario.target_box", {"lower", "upper"});
        if (!b.contains("lower") || !b.contains("upper")) {
            throw InvalidInput("target_box needs lower and upper");
        }
        spec.target_box = SearchBox{read_point(b.at("lower"), "target_box.lower"),
                                    read_point(b.at("upper"), "target_box.upper")};
    }
}

void parse_solver(const json& j, SolverConfig& c) {
    reject_unknown(j, "solver",
                   {"rho", "c", "dt", "eps1", "max_iters", "init_box", "normalized_span",
                    "divergence_threshold", "restart_on_divergence", "max_restarts"});
    read(j, "rho", c.rho);
    read(j, "c", c.c);
    read(j, "dt", c.dt);
    read(j, "eps1", c.eps1);
    read(j, "max_iters", c.max_iters);
    read(j, "init_box", c.init_box);
    read(j, "normalized_span", c.normalized_span);
    read(j, "divergence_threshold", c.divergence_threshold);
    read(j, "restart_on_divergence", c.restart_on_divergence);
    read(j, "max_restarts", c.max_restarts);
}

void parse_sweep(const json& j, ExperimentSpec& spec) {
    reject_unknown(j, "sweep",
                   {"snr_db", "antenna_variance", "methods", "trials", "master_seed", "workers",
                    "oracle"});
    read(j, "snr_db", spec.snr_db);
    read(j, "antenna_variance", spec.antenna_variance);
    read(j, "methods", spec.methods);
    read(j, "trials", spec.trials);
    read(j, "master_seed", spec.master_seed);
    read(j, "workers", spec.workers);
    if (j.contains("oracle")) {
        const json& o = j.at("oracle");
        reject_unknown(o, "sweep.oracle", {"half_width", "coarse_step"});
        read(o, "half_width", spec.oracle.half_width);
        read(o, "coarse_step", spec.oracle.coarse_step);
    }
}

}  // namespace

const std::vector<std::string>& experiment_method_names() {
    static const std::vector<std::string> names = {"rnfnn", "mlpnn", "lpnn", "oracle"};
    return names;
}

void ExperimentSpec::validate() const {
    if (trials < 1) throw InvalidInput("trials must be at least 1");
    if (workers < 0) throw InvalidInput("workers must be non-negative");
    if (methods.empty()) throw InvalidInput("methods must be nonempty");
    const auto& known = experiment_method_names();
    for (std::size_t i = 0; i < methods.size(); ++i) {
        if (std::find(known.begin(), known.end(), methods[i]) == known.end()) {
            throw InvalidInput("unknown method '" + methods[i] + "'");
        }
        if (std::find(methods.begin(), methods.begin() + static_cast<long>(i), methods[i]) !=
            methods.begin() + static_cast<long>(i)) {
            throw InvalidInput("method '" + methods[i] + "' listed twice");
        }
    }
    if (snr_db.empty() && antenna_variance.empty()) {
        throw InvalidInput("snr_db must be nonempty unless an antenna_variance sweep is given");
    }
    for (double s : snr_db) {
        if (!std::isfinite(s)) throw InvalidInput("snr values must be finite");
    }
    for (double v : antenna_variance) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidInput("antenna variances must be finite and strictly positive");
        }
    }
    if (!(k2 > 0.0)) throw InvalidInput("k2 must be strictly positive");
    if (!(oracle.half_width > 0.0) || !(oracle.coarse_step > 0.0)) {
        throw InvalidInput("oracle half_width and coarse_step must be strictly positive");
    }
    if (scenario.kind == ScenarioSource::Kind::RandomCircle) {
        if (scenario.circle_tx < 2 || scenario.circle_rx < 2) {
            throw InvalidInput("random circle needs at least 2 transmitters and 2 receivers");
        }
        if (!(scenario.circle_radius > 0.0)) throw InvalidInput("circle radius must be positive");
    }
    if (target_box) {
        if (target_box->lower.size() != target_box->upper.size() ||
            !(target_box->lower.array() <= target_box->upper.array()).all()) {
            throw InvalidInput("target_box lower must not exceed upper");
        }
    }
    solver.validate();
}

ExperimentSpec parse_experiment_spec(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("spec is not valid JSON: ") + e.what());
    }
    reject_unknown(root, "top level", {"scenario", "noise", "solver", "sweep", "output"});

    ExperimentSpec spec;
    if (root.contains("scenario")) parse_scenario(root.at("scenario"), spec);
    if (root.contains("noise")) {
        const json& n = root.at("noise");
        reject_unknown(n, "noise", {"k2"});
        read(n, "k2", spec.k2);
    }
    if (root.contains("solver")) parse_solver(root.at("solver"), spec.solver);
    if (root.contains("sweep")) parse_sweep(root.at("sweep"), spec);
    if (root.contains("output")) {
        const json& o = root.at("output");
        reject_unknown(o, "output", {"directory", "trials_table"});
        read(o, "directory", spec.output_dir);
        read(o, "trials_table", spec.write_trials);
    }
    spec.validate();
    return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open spec file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_spec(buf.str());
}

std::string spec_to_json(const ExperimentSpec& spec, int indent) {
    ordered root;
    ordered& sc = root["scenario"];
    switch (spec.scenario.kind) {
        case ScenarioSource::Kind::Builtin:
            sc["builtin"] = spec.scenario.builtin;
            break;
        case ScenarioSource::Kind::Inline:
            sc["transmitters"] = write_points(spec.scenario.inline_geometry.transmitters);
            sc["receivers"] = write_points(spec.scenario.inline_geometry.receivers);
            sc["target"] = write_point(spec.scenario.inline_geometry.target);
            break;
        case ScenarioSource::Kind::RandomCircle:
            sc["random_circle"] = {{"transmitters", spec.scenario.circle_tx},
                                   {"receivers", spec.scenario.circle_rx},
                                   {"radius", spec.scenario.circle_radius}};
            break;
    }
    sc["target_mode"] = spec.target_mode == TargetMode::Fixed ? "fixed" : "uniform-box";
    if (spec.target_box) {
        sc["target_box"] = {{"lower", write_point(spec.target_box->lower)},
                            {"upper", write_point(spec.target_box->upper)}};
    }

    root["noise"] = {{"k2", spec.k2}};

    const SolverConfig& c = spec.solver;
    root["solver"] = {{"rho", c.rho},
                      {"c", c.c},
                      {"dt", c.dt},
                      {"eps1", c.eps1},
                      {"max_iters", c.max_iters},
                      {"init_box", c.init_box},
                      {"normalized_span", c.normalized_span},
                      {"divergence_threshold", c.divergence_threshold},
                      {"restart_on_divergence", c.restart_on_divergence},
                      {"max_restarts", c.max_restarts}};

    ordered& sw = root["sweep"];
    sw["snr_db"] = spec.snr_db;
    sw["antenna_variance"] = spec.antenna_variance;
    sw["methods"] = spec.methods;
    sw["trials"] = spec.trials;
    sw["master_seed"] = spec.master_seed;
    sw["workers"] = spec.workers;
    sw["oracle"] = {{"half_width", spec.oracle.half_width},
                    {"coarse_step", spec.oracle.coarse_step}};

    root["output"] = {{"directory", spec.output_dir}, {"trials_table", spec.write_trials}};
    return root.dump(indent);
}

}  // namespace mimoloc
