#include "mimoloc/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "flow_kernels.hpp"
#include "mimoloc/errors.hpp"
#include "mimoloc/rng.hpp"

namespace mimoloc {

namespace {

// Stream ids for the solver's random draws.
constexpr std::uint64_t kInitPositionStream = 1;
constexpr std::uint64_t kInitMultiplierStream = 2;

struct Normalized {
    double unit = 1.0;
    Scenario scenario;
    MeasurementSet meas;
};

double length_unit_for(double antenna_scale, const SolverConfig& config) {
    return antenna_scale > 0.0 ? antenna_scale / config.normalized_span : 1.0;
}

Normalized normalize(const Scenario& scenario, const MeasurementSet& meas, double unit) {
    Normalized out;
    out.unit = unit;
    out.scenario = scenario;
    out.scenario.transmitters /= unit;
    out.scenario.receivers /= unit;
    out.scenario.target /= unit;
    out.meas = meas;
    out.meas.range /= unit;
    if (out.meas.antennas) {
        out.meas.antennas->transmitters /= unit;
        out.meas.antennas->receivers /= unit;
    }
    return out;
}

Vec draw_position(int dim, double half_width, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, 0, kInitPositionStream);
    Vec u(dim);
    for (int d = 0; d < dim; ++d) u(d) = rng.uniform(-half_width, half_width);
    return u;
}

Vec distances(const Vec& u, const Mat& antennas) {
    return (antennas.colwise() - u).colwise().norm().transpose();
}

RnfState initial_rnf(const Vec& u, const Mat& tx, const Mat& rx) {
    return {u, distances(u, tx), distances(u, rx)};
}

LpnnState initial_lpnn(const Vec& u, const Mat& tx, const Mat& rx, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, 0, kInitMultiplierStream);
    LpnnState y{u, distances(u, tx), distances(u, rx), Vec(tx.cols()), Vec(rx.cols())};
    for (Eigen::Index m = 0; m < tx.cols(); ++m) y.lambda_t(m) = rng.uniform();
    for (Eigen::Index n = 0; n < rx.cols(); ++n) y.lambda_s(n) = rng.uniform();
    return y;
}

ExtendedRnfState initial_extended(const Vec& u, const AntennaObservation& obs) {
    return {u, obs.transmitters, obs.receivers, distances(u, obs.transmitters),
            distances(u, obs.receivers)};
}

// Scale length-like blocks between physical and internal units.
RnfState scaled(RnfState x, double f) {
    x.u *= f;
    x.h_t *= f;
    x.h_s *= f;
    return x;
}

LpnnState scaled(LpnnState y, double f) {
    y.u *= f;
    y.g_t *= f;
    y.g_s *= f;
    return y;
}

ExtendedRnfState scaled(ExtendedRnfState x, double f) {
    x.u *= f;
    x.t *= f;
    x.s *= f;
    x.h_t *= f;
    x.h_s *= f;
    return x;
}

// Explicit Euler on the packed state. `derivative(x, a)` writes the flow at
// x into a; `initial(seed)` returns a fresh internal-unit state.
template <class State, class Derivative, class Initial>
SolveResult integrate(const Derivative& derivative, const Initial& initial,
                      const SolverConfig& config, double unit, std::uint64_t seed, int dim, int m,
                      int n) {
    const auto start = std::chrono::steady_clock::now();
    SolveResult result;
    result.length_unit = unit;

    // e is reported in physical units.
    const double e_scale = unit * unit;
    auto record = [&](const Vec& x, double e) {
        result.trajectory.push_back(
            {result.iterations, e, scaled(State::unpack(x, dim, m, n), unit).pack()});
    };

    Vec x = initial(seed).pack();
    Vec a = Vec::Zero(x.size());
    bool finished = false;
    while (!finished) {
        bool diverged = false;
        long k = 1;
        for (;; ++k) {
            derivative(x.data(), a.data());
            x += config.dt * a;
            const double e = e_scale * a.squaredNorm();
            result.final_e = e;
            ++result.iterations;

            // A non-finite state yields a non-finite derivative one step later.
            if (!std::isfinite(e) || e > config.divergence_threshold) {
                diverged = true;
                break;
            }
            if (config.record_trajectory &&
                (k % config.trajectory_stride == 0 || e < config.eps1 || k >= config.max_iters)) {
                record(x, e);
            }
            if (e < config.eps1) {
                if (!x.allFinite()) diverged = true;
                else result.converged = true;
                break;
            }
            if (k >= config.max_iters) {
                diverged = !x.allFinite();
                break;
            }
        }

        if (!diverged) {
            finished = true;
        } else if (config.restart_on_divergence && result.restarts < config.max_restarts) {
            ++result.restarts;
            x = initial(derive_seed({seed, static_cast<std::uint64_t>(result.restarts)})).pack();
        } else {
            result.diverged = true;
            result.diagnostic = "state diverged after " + std::to_string(k) +
                                " iterations (restarts used: " + std::to_string(result.restarts) +
                                ")";
            finished = true;
        }
    }

    result.estimate = x.head(dim) * unit;
    result.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

detail::FlowInputs flow_inputs(const MeasurementSet& meas, int dim) {
    return {dim, meas.num_tx(), meas.num_rx(), meas.range.data(), meas.weight.data()};
}

void check_dims(const Scenario& scenario, const MeasurementSet& meas) {
    scenario.validate();
    if (meas.num_tx() != scenario.num_tx() || meas.num_rx() != scenario.num_rx() ||
        meas.weight.rows() != meas.num_tx() || meas.weight.cols() != meas.num_rx()) {
        throw InvalidInput("measurement set does not match the scenario");
    }
}

double observed_scale(const AntennaObservation& obs) {
    return std::max(obs.transmitters.cwiseAbs().maxCoeff(), obs.receivers.cwiseAbs().maxCoeff());
}

Scenario scenario_from_observation(const AntennaObservation& obs) {
    Scenario sc;
    sc.dim = static_cast<int>(obs.transmitters.rows());
    sc.transmitters = obs.transmitters;
    sc.receivers = obs.receivers;
    sc.target = Vec::Zero(sc.dim);
    return sc;
}

}  // namespace

std::string to_string(Network network) {
    switch (network) {
        case Network::Rnfnn: return "rnfnn";
        case Network::Lpnn: return "lpnn";
        case Network::RnfnnAntenna: return "rnfnn-antenna";
    }
    return "unknown";
}

void SolverConfig::validate() const {
    if (!(rho > 0.0)) throw InvalidInput("rho must be strictly positive");
    if (!(c > 0.0)) throw InvalidInput("c must be strictly positive");
    if (!(dt > 0.0)) throw InvalidInput("dt must be strictly positive");
    if (!(eps1 > 0.0)) throw InvalidInput("eps1 must be strictly positive");
    if (max_iters < 1) throw InvalidInput("max_iters must be at least 1");
    if (!(init_box > 0.0)) throw InvalidInput("init_box must be strictly positive");
    if (!(normalized_span > 0.0)) throw InvalidInput("normalized_span must be strictly positive");
    if (trajectory_stride < 1) throw InvalidInput("trajectory_stride must be at least 1");
    if (max_restarts < 0) throw InvalidInput("max_restarts must be non-negative");
}

InitialState init_state(const Scenario& scenario, const MeasurementSet& meas,
                        const SolverConfig& config, std::uint64_t seed, Network mode) {
    const Vec u = draw_position(scenario.dim, config.init_box, seed);
    switch (mode) {
        case Network::Rnfnn:
            return initial_rnf(u, scenario.transmitters, scenario.receivers);
        case Network::Lpnn:
            return initial_lpnn(u, scenario.transmitters, scenario.receivers, seed);
        case Network::RnfnnAntenna:
            if (!meas.antennas) throw InvalidInput("antenna mode requires observed antennas");
            return initial_extended(u, *meas.antennas);
    }
    throw InvalidInput("unknown network mode");
}

SolveResult solve_rnfnn(const MeasurementSet& meas, const Scenario& scenario,
                        const SolverConfig& config, std::uint64_t seed) {
    config.validate();
    check_dims(scenario, meas);
    if (meas.antenna_mode()) {
        throw InvalidInput("measurements carry observed antennas; use solve_rnfnn_antenna");
    }
    const Normalized nz = normalize(scenario, meas, length_unit_for(scenario.antenna_scale(), config));
    const double unit = nz.unit;

    const int dim = scenario.dim;
    const int m = meas.num_tx();
    const int n = meas.num_rx();
    const detail::FlowInputs in = flow_inputs(nz.meas, dim);
    const double* tx = nz.scenario.transmitters.data();
    const double* rx = nz.scenario.receivers.data();
    const double rho = config.rho;

    auto initial = [&](std::uint64_t s) {
        const Vec u = draw_position(dim, config.init_box, s) / unit;
        return initial_rnf(u, nz.scenario.transmitters, nz.scenario.receivers);
    };
    return detail::dispatch_dim(dim, [&](auto fixed) {
        auto derivative = [&](const double* x, double* a) {
            detail::relaxed_flow<fixed()>(in, x, tx, rx, x + dim, x + dim + m, rho, a, a + dim,
                                          a + dim + m, nullptr, nullptr);
        };
        return integrate<RnfState>(derivative, initial, config, unit, seed, dim, m, n);
    });
}

SolveResult solve_lpnn(const MeasurementSet& meas, const Scenario& scenario,
                       const SolverConfig& config, std::uint64_t seed) {
    config.validate();
    check_dims(scenario, meas);
    if (meas.antenna_mode()) {
        throw InvalidInput("the Lagrange network does not model antenna position errors");
    }
    const Normalized nz = normalize(scenario, meas, length_unit_for(scenario.antenna_scale(), config));
    const double unit = nz.unit;

    // Multipliers keep their first draw across restarts; only u is re-drawn.
    const LpnnState first = initial_lpnn(Vec::Zero(scenario.dim), nz.scenario.transmitters,
                                         nz.scenario.receivers, seed);

    const int dim = scenario.dim;
    const int m = meas.num_tx();
    const int n = meas.num_rx();
    const detail::FlowInputs in = flow_inputs(nz.meas, dim);
    const double* tx = nz.scenario.transmitters.data();
    const double* rx = nz.scenario.receivers.data();
    const double c = config.c;

    // Packed layout [u | g_t | g_s | lambda_t | lambda_s].
    const int gt = dim;
    const int gs = gt + m;
    const int lt = gs + n;
    const int ls = lt + m;
    auto initial = [&](std::uint64_t s) {
        const Vec u = draw_position(dim, config.init_box, s) / unit;
        LpnnState y = first;
        y.u = u;
        y.g_t = distances(u, nz.scenario.transmitters);
        y.g_s = distances(u, nz.scenario.receivers);
        return y;
    };
    return detail::dispatch_dim(dim, [&](auto fixed) {
        auto derivative = [&](const double* y, double* a) {
            detail::lagrange_flow<fixed()>(in, y, tx, rx, y + gt, y + gs, y + lt, y + ls, c, a,
                                           a + gt, a + gs, a + lt, a + ls);
        };
        return integrate<LpnnState>(derivative, initial, config, unit, seed, dim, m, n);
    });
}

SolveResult solve_rnfnn_antenna(const MeasurementSet& meas, const SolverConfig& config,
                                std::uint64_t seed) {
    config.validate();
    if (!meas.antennas) {
        throw InvalidInput("antenna-error network requires observed antenna positions");
    }
    const Scenario observed = scenario_from_observation(*meas.antennas);
    check_dims(observed, meas);
    if (meas.antennas->weight_t.size() != meas.num_tx() ||
        meas.antennas->weight_s.size() != meas.num_rx()) {
        throw InvalidInput("antenna weights do not match the antenna counts");
    }
    const Normalized nz =
        normalize(observed, meas, length_unit_for(observed_scale(*meas.antennas), config));
    const double unit = nz.unit;

    const int dim = observed.dim;
    const int m = meas.num_tx();
    const int n = meas.num_rx();
    const detail::FlowInputs in = flow_inputs(nz.meas, dim);
    const AntennaObservation& obs = *nz.meas.antennas;
    const double rho = config.rho;

    // Packed layout [u | t | s | h_t | h_s].
    const int t = dim;
    const int s = t + dim * m;
    const int ht = s + dim * n;
    const int hs = ht + m;
    auto initial = [&](std::uint64_t attempt) {
        const Vec u = draw_position(dim, config.init_box, attempt) / unit;
        return initial_extended(u, obs);
    };
    return detail::dispatch_dim(dim, [&](auto fixed) {
        auto derivative = [&](const double* x, double* a) {
            detail::relaxed_flow<fixed()>(in, x, x + t, x + s, x + ht, x + hs, rho, a, a + ht,
                                          a + hs, a + t, a + s);
            detail::add_antenna_prior<fixed()>(dim, m, obs.transmitters.data(),
                                               obs.weight_t.data(), x + t, a + t);
            detail::add_antenna_prior<fixed()>(dim, n, obs.receivers.data(), obs.weight_s.data(),
                                               x + s, a + s);
        };
        return integrate<ExtendedRnfState>(derivative, initial, config, unit, seed, dim, m, n);
    });
}

double stationarity(const MeasurementSet& meas, const Scenario& scenario,
                    const SolverConfig& config, const InitialState& state) {
    return std::visit(
        [&](const auto& x) -> double {
            using State = std::decay_t<decltype(x)>;
            double scale = 0.0;
            if constexpr (std::is_same_v<State, ExtendedRnfState>) {
                scale = observed_scale(*meas.antennas);
            } else {
                scale = scenario.antenna_scale();
            }
            const double unit = length_unit_for(scale, config);
            const Normalized nz = normalize(scenario, meas, unit);
            const State xi = scaled(x, 1.0 / unit);
            State a = xi;
            if constexpr (std::is_same_v<State, RnfState>) {
                rnfnn_derivative(xi, nz.meas, nz.scenario, config.rho, a);
            } else if constexpr (std::is_same_v<State, LpnnState>) {
                lpnn_derivative(xi, nz.meas, nz.scenario, config.c, a);
            } else {
                extended_rnfnn_derivative(xi, nz.meas, config.rho, a);
            }
            return unit * unit * a.squared_norm();
        },
        state);
}

Vec oracle_ml_estimate(const MeasurementSet& meas, const Scenario& scenario, const SearchBox& box,
                       double coarse_step) {
    check_dims(scenario, meas);
    const int dim = scenario.dim;
    if (box.lower.size() != dim || box.upper.size() != dim) {
        throw InvalidInput("search box dimension does not match the scenario");
    }
    if (!((box.upper - box.lower).array() > 0.0).all()) {
        throw InvalidInput("search box is empty");
    }
    if (!(coarse_step > 0.0)) {
        throw InvalidInput("grid step must be strictly positive");
    }

    Vec best = box.lower;
    double best_value = std::numeric_limits<double>::infinity();

    // Scans the grid lo + i*step (i = 0..count_d) in every axis.
    auto scan = [&](const Vec& lo, const Vec& hi, double step) {
        Eigen::VectorXi count(dim);
        for (int d = 0; d < dim; ++d) {
            count(d) = static_cast<int>(std::floor((hi(d) - lo(d)) / step + 1e-9));
        }
        Eigen::VectorXi idx = Eigen::VectorXi::Zero(dim);
        Vec u(dim);
        for (;;) {
            for (int d = 0; d < dim; ++d) u(d) = lo(d) + idx(d) * step;
            const double value = ml_objective(u, meas, scenario);
            if (value < best_value) {
                best_value = value;
                best = u;
            }
            int d = 0;
            while (d < dim && ++idx(d) > count(d)) {
                idx(d) = 0;
                ++d;
            }
            if (d == dim) break;
        }
    };

    double step = coarse_step;
    scan(box.lower, box.upper, step);
    for (int pass = 0; pass < 3; ++pass) {
        const Vec center = best;
        const Vec lo = center.array() - step;
        const Vec hi = center.array() + step;
        step /= 10.0;
        scan(lo, hi, step);
    }
    return best;
}

void write_trajectory_csv(std::ostream& out, const SolveResult& result, int dim) {
    const auto old_precision = out.precision(17);
    out << "k,e";
    const Eigen::Index width = result.trajectory.empty() ? dim : result.trajectory.front().state.size();
    for (int d = 0; d < dim; ++d) out << ",u_" << (d + 1);
    for (Eigen::Index i = dim; i < width; ++i) out << ",x_" << (i + 1);
    out << '\n';
    for (const TrajectoryPoint& p : result.trajectory) {
        out << p.k << ',' << p.e;
        for (Eigen::Index i = 0; i < p.state.size(); ++i) out << ',' << p.state(i);
        out << '\n';
    }
    out.precision(old_precision);
}

}  // namespace mimoloc
