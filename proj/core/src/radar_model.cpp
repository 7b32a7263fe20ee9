#include "mimoloc/radar_model.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "mimoloc/errors.hpp"
#include "mimoloc/rng.hpp"

namespace mimoloc {

namespace {

void require_positive(const Eigen::Ref<const Mat>& v, const char* what) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double x = v.data()[i];
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw InvalidInput(std::string(what) + " must be finite and strictly positive");
        }
    }
}

}  // namespace

void Scenario::validate() const {
    if (dim != 2 && dim != 3) {
        throw InvalidInput("scenario dimension must be 2 or 3");
    }
    if (transmitters.cols() < 1 || receivers.cols() < 1) {
        throw InvalidInput("scenario needs at least one transmitter and one receiver");
    }
    if (transmitters.rows() != dim || receivers.rows() != dim || target.size() != dim) {
        throw InvalidInput("all positions must have length equal to the scenario dimension");
    }
    if (!transmitters.allFinite() || !receivers.allFinite() || !target.allFinite()) {
        throw InvalidInput("scenario coordinates must be finite");
    }
}

double Scenario::antenna_scale() const {
    double scale = 0.0;
    if (transmitters.size() > 0) scale = std::max(scale, transmitters.cwiseAbs().maxCoeff());
    if (receivers.size() > 0) scale = std::max(scale, receivers.cwiseAbs().maxCoeff());
    return scale;
}

double bistatic_range(const Vec& u, const Vec& t, const Vec& s) {
    if (u.size() != t.size() || u.size() != s.size()) {
        throw InvalidInput("bistatic_range: position dimensions differ");
    }
    return (u - t).norm() + (u - s).norm();
}

Mat bistatic_ranges(const Vec& u, const Mat& transmitters, const Mat& receivers) {
    const Vec dt = (transmitters.colwise() - u).colwise().norm().transpose();
    const Vec ds = (receivers.colwise() - u).colwise().norm().transpose();
    return dt.replicate(1, ds.size()) + ds.transpose().replicate(dt.size(), 1);
}

Mat pair_weights(const Mat& variance) {
    require_positive(variance, "pair variance");
    const Mat inv = variance.cwiseInverse();
    return inv / inv.sum();
}

Vec inverse_variance_weights(const Vec& variance) {
    require_positive(variance, "antenna variance");
    const Vec inv = variance.cwiseInverse();
    return inv / inv.sum();
}

Mat uniform_pair_weights(int m, int n) {
    return Mat::Constant(m, n, 1.0 / (static_cast<double>(m) * n));
}

MeasurementSet simulate_measurements(const Scenario& scenario, const NoiseModel& noise,
                                     std::uint64_t seed) {
    scenario.validate();
    const int m = scenario.num_tx();
    const int n = scenario.num_rx();
    if (noise.pair_variance.rows() != m || noise.pair_variance.cols() != n) {
        throw InvalidInput("pair variance must be M x N");
    }

    MeasurementSet meas;
    meas.noise = noise;
    meas.weight = pair_weights(noise.pair_variance);
    meas.range = bistatic_ranges(scenario.target, scenario.transmitters, scenario.receivers);

    // Row-major draw order over (m, n).
    Rng rng(seed);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            meas.range(i, j) += std::sqrt(noise.pair_variance(i, j)) * rng.normal();
        }
    }
    return meas;
}

NoiseModel noise_from_snr(const Scenario& scenario, double snr_db, double k2) {
    scenario.validate();
    if (!std::isfinite(snr_db)) {
        throw InvalidInput("SNR must be finite");
    }
    if (!(k2 > 0.0)) {
        throw InvalidInput("k2 must be strictly positive");
    }
    const Vec gt = (scenario.transmitters.colwise() - scenario.target).colwise().norm().transpose();
    const Vec gs = (scenario.receivers.colwise() - scenario.target).colwise().norm().transpose();
    if (gt.minCoeff() <= 0.0 || gs.minCoeff() <= 0.0) {
        throw SingularGeometry("target coincides with an antenna");
    }

    const Mat geometric = (gt.array().square().matrix() * gs.array().square().matrix().transpose());
    const double mean_inv = geometric.cwiseInverse().mean();

    NoiseModel noise;
    noise.k2 = k2;
    noise.k1 = k2 * mean_inv / std::pow(10.0, snr_db / 10.0);
    noise.pair_variance = noise.k1 * geometric;
    return noise;
}

double average_snr_db(const NoiseModel& noise) {
    require_positive(noise.pair_variance, "pair variance");
    return 10.0 * std::log10((noise.k2 * noise.pair_variance.cwiseInverse().array()).mean());
}

void set_antenna_variance(NoiseModel& noise, const Scenario& scenario, double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw InvalidInput("antenna variance must be finite and strictly positive");
    }
    noise.antenna_variance_t = Vec::Constant(scenario.num_tx(), variance);
    noise.antenna_variance_s = Vec::Constant(scenario.num_rx(), variance);
}

AntennaObservation simulate_antenna_positions(const Scenario& scenario, const NoiseModel& noise,
                                              std::uint64_t seed) {
    scenario.validate();
    const int m = scenario.num_tx();
    const int n = scenario.num_rx();
    if (noise.antenna_variance_t.size() != m || noise.antenna_variance_s.size() != n) {
        throw InvalidInput("antenna variances must have M and N entries");
    }

    AntennaObservation obs;
    obs.weight_t = inverse_variance_weights(noise.antenna_variance_t);
    obs.weight_s = inverse_variance_weights(noise.antenna_variance_s);
    obs.transmitters = scenario.transmitters;
    obs.receivers = scenario.receivers;

    Rng rng(seed);
    for (int i = 0; i < m; ++i) {
        const double sigma = std::sqrt(noise.antenna_variance_t(i));
        for (int d = 0; d < scenario.dim; ++d) obs.transmitters(d, i) += sigma * rng.normal();
    }
    for (int j = 0; j < n; ++j) {
        const double sigma = std::sqrt(noise.antenna_variance_s(j));
        for (int d = 0; d < scenario.dim; ++d) obs.receivers(d, j) += sigma * rng.normal();
    }
    return obs;
}

std::vector<std::string> builtin_scenario_names() {
    return {"scenario1-2d", "scenario2-3d"};
}

Scenario builtin_scenario(std::string_view name) {
    Scenario sc;
    if (name == "scenario1-2d") {
        sc.dim = 2;
        sc.transmitters.resize(2, 3);
        sc.transmitters << -1000, 500, 2500,
                           -1300, 2000, 0;
        sc.receivers.resize(2, 3);
        sc.receivers << 1500, 2100, -1200,
                        -1800, 1500, 1000;
        sc.target = Vec(2);
        sc.target << 50, 50;
        return sc;
    }
    if (name == "scenario2-3d") {
        sc.dim = 3;
        sc.transmitters.resize(3, 5);
        sc.transmitters << 2000, 2000, -2000, -2000, 0,
                           3000, -3000, 3000, -3000, 0,
                           800, 1200, 1000, 1600, 1500;
        sc.receivers.resize(3, 6);
        sc.receivers << 4000, -4500, -4500, 0, 0, -6000,
                        4000, 5000, -4500, 6000, -6000, 0,
                        1000, 1500, 1000, 1200, 1000, 1000;
        sc.target = Vec(3);
        sc.target << -500, 600, 550;
        return sc;
    }
    throw NotFound("unknown builtin scenario '" + std::string(name) + "'");
}

Scenario random_circle_scenario(int m, int n, double radius, std::uint64_t seed) {
    if (m < 2 || n < 2) {
        throw InvalidInput("random circle scenario needs at least 2 transmitters and 2 receivers");
    }
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw InvalidInput("circle radius must be finite and strictly positive");
    }
    constexpr double pi = std::numbers::pi;
    Rng rng(seed);
    auto place = [&](Mat& out, int count, double a0, double a1) {
        out.resize(2, count);
        for (int i = 0; i < count; ++i) {
            const double angle = i == 0 ? a0 : i == 1 ? a1 : rng.uniform(-pi, pi);
            out(0, i) = radius * std::cos(angle);
            out(1, i) = radius * std::sin(angle);
        }
    };

    Scenario sc;
    sc.dim = 2;
    place(sc.transmitters, m, 0.0, pi);
    place(sc.receivers, n, pi / 2.0, -pi / 2.0);

    // Uniform in the disk: sqrt on the radial draw.
    const double r = 0.5 * radius * std::sqrt(rng.uniform());
    const double phi = rng.uniform(-pi, pi);
    sc.target = Vec(2);
    sc.target << r * std::cos(phi), r * std::sin(phi);
    return sc;
}

void write_measurements_csv(std::ostream& out, const Scenario& scenario,
                            const MeasurementSet& meas) {
    const Mat truth = bistatic_ranges(scenario.target, scenario.transmitters, scenario.receivers);
    const auto old_precision = out.precision(17);
    out << "m,n,r_true,r_meas,sigma2,w\n";
    for (int i = 0; i < meas.num_tx(); ++i) {
        for (int j = 0; j < meas.num_rx(); ++j) {
            out << (i + 1) << ',' << (j + 1) << ',' << truth(i, j) << ',' << meas.range(i, j) << ','
                << meas.noise.pair_variance(i, j) << ',' << meas.weight(i, j) << '\n';
        }
    }
    out.precision(old_precision);
}

}  // namespace mimoloc
