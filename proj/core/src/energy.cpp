#include "mimoloc/energy.hpp"

#include <cmath>

#include "flow_kernels.hpp"
#include "mimoloc/errors.hpp"

namespace mimoloc {

namespace {

double squared_distance(const Vec& u, const Mat& antennas, Eigen::Index col) {
    double acc = 0.0;
    for (Eigen::Index d = 0; d < u.size(); ++d) {
        const double diff = u(d) - antennas(d, col);
        acc += diff * diff;
    }
    return acc;
}

void check_shapes(const MeasurementSet& meas, const Mat& tx, const Mat& rx, Eigen::Index dim) {
    if (meas.range.rows() != tx.cols() || meas.range.cols() != rx.cols() ||
        meas.weight.rows() != tx.cols() || meas.weight.cols() != rx.cols()) {
        throw InvalidInput("measurement set does not match the antenna geometry");
    }
    if (tx.rows() != dim || rx.rows() != dim) {
        throw InvalidInput("state dimension does not match the antenna geometry");
    }
}

const AntennaObservation& require_antennas(const MeasurementSet& meas) {
    if (!meas.antennas) {
        throw InvalidInput("antenna-error mode requires observed antenna positions");
    }
    return *meas.antennas;
}

// 1/2 sum w (r - a_m - b_n)^2
double half_weighted_residual(const MeasurementSet& meas, const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < meas.range.rows(); ++i) {
        for (Eigen::Index j = 0; j < meas.range.cols(); ++j) {
            const double e = meas.range(i, j) - a(i) - b(j);
            acc += meas.weight(i, j) * e * e;
        }
    }
    return 0.5 * acc;
}

// sum_k coef_k * (h_k^2 - ||u - antenna_k||^2)^p for p in {1, 2}
double constraint_sum(const Vec& u, const Mat& antennas, const Vec& h, const Vec* coef, int power) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < antennas.cols(); ++k) {
        const double c = h(k) * h(k) - squared_distance(u, antennas, k);
        const double term = power == 1 ? c : c * c;
        acc += (coef ? (*coef)(k) : 1.0) * term;
    }
    return acc;
}

detail::FlowInputs flow_inputs(const MeasurementSet& meas, Eigen::Index dim) {
    return {static_cast<int>(dim), static_cast<int>(meas.range.rows()),
            static_cast<int>(meas.range.cols()), meas.range.data(), meas.weight.data()};
}

template <class... Blocks>
double squared_norm_of(const Blocks&... blocks) {
    return (blocks.squaredNorm() + ...);
}

template <class... Blocks>
bool all_finite_of(const Blocks&... blocks) {
    return (blocks.allFinite() && ...);
}

Vec pack_blocks(std::initializer_list<Eigen::Ref<const Mat>> blocks) {
    Eigen::Index total = 0;
    for (const auto& b : blocks) total += b.size();
    Vec flat(total);
    Eigen::Index offset = 0;
    for (const auto& b : blocks) {
        // Column-major flattening stacks antenna positions one after another.
        for (Eigen::Index c = 0; c < b.cols(); ++c) {
            for (Eigen::Index r = 0; r < b.rows(); ++r) flat(offset++) = b(r, c);
        }
    }
    return flat;
}

class Reader {
public:
    explicit Reader(const Vec& flat) : flat_(flat) {}
    Vec vec(Eigen::Index n) {
        Vec v = flat_.segment(offset_, n);
        offset_ += n;
        return v;
    }
    Mat mat(Eigen::Index rows, Eigen::Index cols) {
        Mat out = Eigen::Map<const Mat>(flat_.data() + offset_, rows, cols);
        offset_ += rows * cols;
        return out;
    }
    void finish() const {
        if (offset_ != flat_.size()) throw InvalidInput("flat state has the wrong length");
    }

private:
    const Vec& flat_;
    Eigen::Index offset_ = 0;
};

void require_length(const Vec& flat, Eigen::Index expected) {
    if (flat.size() != expected) throw InvalidInput("flat state has the wrong length");
}

}  // namespace

// ---------------------------------------------------------------- states

RnfState RnfState::zeros(int dim, int m, int n) {
    return {Vec::Zero(dim), Vec::Zero(m), Vec::Zero(n)};
}

RnfState RnfState::unpack(const Vec& flat, int dim, int m, int n) {
    require_length(flat, dim + m + n);
    Reader r(flat);
    RnfState x{r.vec(dim), r.vec(m), r.vec(n)};
    r.finish();
    return x;
}

Vec RnfState::pack() const { return pack_blocks({u, h_t, h_s}); }

void RnfState::axpy(double a, const RnfState& d) {
    u += a * d.u;
    h_t += a * d.h_t;
    h_s += a * d.h_s;
}

double RnfState::squared_norm() const { return squared_norm_of(u, h_t, h_s); }
bool RnfState::all_finite() const { return all_finite_of(u, h_t, h_s); }

ExtendedRnfState ExtendedRnfState::zeros(int dim, int m, int n) {
    return {Vec::Zero(dim), Mat::Zero(dim, m), Mat::Zero(dim, n), Vec::Zero(m), Vec::Zero(n)};
}

ExtendedRnfState ExtendedRnfState::unpack(const Vec& flat, int dim, int m, int n) {
    require_length(flat, dim + (dim + 1) * (m + n));
    Reader r(flat);
    ExtendedRnfState x;
    x.u = r.vec(dim);
    x.t = r.mat(dim, m);
    x.s = r.mat(dim, n);
    x.h_t = r.vec(m);
    x.h_s = r.vec(n);
    r.finish();
    return x;
}

Vec ExtendedRnfState::pack() const { return pack_blocks({u, t, s, h_t, h_s}); }

void ExtendedRnfState::axpy(double a, const ExtendedRnfState& d) {
    u += a * d.u;
    t += a * d.t;
    s += a * d.s;
    h_t += a * d.h_t;
    h_s += a * d.h_s;
}

double ExtendedRnfState::squared_norm() const { return squared_norm_of(u, t, s, h_t, h_s); }
bool ExtendedRnfState::all_finite() const { return all_finite_of(u, t, s, h_t, h_s); }

LpnnState LpnnState::zeros(int dim, int m, int n) {
    return {Vec::Zero(dim), Vec::Zero(m), Vec::Zero(n), Vec::Zero(m), Vec::Zero(n)};
}

LpnnState LpnnState::unpack(const Vec& flat, int dim, int m, int n) {
    require_length(flat, dim + 2 * (m + n));
    Reader r(flat);
    LpnnState y;
    y.u = r.vec(dim);
    y.g_t = r.vec(m);
    y.g_s = r.vec(n);
    y.lambda_t = r.vec(m);
    y.lambda_s = r.vec(n);
    r.finish();
    return y;
}

Vec LpnnState::pack() const { return pack_blocks({u, g_t, g_s, lambda_t, lambda_s}); }

void LpnnState::axpy(double a, const LpnnState& d) {
    u += a * d.u;
    g_t += a * d.g_t;
    g_s += a * d.g_s;
    lambda_t += a * d.lambda_t;
    lambda_s += a * d.lambda_s;
}

double LpnnState::squared_norm() const {
    return squared_norm_of(u, g_t, g_s, lambda_t, lambda_s);
}
bool LpnnState::all_finite() const { return all_finite_of(u, g_t, g_s, lambda_t, lambda_s); }

// ---------------------------------------------------------------- objectives

double ml_objective(const Vec& u, const MeasurementSet& meas, const Scenario& scenario) {
    check_shapes(meas, scenario.transmitters, scenario.receivers, u.size());
    const Vec dt = (scenario.transmitters.colwise() - u).colwise().norm().transpose();
    const Vec ds = (scenario.receivers.colwise() - u).colwise().norm().transpose();
    return 2.0 * half_weighted_residual(meas, dt, ds);
}

double rnf_energy(const RnfState& x, const MeasurementSet& meas, const Scenario& scenario,
                  double rho) {
    check_shapes(meas, scenario.transmitters, scenario.receivers, x.u.size());
    return half_weighted_residual(meas, x.h_t, x.h_s) +
           0.25 * rho * constraint_sum(x.u, scenario.transmitters, x.h_t, nullptr, 2) +
           0.25 * rho * constraint_sum(x.u, scenario.receivers, x.h_s, nullptr, 2);
}

void rnfnn_derivative(const RnfState& x, const MeasurementSet& meas, const Scenario& scenario,
                      double rho, RnfState& out) {
    detail::relaxed_flow(flow_inputs(meas, x.u.size()), x.u.data(), scenario.transmitters.data(),
                         scenario.receivers.data(), x.h_t.data(), x.h_s.data(), rho, out.u.data(),
                         out.h_t.data(), out.h_s.data(), nullptr, nullptr);
}

RnfState rnfnn_derivative(const RnfState& x, const MeasurementSet& meas, const Scenario& scenario,
                          double rho) {
    check_shapes(meas, scenario.transmitters, scenario.receivers, x.u.size());
    RnfState out = RnfState::zeros(static_cast<int>(x.u.size()), meas.num_tx(), meas.num_rx());
    rnfnn_derivative(x, meas, scenario, rho, out);
    return out;
}

double lagrangian(const LpnnState& y, const MeasurementSet& meas, const Scenario& scenario) {
    check_shapes(meas, scenario.transmitters, scenario.receivers, y.u.size());
    return half_weighted_residual(meas, y.g_t, y.g_s) +
           constraint_sum(y.u, scenario.transmitters, y.g_t, &y.lambda_t, 1) +
           constraint_sum(y.u, scenario.receivers, y.g_s, &y.lambda_s, 1);
}

double augmented_lagrangian(const LpnnState& y, const MeasurementSet& meas,
                            const Scenario& scenario, double c) {
    return lagrangian(y, meas, scenario) +
           0.25 * c * constraint_sum(y.u, scenario.transmitters, y.g_t, nullptr, 2) +
           0.25 * c * constraint_sum(y.u, scenario.receivers, y.g_s, nullptr, 2);
}

void lpnn_derivative(const LpnnState& y, const MeasurementSet& meas, const Scenario& scenario,
                     double c, LpnnState& out) {
    detail::lagrange_flow(flow_inputs(meas, y.u.size()), y.u.data(), scenario.transmitters.data(),
                          scenario.receivers.data(), y.g_t.data(), y.g_s.data(),
                          y.lambda_t.data(), y.lambda_s.data(), c, out.u.data(), out.g_t.data(),
                          out.g_s.data(), out.lambda_t.data(), out.lambda_s.data());
}

LpnnState lpnn_derivative(const LpnnState& y, const MeasurementSet& meas,
                          const Scenario& scenario, double c) {
    check_shapes(meas, scenario.transmitters, scenario.receivers, y.u.size());
    LpnnState out = LpnnState::zeros(static_cast<int>(y.u.size()), meas.num_tx(), meas.num_rx());
    lpnn_derivative(y, meas, scenario, c, out);
    return out;
}

MultiplierHessians multiplier_term_hessians(const Vec& lambda_t, const Vec& lambda_s, int dim) {
    if (dim < 1) throw InvalidInput("dimension must be positive");
    auto block = [dim](const Vec& lambda) {
        const Eigen::Index k = lambda.size();
        Mat h = Mat::Zero(dim + k, dim + k);
        h.topLeftCorner(dim, dim) = -2.0 * lambda.sum() * Mat::Identity(dim, dim);
        h.bottomRightCorner(k, k) = 2.0 * lambda.asDiagonal();
        return h;
    };
    return {block(lambda_t), block(lambda_s)};
}

// ---------------------------------------------------------------- antenna errors

double extended_ml_objective(const Vec& u, const Mat& t, const Mat& s, const MeasurementSet& meas) {
    const AntennaObservation& obs = require_antennas(meas);
    check_shapes(meas, t, s, u.size());
    const Vec dt = (t.colwise() - u).colwise().norm().transpose();
    const Vec ds = (s.colwise() - u).colwise().norm().transpose();
    return 2.0 * half_weighted_residual(meas, dt, ds) +
           obs.weight_t.dot((obs.transmitters - t).colwise().squaredNorm().transpose()) +
           obs.weight_s.dot((obs.receivers - s).colwise().squaredNorm().transpose());
}

double extended_rnf_energy(const ExtendedRnfState& x, const MeasurementSet& meas, double rho,
                           double antenna_coefficient) {
    const AntennaObservation& obs = require_antennas(meas);
    check_shapes(meas, x.t, x.s, x.u.size());
    const double prior =
        obs.weight_t.dot((obs.transmitters - x.t).colwise().squaredNorm().transpose()) +
        obs.weight_s.dot((obs.receivers - x.s).colwise().squaredNorm().transpose());
    return half_weighted_residual(meas, x.h_t, x.h_s) + antenna_coefficient * prior +
           0.25 * rho * constraint_sum(x.u, x.t, x.h_t, nullptr, 2) +
           0.25 * rho * constraint_sum(x.u, x.s, x.h_s, nullptr, 2);
}

void extended_rnfnn_derivative(const ExtendedRnfState& x, const MeasurementSet& meas, double rho,
                               ExtendedRnfState& out) {
    const AntennaObservation& obs = *meas.antennas;
    const int dim = static_cast<int>(x.u.size());
    detail::relaxed_flow(flow_inputs(meas, dim), x.u.data(), x.t.data(), x.s.data(), x.h_t.data(),
                         x.h_s.data(), rho, out.u.data(), out.h_t.data(), out.h_s.data(),
                         out.t.data(), out.s.data());
    detail::add_antenna_prior(dim, static_cast<int>(x.t.cols()), obs.transmitters.data(),
                              obs.weight_t.data(), x.t.data(), out.t.data());
    detail::add_antenna_prior(dim, static_cast<int>(x.s.cols()), obs.receivers.data(),
                              obs.weight_s.data(), x.s.data(), out.s.data());
}

ExtendedRnfState extended_rnfnn_derivative(const ExtendedRnfState& x, const MeasurementSet& meas,
                                           double rho) {
    require_antennas(meas);
    check_shapes(meas, x.t, x.s, x.u.size());
    ExtendedRnfState out =
        ExtendedRnfState::zeros(static_cast<int>(x.u.size()), meas.num_tx(), meas.num_rx());
    extended_rnfnn_derivative(x, meas, rho, out);
    return out;
}

}  // namespace mimoloc
