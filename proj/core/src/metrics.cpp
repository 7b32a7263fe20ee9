#include "mimoloc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "mimoloc/errors.hpp"

namespace mimoloc {

namespace {

Vec unit_vector(const Vec& from, const Vec& to) {
    const Vec diff = to - from;
    const double norm = diff.norm();
    if (!(norm > 0.0)) {
        throw DegenerateGeometry("target coincides with an antenna");
    }
    return diff / norm;
}

// Inverse of a symmetric positive-definite information matrix.
Mat invert_information(const Mat& fim) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(fim);
    const double max_ev = eig.eigenvalues().maxCoeff();
    const double min_ev = eig.eigenvalues().minCoeff();
    if (!(max_ev > 0.0) || !(min_ev > 1e-12 * max_ev)) {
        throw DegenerateGeometry("Fisher information matrix is singular");
    }
    return eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
           eig.eigenvectors().transpose();
}

CrlbResult finish(Mat bound) {
    bound = 0.5 * (bound + bound.transpose());
    CrlbResult out;
    out.root = std::sqrt(bound.trace());
    out.bound = std::move(bound);
    return out;
}

Vec pair_precision(const Scenario& scenario, const NoiseModel& noise) {
    const int m = scenario.num_tx();
    const int n = scenario.num_rx();
    if (noise.pair_variance.rows() != m || noise.pair_variance.cols() != n) {
        throw InvalidInput("pair variance must be M x N");
    }
    Vec precision(m * n);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            const double v = noise.pair_variance(i, j);
            if (!(v > 0.0)) throw InvalidInput("pair variance must be strictly positive");
            precision(i * n + j) = 1.0 / v;
        }
    }
    return precision;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

Mat range_jacobian_joint(const Scenario& scenario) {
    scenario.validate();
    const int dim = scenario.dim;
    const int m = scenario.num_tx();
    const int n = scenario.num_rx();
    Mat jac = Mat::Zero(m * n, dim * (1 + m + n));
    for (int i = 0; i < m; ++i) {
        const Vec a = unit_vector(scenario.transmitters.col(i), scenario.target);
        for (int j = 0; j < n; ++j) {
            const Vec b = unit_vector(scenario.receivers.col(j), scenario.target);
            const int row = i * n + j;
            jac.block(row, 0, 1, dim) = (a + b).transpose();
            jac.block(row, dim * (1 + i), 1, dim) = -a.transpose();
            jac.block(row, dim * (1 + m + j), 1, dim) = -b.transpose();
        }
    }
    return jac;
}

CrlbResult crlb(const Scenario& scenario, const NoiseModel& noise) {
    const Vec precision = pair_precision(scenario, noise);
    const Mat jac = range_jacobian_joint(scenario).leftCols(scenario.dim);
    const Mat fim = jac.transpose() * precision.asDiagonal() * jac;
    return finish(invert_information(fim));
}

CrlbResult crlb_with_antenna_errors(const Scenario& scenario, const NoiseModel& noise) {
    const int dim = scenario.dim;
    const int m = scenario.num_tx();
    const int n = scenario.num_rx();
    if (noise.antenna_variance_t.size() != m || noise.antenna_variance_s.size() != n) {
        throw InvalidInput("antenna variances must have M and N entries");
    }
    const Vec precision = pair_precision(scenario, noise);
    const Mat jac = range_jacobian_joint(scenario);
    const Mat fim = jac.transpose() * precision.asDiagonal() * jac;

    const int np = dim * (m + n);
    Vec prior(np);
    for (int i = 0; i < m; ++i) {
        const double v = noise.antenna_variance_t(i);
        if (!(v > 0.0)) throw InvalidInput("antenna variance must be strictly positive");
        prior.segment(dim * i, dim).setConstant(1.0 / v);
    }
    for (int j = 0; j < n; ++j) {
        const double v = noise.antenna_variance_s(j);
        if (!(v > 0.0)) throw InvalidInput("antenna variance must be strictly positive");
        prior.segment(dim * (m + j), dim).setConstant(1.0 / v);
    }

    // Target block of the inverse = (F_uu - F_up F_pp^-1 F_pu)^-1.
    const Mat fuu = fim.topLeftCorner(dim, dim);
    const Mat fup = fim.topRightCorner(dim, np);
    Mat fpp = fim.bottomRightCorner(np, np);
    fpp.diagonal() += prior;
    const Eigen::LDLT<Mat> ldlt(fpp);
    if (ldlt.info() != Eigen::Success) {
        throw DegenerateGeometry("joint Fisher information matrix is singular");
    }
    const Mat schur = fuu - fup * ldlt.solve(fup.transpose());
    return finish(invert_information(0.5 * (schur + schur.transpose())));
}

double rmse_of_errors(const std::vector<Vec>& errors) {
    if (errors.empty()) throw InvalidInput("rmse needs at least one estimate");
    double acc = 0.0;
    for (const Vec& e : errors) acc += e.squaredNorm();
    return std::sqrt(acc / static_cast<double>(errors.size()));
}

double bias_of_errors(const std::vector<Vec>& errors) {
    if (errors.empty()) throw InvalidInput("bias needs at least one estimate");
    Vec mean = Vec::Zero(errors.front().size());
    for (const Vec& e : errors) mean += e;
    mean /= static_cast<double>(errors.size());
    return mean.lpNorm<1>();
}

namespace {
std::vector<Vec> errors_against(const std::vector<Vec>& estimates, const Vec& truth) {
    std::vector<Vec> errors;
    errors.reserve(estimates.size());
    for (const Vec& u : estimates) {
        if (u.size() != truth.size()) throw InvalidInput("estimate dimension differs from truth");
        errors.push_back(u - truth);
    }
    return errors;
}
}  // namespace

double rmse(const std::vector<Vec>& estimates, const Vec& truth) {
    return rmse_of_errors(errors_against(estimates, truth));
}

double bias(const std::vector<Vec>& estimates, const Vec& truth) {
    return bias_of_errors(errors_against(estimates, truth));
}

std::vector<EcdfPoint> ecdf(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("ecdf needs at least one value");
    std::sort(values.begin(), values.end());
    const double total = static_cast<double>(values.size());
    std::vector<EcdfPoint> curve;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        curve.push_back({values[i], static_cast<double>(i + 1) / total});
    }
    return curve;
}

double ecdf_at(const std::vector<EcdfPoint>& curve, double x) {
    auto it = std::upper_bound(curve.begin(), curve.end(), x,
                               [](double v, const EcdfPoint& p) { return v < p.value; });
    return it == curve.begin() ? 0.0 : std::prev(it)->probability;
}

double ecdf_quantile(const std::vector<EcdfPoint>& curve, double p) {
    if (curve.empty()) throw InvalidInput("empty ecdf");
    for (const EcdfPoint& point : curve) {
        if (point.probability >= p - 1e-12) return point.value;
    }
    return curve.back().value;
}

RmMethod parse_rm_method(std::string_view name) {
    if (name == "tswls") return RmMethod::Tswls;
    if (name == "tswls-mns") return RmMethod::TswlsMns;
    if (name == "icwls") return RmMethod::Icwls;
    if (name == "lpnn") return RmMethod::Lpnn;
    if (name == "mlpnn") return RmMethod::Mlpnn;
    if (name == "rnfnn") return RmMethod::Rnfnn;
    throw NotFound("unknown complexity method '" + std::string(name) + "'");
}

std::string to_string(RmMethod method) {
    switch (method) {
        case RmMethod::Tswls: return "tswls";
        case RmMethod::TswlsMns: return "tswls-mns";
        case RmMethod::Icwls: return "icwls";
        case RmMethod::Lpnn: return "lpnn";
        case RmMethod::Mlpnn: return "mlpnn";
        case RmMethod::Rnfnn: return "rnfnn";
    }
    return "unknown";
}

std::uint64_t rm_count(RmMethod method, std::uint64_t m, std::uint64_t n, std::uint64_t d,
                       std::uint64_t iters) {
    if (m == 0 || n == 0 || d == 0) throw InvalidInput("rm_count needs positive M, N and D");
    const std::uint64_t mn = m * n;
    const std::uint64_t md = m + d;
    const std::uint64_t mn3 = mn * mn * mn;
    switch (method) {
        case RmMethod::Tswls:
            return 3 * mn3 + mn * mn * md + 2 * mn * md * md + mn * md + 4 * md * md * md +
                   d * md * md + 21 * (m + 3) + 27;
        case RmMethod::TswlsMns:
            return 6 * mn3 + 2 * d * mn * mn + 14 * d * mn + 6 * n + 63;
        case RmMethod::Icwls:
            return iters * (mn3 + md * md * md + 3 * m * m * m) + mn3 + md * md * md;
        case RmMethod::Lpnn:
            return iters * ((3 * d + 6) * (m + n));
        case RmMethod::Mlpnn:
            return iters * (mn + (3 * d + 6) * (m + n));
        case RmMethod::Rnfnn:
            return iters * (mn + (2 * d + 4) * (m + n));
    }
    throw NotFound("unknown complexity method");
}

std::uint64_t rm_count(std::string_view method, std::uint64_t m, std::uint64_t n,
                       std::uint64_t d, std::uint64_t iters) {
    return rm_count(parse_rm_method(method), m, n, d, iters);
}

std::string metrics_csv_header() {
    return "snr_db,rmse,bias,root_crlb,mean_iters,conv_rate,trials";
}

std::string metrics_csv_row(const MetricsReport& r) {
    return format_double(r.snr_db) + ',' + format_double(r.rmse) + ',' + format_double(r.bias) +
           ',' + format_double(r.root_crlb) + ',' + format_double(r.mean_iterations) + ',' +
           format_double(r.convergence_rate) + ',' + std::to_string(r.trials);
}

std::string metrics_to_json(const MetricsReport& r, int indent) {
    nlohmann::ordered_json j;
    j["method"] = r.method;
    j["snr_db"] = r.snr_db;
    j["antenna_variance"] = r.antenna_variance;
    j["rmse"] = r.rmse;
    j["bias"] = r.bias;
    j["root_crlb"] = r.root_crlb;
    j["mean_iterations"] = r.mean_iterations;
    j["mean_iterations_clean"] = r.mean_iterations_clean;
    j["convergence_rate"] = r.convergence_rate;
    j["rm_count"] = r.rm_count;
    j["trials"] = r.trials;
    auto& curve = j["ecdf"] = nlohmann::ordered_json::array();
    for (const EcdfPoint& p : r.ecdf) curve.push_back({p.value, p.probability});
    return j.dump(indent);
}

}  // namespace mimoloc
