#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mimoloc/radar_model.hpp"

namespace mimoloc {

/// Cramer-Rao bound on the target position covariance.
struct CrlbResult {
    Mat bound;          // D x D
    double root = 0.0;  // sqrt(trace(bound)), meters
};

/// Gaussian range-noise bound: inverse of J^T Q_r^-1 J, J being the Jacobian
/// of the bistatic ranges with respect to the target position.
/// Throws DegenerateGeometry when the information matrix is singular.
CrlbResult crlb(const Scenario& scenario, const NoiseModel& noise);

/// Joint bound over target and antenna positions with Gaussian antenna
/// priors; returns the target block (a Schur complement of the joint
/// information matrix).
CrlbResult crlb_with_antenna_errors(const Scenario& scenario, const NoiseModel& noise);

/// Jacobian of the M*N ranges (row-major over (m, n)) with respect to the
/// stacked parameter vector [u; t_1..t_M; s_1..s_N].
Mat range_jacobian_joint(const Scenario& scenario);

double rmse(const std::vector<Vec>& estimates, const Vec& truth);
double bias(const std::vector<Vec>& estimates, const Vec& truth);

/// Same metrics over per-trial error vectors (estimate - truth), for batches
/// whose truth changes from trial to trial.
double rmse_of_errors(const std::vector<Vec>& errors);
double bias_of_errors(const std::vector<Vec>& errors);

struct EcdfPoint {
    double value = 0.0;
    double probability = 0.0;
};

/// Empirical CDF as (sorted value, P(X <= value)) pairs, one per distinct value.
std::vector<EcdfPoint> ecdf(std::vector<double> values);

/// Right-continuous evaluation of an ECDF curve.
double ecdf_at(const std::vector<EcdfPoint>& curve, double x);

/// Smallest value whose ECDF reaches probability `p`.
double ecdf_quantile(const std::vector<EcdfPoint>& curve, double p);

enum class RmMethod { Tswls, TswlsMns, Icwls, Lpnn, Mlpnn, Rnfnn };

RmMethod parse_rm_method(std::string_view name);
std::string to_string(RmMethod method);

/// Real-multiplication count of the closed-form complexity rows. Iterative
/// methods multiply their per-iteration count by `iters`; the closed-form
/// estimators ignore it, except ICWLS which takes its own iteration count.
std::uint64_t rm_count(RmMethod method, std::uint64_t m, std::uint64_t n, std::uint64_t d,
                       std::uint64_t iters);
std::uint64_t rm_count(std::string_view method, std::uint64_t m, std::uint64_t n,
                       std::uint64_t d, std::uint64_t iters);

/// Aggregate of one Monte-Carlo batch (one method at one sweep point).
struct MetricsReport {
    std::string method;
    double snr_db = 0.0;
    double antenna_variance = 0.0;
    double rmse = 0.0;
    double bias = 0.0;
    double root_crlb = 0.0;
    double mean_iterations = 0.0;
    /// Mean over converged, restart-free trials only.
    double mean_iterations_clean = 0.0;
    double convergence_rate = 0.0;
    std::uint64_t rm_count = 0;
    std::vector<EcdfPoint> ecdf;
    int trials = 0;
};

/// `snr_db,rmse,bias,root_crlb,mean_iters,conv_rate,trials`
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& report);

/// Structured JSON document for a report.
std::string metrics_to_json(const MetricsReport& report, int indent = 2);

}  // namespace mimoloc
