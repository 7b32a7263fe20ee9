#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>
#include <json.hpp>

#include "mimoloc/errors.hpp"
#include "mimoloc/metrics.hpp"
#include "mimoloc/radar_model.hpp"
#include "mimoloc/rng.hpp"

namespace {

using namespace mimoloc;

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

/// Stacked parameter vector [u; t_1..t_M; s_1..s_N].
Vec stack(const Scenario& sc) {
    const int d = sc.dim;
    Vec theta(d * (1 + sc.num_tx() + sc.num_rx()));
    theta.head(d) = sc.target;
    theta.segment(d, d * sc.num_tx()) = sc.transmitters.reshaped();
    theta.tail(d * sc.num_rx()) = sc.receivers.reshaped();
    return theta;
}

/// Ranges as a function of the stacked parameters, row-major over (m, n).
Vec ranges_of(const Vec& theta, const Scenario& sc) {
    const int d = sc.dim;
    const int m = sc.num_tx();
    const int n = sc.num_rx();
    const Vec u = theta.head(d);
    Vec r(m * n);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            r(i * n + j) = (u - theta.segment(d * (1 + i), d)).norm() +
                           (u - theta.segment(d * (1 + m + j), d)).norm();
        }
    }
    return r;
}

Mat fd_jacobian(const Scenario& sc) {
    const Vec theta = stack(sc);
    Mat jac(sc.num_tx() * sc.num_rx(), theta.size());
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        const double h = 1e-3;
        Vec p = theta;
        p(k) += h;
        const Vec fp = ranges_of(p, sc);
        p(k) -= 2.0 * h;
        jac.col(k) = (fp - ranges_of(p, sc)) / (2.0 * h);
    }
    return jac;
}

/// Inverse variances in the same row-major (m, n) order as the ranges.
Vec range_precision(const NoiseModel& noise) {
    const Mat inv = noise.pair_variance.cwiseInverse().transpose();
    return inv.reshaped();
}

double rel(const Mat& a, const Mat& b) { return (a - b).norm() / b.norm(); }

TEST(Crlb, MatchesFiniteDifferenceInformationMatrix) {
    for (const char* name : {"scenario1-2d", "scenario2-3d"}) {
        const Scenario sc = builtin_scenario(name);
        const NoiseModel noise = noise_from_snr(sc, 0.0);
        const Mat ju = fd_jacobian(sc).leftCols(sc.dim);
        const Mat fim = ju.transpose() * range_precision(noise).asDiagonal() * ju;
        const Mat expected = fim.inverse();
        const CrlbResult c = crlb(sc, noise);
        EXPECT_LT(rel(c.bound, expected), 1e-6) << name;
        EXPECT_NEAR(c.root, std::sqrt(expected.trace()), 1e-6 * c.root);
    }
}

TEST(Crlb, JointJacobianMatchesFiniteDifference) {
    const Scenario sc = builtin_scenario("scenario2-3d");
    EXPECT_LT(rel(range_jacobian_joint(sc), fd_jacobian(sc)), 1e-6);
}

TEST(Crlb, ScalesWithVariance) {
    const Scenario sc = builtin_scenario("scenario1-2d");
    NoiseModel noise = noise_from_snr(sc, 10.0);
    const CrlbResult base = crlb(sc, noise);
    noise.pair_variance *= 4.0;
    const CrlbResult scaled = crlb(sc, noise);
    EXPECT_NEAR(scaled.root, 2.0 * base.root, 1e-12 * base.root);
    EXPECT_LT(rel(scaled.bound, 4.0 * base.bound), 1e-12);

    const double r10 = crlb(sc, noise_from_snr(sc, 10.0)).root;
    const double r30 = crlb(sc, noise_from_snr(sc, 30.0)).root;
    EXPECT_NEAR(r10 / r30, 10.0, 1e-9);
}

TEST(Crlb, CollinearGeometryIsDegenerate) {
    Scenario sc;
    sc.dim = 2;
    sc.transmitters = Mat(2, 1);
    sc.transmitters << -1000.0, 0.0;
    sc.receivers = Mat(2, 1);
    sc.receivers << 1000.0, 0.0;
    sc.target = v2(0.0, 500.0);
    EXPECT_THROW(crlb(sc, noise_from_snr(sc, 10.0)), DegenerateGeometry);
}

TEST(CrlbWithAntennaErrors, MatchesJointFiniteDifferenceBound) {
    const Scenario sc = builtin_scenario("scenario2-3d");
    NoiseModel noise = noise_from_snr(sc, 10.0);
    set_antenna_variance(noise, sc, 10.0);
    const Mat jac = fd_jacobian(sc);
    Mat fim = jac.transpose() * range_precision(noise).asDiagonal() * jac;
    for (Eigen::Index k = sc.dim; k < fim.rows(); ++k) fim(k, k) += 1.0 / 10.0;
    const Mat expected = fim.inverse().topLeftCorner(sc.dim, sc.dim);
    EXPECT_LT(rel(crlb_with_antenna_errors(sc, noise).bound, expected), 1e-6);
}

TEST(CrlbWithAntennaErrors, VanishingAntennaVarianceRecoversPlainBound) {
    const Scenario sc = builtin_scenario("scenario2-3d");
    NoiseModel noise = noise_from_snr(sc, 10.0);
    const CrlbResult plain = crlb(sc, noise);
    set_antenna_variance(noise, sc, 1e-12);
    EXPECT_LT(rel(crlb_with_antenna_errors(sc, noise).bound, plain.bound), 1e-9);
}

TEST(CrlbWithAntennaErrors, DominatesPlainBound) {
    for (const char* name : {"scenario1-2d", "scenario2-3d"}) {
        const Scenario sc = builtin_scenario(name);
        for (double snr : {-10.0, 10.0, 30.0}) {
            for (double var : {0.1, 10.0, 1000.0}) {
                NoiseModel noise = noise_from_snr(sc, snr);
                const CrlbResult plain = crlb(sc, noise);
                set_antenna_variance(noise, sc, var);
                const CrlbResult ext = crlb_with_antenna_errors(sc, noise);
                const Mat diff = ext.bound - plain.bound;
                const double min_ev = Eigen::SelfAdjointEigenSolver<Mat>(diff).eigenvalues()(0);
                EXPECT_GE(min_ev, -1e-12 * plain.bound.norm());
                EXPECT_GT(ext.root, plain.root);
            }
        }
    }
}

TEST(Rmse, ExactEstimatesGiveZero) {
    const std::vector<Vec> est(4, v2(50, 50));
    EXPECT_EQ(rmse(est, v2(50, 50)), 0.0);
}

TEST(Rmse, PythagoreanErrors) {
    const Vec truth = v2(50, 50);
    const std::vector<Vec> est{truth + v2(3, 4), truth - v2(3, 4)};
    EXPECT_DOUBLE_EQ(rmse(est, truth), 5.0);
    EXPECT_DOUBLE_EQ(bias(est, truth), 0.0);
}

TEST(Bias, IsLOneNormOfMeanError) {
    EXPECT_DOUBLE_EQ(bias({v2(51, 48)}, v2(50, 50)), 3.0);
}

TEST(RmseAndBias, MatchRecomputationAndBoundEachOther) {
    Rng rng(3);
    const Vec truth = (Vec(3) << 1.0, -2.0, 3.0).finished();
    std::vector<Vec> est;
    std::vector<Vec> errors;
    double sq = 0.0;
    Vec mean = Vec::Zero(3);
    for (int i = 0; i < 500; ++i) {
        Vec e(3);
        for (int d = 0; d < 3; ++d) e(d) = 2.0 * rng.normal() + 0.5;
        est.push_back(truth + e);
        errors.push_back(e);
        sq += e.squaredNorm();
        mean += e;
    }
    mean /= 500.0;
    const double r = rmse(est, truth);
    const double b = bias(est, truth);
    EXPECT_NEAR(r, std::sqrt(sq / 500.0), 1e-12);
    EXPECT_NEAR(b, mean.lpNorm<1>(), 1e-9);
    EXPECT_NEAR(r, rmse_of_errors(errors), 1e-12);
    EXPECT_NEAR(b, bias_of_errors(errors), 1e-12);
    EXPECT_GE(r, mean.norm());
    EXPECT_GE(mean.norm(), b / std::sqrt(3.0) - 1e-12);
}

TEST(Ecdf, StepsAndQuantiles) {
    const auto curve = ecdf({3.0, 1.0, 2.0});
    ASSERT_EQ(curve.size(), 3u);
    EXPECT_DOUBLE_EQ(ecdf_at(curve, 2.0), 2.0 / 3.0);
    EXPECT_EQ(ecdf_at(curve, 3.0), 1.0);
    EXPECT_EQ(ecdf_at(curve, 0.5), 0.0);
    EXPECT_EQ(ecdf_quantile(curve, 0.5), 2.0);
    EXPECT_EQ(ecdf_quantile(curve, 1.0), 3.0);
}

TEST(Ecdf, EqualValuesGiveSingleStep) {
    const auto curve = ecdf({4.0, 4.0, 4.0, 4.0});
    ASSERT_EQ(curve.size(), 1u);
    EXPECT_EQ(curve[0].value, 4.0);
    EXPECT_EQ(curve[0].probability, 1.0);
}

TEST(Ecdf, NondecreasingRightContinuousEndingAtOne) {
    Rng rng(4);
    std::vector<double> values;
    for (int i = 0; i < 1000; ++i) values.push_back(std::floor(10.0 * rng.uniform()));
    const auto curve = ecdf(values);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        EXPECT_LT(curve[i - 1].value, curve[i].value);
        EXPECT_LT(curve[i - 1].probability, curve[i].probability);
        EXPECT_EQ(ecdf_at(curve, curve[i].value), curve[i].probability);
        EXPECT_EQ(ecdf_at(curve, curve[i].value - 1e-9), curve[i - 1].probability);
    }
    EXPECT_EQ(curve.back().probability, 1.0);
}

TEST(RmCount, PerIterationTableRows) {
    EXPECT_EQ(rm_count("rnfnn", 3, 3, 2, 1), 57u);
    EXPECT_EQ(rm_count("mlpnn", 3, 3, 2, 1), 81u);
    EXPECT_EQ(rm_count("rnfnn", 3, 3, 2, 1000), 57000u);
    EXPECT_EQ(rm_count("mlpnn", 3, 3, 2, 1000), 81000u);
}

TEST(RmCount, OrderingAcrossShapes) {
    for (std::uint64_t m = 1; m <= 8; ++m) {
        for (std::uint64_t n = 1; n <= 8; ++n) {
            for (std::uint64_t d : {2u, 3u}) {
                const std::uint64_t it = 17;
                EXPECT_LT(rm_count(RmMethod::Rnfnn, m, n, d, it), rm_count(RmMethod::Mlpnn, m, n, d, it));
                EXPECT_EQ(rm_count(RmMethod::Lpnn, m, n, d, it),
                          rm_count(RmMethod::Mlpnn, m, n, d, it) - it * m * n);
            }
        }
    }
}

TEST(RmCount, MethodNames) {
    for (const char* name : {"tswls", "tswls-mns", "icwls", "lpnn", "mlpnn", "rnfnn"}) {
        EXPECT_EQ(to_string(parse_rm_method(name)), name);
    }
    EXPECT_THROW(parse_rm_method("gauss-newton"), NotFound);
}

TEST(Report, CsvAndJson) {
    MetricsReport r;
    r.method = "rnfnn";
    r.snr_db = 10.0;
    r.rmse = 1.5;
    r.bias = 0.25;
    r.root_crlb = 1.4;
    r.mean_iterations = 1000.0;
    r.convergence_rate = 1.0;
    r.trials = 4;
    r.ecdf = ecdf({1.0, 2.0});
    EXPECT_EQ(metrics_csv_header(), "snr_db,rmse,bias,root_crlb,mean_iters,conv_rate,trials");
    EXPECT_EQ(metrics_csv_row(r).rfind("10,1.5,0.25,", 0), 0u);
    const nlohmann::json j = nlohmann::json::parse(metrics_to_json(r));
    EXPECT_EQ(j.at("method"), "rnfnn");
    EXPECT_EQ(j.at("rmse"), 1.5);
    EXPECT_EQ(j.at("ecdf").size(), 2u);
}

}  // namespace
