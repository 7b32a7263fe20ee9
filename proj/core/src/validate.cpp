#include "mimoloc/validate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mimoloc/errors.hpp"
#include "mimoloc/metrics.hpp"
#include "mimoloc/rng.hpp"

namespace mimoloc {

namespace {

Vec jittered_distances(const Vec& u, const Mat& antennas, Rng& rng, double jitter) {
    Vec d(antennas.cols());
    for (Eigen::Index i = 0; i < antennas.cols(); ++i) {
        d(i) = (u - antennas.col(i)).norm() + jitter * rng.normal();
    }
    return d;
}

Vec random_position(int dim, double span, Rng& rng) {
    Vec u(dim);
    for (int d = 0; d < dim; ++d) u(d) = rng.uniform(-span, span);
    return u;
}

Vec random_uniform(Eigen::Index n, double lo, double hi, Rng& rng) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
    return v;
}

std::string fmt(double x) {
    std::ostringstream out;
    out.precision(3);
    out << std::scientific << x;
    return out.str();
}

}  // namespace

Vec numerical_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double step) {
    Vec grad(x.size());
    Vec probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x(i)));
        auto diff = [&](double hh) {
            probe(i) = x(i) + hh;
            const double fp = f(probe);
            probe(i) = x(i) - hh;
            const double fm = f(probe);
            probe(i) = x(i);
            return (fp - fm) / (2.0 * hh);
        };
        const double coarse = diff(h);
        const double fine = diff(0.5 * h);
        grad(i) = (4.0 * fine - coarse) / 3.0;
    }
    return grad;
}

double relative_error(const Vec& a, const Vec& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

RnfState random_rnf_state(const Scenario& scenario, std::uint64_t seed, double span,
                          double jitter) {
    Rng rng(seed);
    RnfState x;
    x.u = random_position(scenario.dim, span, rng);
    x.h_t = jittered_distances(x.u, scenario.transmitters, rng, jitter);
    x.h_s = jittered_distances(x.u, scenario.receivers, rng, jitter);
    return x;
}

LpnnState random_lpnn_state(const Scenario& scenario, std::uint64_t seed, double span,
                            double jitter) {
    Rng rng(seed);
    LpnnState y;
    y.u = random_position(scenario.dim, span, rng);
    y.g_t = jittered_distances(y.u, scenario.transmitters, rng, jitter);
    y.g_s = jittered_distances(y.u, scenario.receivers, rng, jitter);
    y.lambda_t = random_uniform(scenario.num_tx(), 0.0, 1.0, rng);
    y.lambda_s = random_uniform(scenario.num_rx(), 0.0, 1.0, rng);
    return y;
}

ExtendedRnfState random_extended_state(const Scenario& scenario, std::uint64_t seed, double span,
                                       double jitter) {
    Rng rng(seed);
    ExtendedRnfState x;
    x.u = random_position(scenario.dim, span, rng);
    x.t = scenario.transmitters;
    x.s = scenario.receivers;
    for (Eigen::Index i = 0; i < x.t.size(); ++i) x.t.data()[i] += jitter * 0.1 * rng.normal();
    for (Eigen::Index i = 0; i < x.s.size(); ++i) x.s.data()[i] += jitter * 0.1 * rng.normal();
    x.h_t = jittered_distances(x.u, x.t, rng, jitter);
    x.h_s = jittered_distances(x.u, x.s, rng, jitter);
    return x;
}

double rnfnn_gradient_error(const MeasurementSet& meas, const Scenario& scenario, double rho,
                            int samples, std::uint64_t seed) {
    const int dim = scenario.dim;
    const int m = scenario.num_tx();
    const int n = scenario.num_rx();
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        const RnfState x = random_rnf_state(scenario, derive_seed({seed, 1, std::uint64_t(k)}));
        const Vec analytic = rnfnn_derivative(x, meas, scenario, rho).pack();
        const Vec fd = -numerical_gradient(
            [&](const Vec& v) {
                return rnf_energy(RnfState::unpack(v, dim, m, n), meas, scenario, rho);
            },
            x.pack());
        worst = std::max(worst, relative_error(analytic, fd));
    }
    return worst;
}

double lpnn_gradient_error(const MeasurementSet& meas, const Scenario& scenario, double c,
                           int samples, std::uint64_t seed) {
    const int dim = scenario.dim;
    const int m = scenario.num_tx();
    const int n = scenario.num_rx();
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        const LpnnState y = random_lpnn_state(scenario, derive_seed({seed, 2, std::uint64_t(k)}));
        const Vec analytic = lpnn_derivative(y, meas, scenario, c).pack();
        Vec fd = -numerical_gradient(
            [&](const Vec& v) {
                return augmented_lagrangian(LpnnState::unpack(v, dim, m, n), meas, scenario, c);
            },
            y.pack());
        // Multipliers ascend the Lagrangian.
        fd.tail(m + n) *= -1.0;
        worst = std::max(worst, relative_error(analytic, fd));
    }
    return worst;
}

double extended_gradient_error(const MeasurementSet& meas, const Scenario& scenario, double rho,
                               int samples, std::uint64_t seed) {
    const int dim = scenario.dim;
    const int m = scenario.num_tx();
    const int n = scenario.num_rx();
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        const ExtendedRnfState x =
            random_extended_state(scenario, derive_seed({seed, 3, std::uint64_t(k)}));
        const Vec analytic = extended_rnfnn_derivative(x, meas, rho).pack();
        const Vec fd = -numerical_gradient(
            [&](const Vec& v) {
                return extended_rnf_energy(ExtendedRnfState::unpack(v, dim, m, n), meas, rho,
                                           0.5);
            },
            x.pack());
        worst = std::max(worst, relative_error(analytic, fd));
    }
    return worst;
}

std::vector<CheckResult> run_self_checks(std::uint64_t seed) {
    std::vector<CheckResult> out;
    auto check = [&](std::string name, auto&& body) {
        CheckResult r;
        r.name = std::move(name);
        try {
            body(r);
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        out.push_back(std::move(r));
    };

    for (const std::string& name : builtin_scenario_names()) {
        const Scenario sc = builtin_scenario(name);
        NoiseModel noise = noise_from_snr(sc, 10.0);
        MeasurementSet meas = simulate_measurements(sc, noise, derive_seed({seed, 10}));

        check(name + ": weights sum to one", [&](CheckResult& r) {
            const double dev = std::abs(meas.weight.sum() - 1.0);
            r.passed = dev < 1e-12;
            r.detail = "deviation " + fmt(dev);
        });

        check(name + ": SNR round trip", [&](CheckResult& r) {
            double worst = 0.0;
            for (double snr = -30.0; snr <= 30.0; snr += 5.0) {
                worst = std::max(worst, std::abs(average_snr_db(noise_from_snr(sc, snr)) - snr));
            }
            r.passed = worst < 1e-9;
            r.detail = "max error " + fmt(worst) + " dB";
        });

        check(name + ": relaxed-energy gradient", [&](CheckResult& r) {
            const double err = rnfnn_gradient_error(meas, sc, 0.1, 20, seed);
            r.passed = err < 1e-6;
            r.detail = "max relative error " + fmt(err);
        });

        check(name + ": Lagrangian gradient", [&](CheckResult& r) {
            const double err = lpnn_gradient_error(meas, sc, 1.0, 20, seed);
            r.passed = err < 1e-6;
            r.detail = "max relative error " + fmt(err);
        });

        check(name + ": antenna-error gradient", [&](CheckResult& r) {
            NoiseModel an = noise;
            set_antenna_variance(an, sc, 10.0);
            MeasurementSet am = meas;
            am.noise = an;
            am.antennas = simulate_antenna_positions(sc, an, derive_seed({seed, 11}));
            const double err = extended_gradient_error(am, sc, 0.1, 20, seed);
            r.passed = err < 1e-6;
            r.detail = "max relative error " + fmt(err);
        });

        check(name + ": equilibrium at the noise-free truth", [&](CheckResult& r) {
            MeasurementSet clean = meas;
            clean.range = bistatic_ranges(sc.target, sc.transmitters, sc.receivers);
            RnfState x;
            x.u = sc.target;
            x.h_t = (sc.transmitters.colwise() - sc.target).colwise().norm().transpose();
            x.h_s = (sc.receivers.colwise() - sc.target).colwise().norm().transpose();
            const double e = rnfnn_derivative(x, clean, sc, 0.1).squared_norm();
            // Rounding level of the cubic penalty terms.
            const double scale = 0.1 * std::pow(sc.antenna_scale(), 3);
            r.passed = std::sqrt(e) < 1e-12 * scale;
            r.detail = "squared derivative norm " + fmt(e);
        });

        check(name + ": CRLB scales with the noise variance", [&](CheckResult& r) {
            NoiseModel scaled = noise;
            scaled.pair_variance *= 4.0;
            const double ratio = crlb(sc, scaled).root / crlb(sc, noise).root;
            r.passed = std::abs(ratio - 2.0) < 1e-9;
            r.detail = "root ratio " + fmt(ratio);
        });

        check(name + ": antenna errors loosen the bound", [&](CheckResult& r) {
            NoiseModel an = noise;
            set_antenna_variance(an, sc, 10.0);
            const Mat diff = crlb_with_antenna_errors(sc, an).bound - crlb(sc, noise).bound;
            Eigen::SelfAdjointEigenSolver<Mat> eig(diff);
            const double min_ev = eig.eigenvalues().minCoeff();
            r.passed = min_ev > -1e-9 * diff.norm();
            r.detail = "min eigenvalue of difference " + fmt(min_ev);
        });
    }

    check("multiplier-term Hessians are indefinite", [&](CheckResult& r) {
        Rng rng(derive_seed({seed, 20}));
        int bad = 0;
        for (int k = 0; k < 50; ++k) {
            const int dim = 2 + (k % 2);
            const int m = 1 + static_cast<int>(rng.uniform() * 10.0);
            const int n = 1 + static_cast<int>(rng.uniform() * 10.0);
            const MultiplierHessians h = multiplier_term_hessians(
                random_uniform(m, 0.01, 1.0, rng), random_uniform(n, 0.01, 1.0, rng), dim);
            for (const Mat* mat : {&h.transmit, &h.receive}) {
                Eigen::SelfAdjointEigenSolver<Mat> eig(*mat);
                if (!(eig.eigenvalues().minCoeff() < 0.0 && eig.eigenvalues().maxCoeff() > 0.0)) {
                    ++bad;
                }
            }
        }
        r.passed = bad == 0;
        r.detail = std::to_string(bad) + " definite matrices out of 100";
    });

    check("empirical CDF ends at one", [&](CheckResult& r) {
        Rng rng(derive_seed({seed, 21}));
        std::vector<double> v(257);
        for (double& x : v) x = rng.uniform();
        const auto curve = ecdf(v);
        const double top = ecdf_at(curve, *std::max_element(v.begin(), v.end()));
        bool monotone = true;
        for (std::size_t i = 1; i < curve.size(); ++i) {
            monotone = monotone && curve[i].probability >= curve[i - 1].probability;
        }
        r.passed = top == 1.0 && monotone;
        r.detail = "terminal value " + fmt(top);
    });

    check("relaxed network needs fewer multiplications", [&](CheckResult& r) {
        bool ok = true;
        for (std::uint64_t d = 2; d <= 3; ++d) {
            for (std::uint64_t m = 1; m <= 10; ++m) {
                for (std::uint64_t n = 1; n <= 10; ++n) {
                    ok = ok && rm_count(RmMethod::Rnfnn, m, n, d, 1) <
                                   rm_count(RmMethod::Mlpnn, m, n, d, 1);
                    ok = ok && rm_count(RmMethod::Mlpnn, m, n, d, 1) -
                                       rm_count(RmMethod::Lpnn, m, n, d, 1) ==
                                   m * n;
                }
            }
        }
        r.passed = ok;
        r.detail = ok ? "all counts ordered" : "ordering violated";
    });

    check("measurement simulation is deterministic", [&](CheckResult& r) {
        const Scenario sc = builtin_scenario("scenario1-2d");
        const NoiseModel noise = noise_from_snr(sc, 0.0);
        const MeasurementSet a = simulate_measurements(sc, noise, 99);
        const MeasurementSet b = simulate_measurements(sc, noise, 99);
        r.passed = a.range == b.range && a.weight == b.weight;
        r.detail = r.passed ? "identical" : "differs";
    });

    return out;
}

}  // namespace mimoloc
