#pragma once

#include "mimoloc/radar_model.hpp"

namespace mimoloc {

/// Neuron state of the relaxed-energy network, laid out as [u | h_t | h_s].
struct RnfState {
    Vec u;
    Vec h_t;
    Vec h_s;

    static RnfState zeros(int dim, int m, int n);
    static RnfState unpack(const Vec& flat, int dim, int m, int n);

    Eigen::Index size() const { return u.size() + h_t.size() + h_s.size(); }
    Vec pack() const;

    void axpy(double a, const RnfState& d);
    double squared_norm() const;
    bool all_finite() const;
};

/// Relaxed-energy state with antenna positions as unknowns, laid out as
/// [u | t_1..t_M | s_1..s_N | h_t | h_s].
struct ExtendedRnfState {
    Vec u;
    Mat t;  // D x M
    Mat s;  // D x N
    Vec h_t;
    Vec h_s;

    static ExtendedRnfState zeros(int dim, int m, int n);
    static ExtendedRnfState unpack(const Vec& flat, int dim, int m, int n);

    Eigen::Index size() const { return u.size() + t.size() + s.size() + h_t.size() + h_s.size(); }
    Vec pack() const;

    void axpy(double a, const ExtendedRnfState& d);
    double squared_norm() const;
    bool all_finite() const;
};

/// Joint state of the Lagrange programming network, laid out as
/// [u | g_t | g_s | lambda_t | lambda_s].
struct LpnnState {
    Vec u;
    Vec g_t;
    Vec g_s;
    Vec lambda_t;
    Vec lambda_s;

    static LpnnState zeros(int dim, int m, int n);
    static LpnnState unpack(const Vec& flat, int dim, int m, int n);

    Eigen::Index size() const {
        return u.size() + g_t.size() + g_s.size() + lambda_t.size() + lambda_s.size();
    }
    Vec pack() const;

    void axpy(double a, const LpnnState& d);
    double squared_norm() const;
    bool all_finite() const;
};

/// sum_mn w_mn (r~_mn - ||u - t_m|| - ||u - s_n||)^2.
double ml_objective(const Vec& u, const MeasurementSet& meas, const Scenario& scenario);

/// Relaxed energy: half the weighted residual over (h_t, h_s) plus rho/4 times
/// the squared violation of h^2 = ||u - antenna||^2.
double rnf_energy(const RnfState& x, const MeasurementSet& meas, const Scenario& scenario,
                  double rho);

/// dx/dt = -grad E(x) for the relaxed energy, written into `out` (which must
/// already have the right shapes).
void rnfnn_derivative(const RnfState& x, const MeasurementSet& meas, const Scenario& scenario,
                      double rho, RnfState& out);
RnfState rnfnn_derivative(const RnfState& x, const MeasurementSet& meas, const Scenario& scenario,
                          double rho);

/// Weighted Lagrangian: 1/2 weighted residual plus lambda-weighted constraints.
double lagrangian(const LpnnState& y, const MeasurementSet& meas, const Scenario& scenario);

/// Lagrangian plus the augmented term c/4 * sum of squared constraint violations.
double augmented_lagrangian(const LpnnState& y, const MeasurementSet& meas,
                            const Scenario& scenario, double c);

/// Descent on (u, g_t, g_s) and ascent on (lambda_t, lambda_s) of the
/// augmented Lagrangian. Passing uniform weights yields the unweighted network.
void lpnn_derivative(const LpnnState& y, const MeasurementSet& meas, const Scenario& scenario,
                     double c, LpnnState& out);
LpnnState lpnn_derivative(const LpnnState& y, const MeasurementSet& meas,
                          const Scenario& scenario, double c);

/// Hessians of the two multiplier terms with respect to [u; g_t] and [u; g_s].
struct MultiplierHessians {
    Mat transmit;  // (D+M) x (D+M)
    Mat receive;   // (D+N) x (D+N)
};
MultiplierHessians multiplier_term_hessians(const Vec& lambda_t, const Vec& lambda_s, int dim);

/// ML objective with antenna positions as unknowns: range residual at the
/// candidate antennas plus w_t ||t~ - t||^2 + w_s ||s~ - s||^2.
///
/// Throws InvalidInput when `meas` carries no observed antenna positions.
double extended_ml_objective(const Vec& u, const Mat& t, const Mat& s, const MeasurementSet& meas);

/// Extended relaxed energy. `antenna_coefficient` scales the antenna prior
/// terms; 1 is the model energy, 0.5 is the energy whose negative gradient is
/// exactly extended_rnfnn_derivative() on the antenna rows.
double extended_rnf_energy(const ExtendedRnfState& x, const MeasurementSet& meas, double rho,
                           double antenna_coefficient = 1.0);

/// Extended network dynamics. u and h rows follow the plain network with
/// antenna states in place of known positions; antenna rows are
/// w (obs - state) - rho * violation * (u - state).
void extended_rnfnn_derivative(const ExtendedRnfState& x, const MeasurementSet& meas, double rho,
                               ExtendedRnfState& out);
ExtendedRnfState extended_rnfnn_derivative(const ExtendedRnfState& x, const MeasurementSet& meas,
                                           double rho);

}  // namespace mimoloc
