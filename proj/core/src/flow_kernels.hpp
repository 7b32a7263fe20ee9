#pragma once

#include <type_traits>

// Allocation-free derivative kernels on raw column-major buffers. Shared by
// the public energy functions and the solver's flat-state Euler loop.

namespace mimoloc::detail {

/// Geometry and measurements seen by a kernel. Antennas are dim x count,
/// range and weight are m x n, all column-major.
struct FlowInputs {
    int dim = 0;
    int m = 0;
    int n = 0;
    const double* range = nullptr;
    const double* weight = nullptr;
};

template <int Dim = 0>
inline double squared_distance(const double* u, const double* p, int dim) {
    if constexpr (Dim > 0) dim = Dim;
    double acc = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double diff = u[d] - p[d];
        acc += diff * diff;
    }
    return acc;
}

/// Adds the weighted range residual w (r - a_m - b_n) to da and db.
inline void add_range_residual(const FlowInputs& in, const double* a, const double* b,
                               double* da, double* db) {
    for (int j = 0; j < in.n; ++j) {
        const double* r = in.range + j * in.m;
        const double* w = in.weight + j * in.m;
        double acc = 0.0;
        for (int i = 0; i < in.m; ++i) {
            const double e = w[i] * (r[i] - a[i] - b[j]);
            da[i] += e;
            acc += e;
        }
        db[j] += acc;
    }
}

/// Relaxed flow. Writes du, dh_t, dh_s and, when non-null, the penalty part
/// of the antenna rows (dtx, drx). A positive Dim fixes the dimension at
/// compile time.
template <int Dim = 0>
inline void relaxed_flow(const FlowInputs& in, const double* u, const double* tx,
                         const double* rx, const double* h_t, const double* h_s, double rho,
                         double* du, double* dh_t, double* dh_s, double* dtx, double* drx) {
    const int dim = Dim > 0 ? Dim : in.dim;
    for (int d = 0; d < dim; ++d) du[d] = 0.0;
    auto side = [&](const double* ant, const double* h, int count, double* dh, double* dant) {
        for (int k = 0; k < count; ++k) {
            const double* p = ant + k * dim;
            const double c = h[k] * h[k] - squared_distance<Dim>(u, p, dim);
            const double rc = rho * c;
            for (int d = 0; d < dim; ++d) {
                const double f = rc * (u[d] - p[d]);
                du[d] += f;
                if (dant) dant[k * dim + d] = -f;
            }
            dh[k] = -rc * h[k];
        }
    };
    side(tx, h_t, in.m, dh_t, dtx);
    side(rx, h_s, in.n, dh_s, drx);
    add_range_residual(in, h_t, h_s, dh_t, dh_s);
}

/// Antenna prior rows: dant += w_k (observed_k - ant_k).
template <int Dim = 0>
inline void add_antenna_prior(int dim, int count, const double* observed, const double* weight,
                              const double* ant, double* dant) {
    if constexpr (Dim > 0) dim = Dim;
    for (int k = 0; k < count; ++k) {
        for (int d = 0; d < dim; ++d) {
            dant[k * dim + d] += weight[k] * (observed[k * dim + d] - ant[k * dim + d]);
        }
    }
}

/// Augmented-Lagrangian flow: descent on (u, g), ascent on lambda.
template <int Dim = 0>
inline void lagrange_flow(const FlowInputs& in, const double* u, const double* tx,
                          const double* rx, const double* g_t, const double* g_s,
                          const double* lambda_t, const double* lambda_s, double c, double* du,
                          double* dg_t, double* dg_s, double* dl_t, double* dl_s) {
    const int dim = Dim > 0 ? Dim : in.dim;
    for (int d = 0; d < dim; ++d) du[d] = 0.0;
    auto side = [&](const double* ant, const double* g, const double* lambda, int count,
                    double* dg, double* dl) {
        for (int k = 0; k < count; ++k) {
            const double* p = ant + k * dim;
            const double viol = g[k] * g[k] - squared_distance<Dim>(u, p, dim);
            const double coef = 2.0 * lambda[k] + c * viol;
            for (int d = 0; d < dim; ++d) du[d] += coef * (u[d] - p[d]);
            dg[k] = -g[k] * coef;
            dl[k] = viol;
        }
    };
    side(tx, g_t, lambda_t, in.m, dg_t, dl_t);
    side(rx, g_s, lambda_s, in.n, dg_s, dl_s);
    add_range_residual(in, g_t, g_s, dg_t, dg_s);
}

}  // namespace mimoloc::detail

namespace mimoloc::detail {

/// Calls body(std::integral_constant<int, D>) with D = dim for 2 and 3, and
/// D = 0 (runtime dimension) otherwise.
template <class Body>
decltype(auto) dispatch_dim(int dim, Body&& body) {
    if (dim == 2) return body(std::integral_constant<int, 2>{});
    if (dim == 3) return body(std::integral_constant<int, 3>{});
    return body(std::integral_constant<int, 0>{});
}

}  // namespace mimoloc::detail
