#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace mimoloc::testing {

/// Five-point central-difference gradient; the step is relative to
/// max(1, |x_i|). Kept separate from the library so it can check it.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double rel_step = 1e-4) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd p = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = rel_step * std::max(1.0, std::abs(x(i)));
        auto at = [&](double k) {
            p(i) = x(i) + k * h;
            const double v = f(p);
            p(i) = x(i);
            return v;
        };
        g(i) = (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
    }
    return g;
}

inline double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace mimoloc::testing
