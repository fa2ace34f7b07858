#pragma once

// Independent reference values for the validation suites: maps with known
// exponents (from their tangent maps) and the analytic damped oscillator.
// None of this shares code with the estimators it checks.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace squidqct::oracles {

/// x-coordinate of the Henon map x' = 1 - a x^2 + y, y' = b x.
inline std::vector<double> henon_series(std::size_t n, double a = 1.4, double b = 0.3, std::size_t discard = 1000) {
    double x = 0.1, y = 0.1;
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n + discard; ++k) {
        const double xn = 1.0 - a * x * x + y;
        y = b * x;
        x = xn;
        if (k >= discard) out.push_back(x);
    }
    return out;
}

/// Largest exponent of the Henon map (nats/iteration) by propagating a
/// tangent vector with the Jacobian [[-2 a x, 1], [b, 0]] and renormalizing.
inline double henon_tangent_exponent(std::size_t n = 200000, double a = 1.4, double b = 0.3) {
    double x = 0.1, y = 0.1, u = 1.0, v = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < 1000; ++k) {
        const double xn = 1.0 - a * x * x + y;
        y = b * x;
        x = xn;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double un = -2.0 * a * x * u + v;
        const double vn = b * u;
        const double xn = 1.0 - a * x * x + y;
        y = b * x;
        x = xn;
        const double len = std::hypot(un, vn);
        acc += std::log(len);
        u = un / len;
        v = vn / len;
    }
    return acc / static_cast<double>(n);
}

inline std::vector<double> logistic_series(std::size_t n, double r = 4.0, double x0 = 0.3, std::size_t discard = 100) {
    double x = x0;
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n + discard; ++k) {
        x = r * x * (1.0 - x);
        if (k >= discard) out.push_back(x);
    }
    return out;
}

/// Time average of ln|f'(x)| = ln|r (1 - 2x)| along an orbit.
inline double logistic_tangent_exponent(std::size_t n = 200000, double r = 4.0, double x0 = 0.3) {
    double x = x0, acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += std::log(std::abs(r * (1.0 - 2.0 * x)));
        x = r * x * (1.0 - x);
    }
    return acc / static_cast<double>(n);
}

/// Mean quadratures of the damped oscillator dPhi/dt = Q, dQ/dt = -Phi - 2 D Q.
struct DampedOscillator {
    double phi0, q0, D;

    /// Closed form for D < 1: Phi(t) = e^{-D t} (A cos w t + B sin w t), w = sqrt(1 - D^2).
    std::pair<double, double> at(double t) const {
        const double w = std::sqrt(1.0 - D * D);
        const double A = phi0;
        const double B = (q0 + D * phi0) / w;
        const double e = std::exp(-D * t);
        const double c = std::cos(w * t), s = std::sin(w * t);
        const double phi = e * (A * c + B * s);
        const double q = e * ((-D * A + w * B) * c + (-D * B - w * A) * s);
        return {phi, q};
    }
};

}  // namespace squidqct::oracles
