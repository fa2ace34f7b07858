#pragma once

// rf-SQUID circuit model: physical parameters and their reduction to the
// dimensionless driven Hamiltonian
//
//   H = Q^2/2 + (Phi - Phi_ex(t))^2/2 + beta_c cos(kappa Phi),
//   Phi_ex(t) = Phi_ex0 cos(omega_d t),
//
// with time in units of 1/omega0 and energy in units of hbar omega0.

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "squidqct/error.hpp"

namespace squidqct {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct PhysicalConstants {
    double e;      // C
    double h;      // J s
    double hbar;   // J s
    double phi0;   // Wb

    /// CODATA 2018; e and h are exact in the SI, hbar and phi0 follow from them.
    static constexpr PhysicalConstants codata2018() {
        constexpr double e = 1.602176634e-19;
        constexpr double h = 6.62607015e-34;
        return {e, h, h / kTwoPi, h / (2.0 * e)};
    }
};

struct SquidParameters {
    double C;              // F
    double L;              // H
    double Ic;             // A
    double omega_d_ratio;  // drive frequency / omega0
    double phi_ex0_ratio;  // drive amplitude / phi0

    /// Throws InvalidParameter naming the first non-positive field.
    void validate() const {
        auto check = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                std::ostringstream os;
                os << "must be finite and > 0 (got " << v << ")";
                throw InvalidParameter(name, os.str());
            }
        };
        check(C, "C");
        check(L, "L");
        check(Ic, "Ic");
        check(omega_d_ratio, "omega_d_ratio");
        check(phi_ex0_ratio, "phi_ex0_ratio");
    }
};

/// Hysteresis parameter 2 pi L Ic / phi0.
inline double beta_L(const SquidParameters& p,
                     const PhysicalConstants& k = PhysicalConstants::codata2018()) {
    return kTwoPi * p.L * p.Ic / k.phi0;
}

struct DimensionlessModel {
    double beta_c = 0.0;         // cosine amplitude, units of hbar omega0
    double kappa = 1.0;          // cosine argument scale
    double Phi_ex0 = 0.0;        // drive amplitude
    double omega_d_ratio = 1.0;  // drive frequency
    double omega0 = 1.0;         // rad/s, only for unit conversion

    double drive_period() const { return kTwoPi / omega_d_ratio; }
};

inline DimensionlessModel reduce(const SquidParameters& p,
                                 const PhysicalConstants& k = PhysicalConstants::codata2018()) {
    p.validate();
    if (beta_L(p, k) <= 1.0) {
        std::ostringstream os;
        os << "beta_L = " << beta_L(p, k) << " <= 1: potential has no multi-well structure";
        warn(os.str());
    }
    DimensionlessModel m;
    m.omega0 = 1.0 / std::sqrt(p.L * p.C);
    m.beta_c = p.Ic / (2.0 * k.e * m.omega0);
    m.kappa = 2.0 * k.e / std::sqrt(k.hbar * m.omega0 * p.C);
    m.Phi_ex0 = std::sqrt(m.omega0 * p.C / k.hbar) * p.phi_ex0_ratio * k.phi0;
    m.omega_d_ratio = p.omega_d_ratio;
    return m;
}

/// External flux Phi_ex(t).
inline double drive(const DimensionlessModel& m, double t) {
    return m.Phi_ex0 * std::cos(m.omega_d_ratio * t);
}

inline double potential(const DimensionlessModel& m, double phi, double t) {
    const double x = phi - drive(m, t);
    return 0.5 * x * x + m.beta_c * std::cos(m.kappa * phi);
}

}  // namespace squidqct
