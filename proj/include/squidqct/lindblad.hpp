#pragma once

// Dense master-equation integrator, used only as a brute-force oracle for
// QSD ensemble averages at small truncation:
//
//   drho/dt = -i [H_D(t) + H_R, rho] + L rho L^dag - {L^dag L, rho}/2

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "squidqct/circuit.hpp"
#include "squidqct/error.hpp"
#include "squidqct/fock.hpp"

namespace squidqct {

struct DensityMatrix {
    CMatrix rho;

    int dim() const { return static_cast<int>(rho.rows()); }

    static DensityMatrix pure(const StateVector& s) {
        if (s.frame != cplx{}) throw InvalidParameter("frame", "density matrix needs a fixed-frame state");
        const CVector v = s.amps / s.amps.norm();
        return {v * v.adjoint()};
    }

    double purity() const { return (rho * rho).trace().real(); }

    cplx expectation(const CMatrix& A) const { return (rho * A).trace(); }

    /// Throws OracleFailure unless trace, Hermiticity and positivity hold.
    void check(double t) const {
        const double tr_err = std::abs(rho.trace() - cplx(1.0, 0.0));
        const double herm_err = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
        Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
        const double min_eig = es.eigenvalues().minCoeff();
        if (tr_err > 1e-8 || herm_err > 1e-10 || min_eig < -1e-8 || !rho.allFinite()) {
            std::ostringstream os;
            os << "density matrix invariant violated at t=" << t << ": |tr-1|=" << tr_err
               << " hermiticity=" << herm_err << " min eigenvalue=" << min_eig;
            throw OracleFailure(os.str());
        }
    }
};

/// 0.5 * sum |eig(a - b)|
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("density matrices differ in dimension");
    const CMatrix diff = a.rho - b.rho;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline constexpr int kOracleMaxDim = 64;

/// Classical RK4 on rho with fixed step dt; invariants checked every step.
inline DensityMatrix evolve_master(const DensityMatrix& rho0, const DimensionlessModel& m, double D,
                                   double t_end, double dt) {
    const int N = rho0.dim();
    if (N > kOracleMaxDim) throw InvalidParameter("N", "master-equation oracle is capped at N=64");
    if (!(dt > 0.0)) throw InvalidParameter("dt", "must be > 0");
    if (!(t_end >= 0.0)) throw InvalidParameter("t_end", "must be >= 0");
    rho0.check(0.0);
    if (t_end == 0.0) return rho0;

    const CMatrix HR = build_damping(D, N).entries;
    const CMatrix L = build_lindblad(D, N).entries;
    const CMatrix Ld = L.adjoint();
    const CMatrix LdL = Ld * L;
    DimensionlessModel undriven = m;
    undriven.Phi_ex0 = 0.0;
    const CMatrix H_static = build_hamiltonian(undriven, 0.0, N).entries + HR;
    const CMatrix phi = build_phi(N).entries;

    auto rhs = [&](const CMatrix& r, double t) -> CMatrix {
        const double d = drive(m, t);
        // Drive enters as -d Phi (+ d^2/2, which commutes away).
        const CMatrix H = H_static - d * phi;
        CMatrix out = -kI * (H * r - r * H);
        out += L * r * Ld - 0.5 * (LdL * r + r * LdL);
        return out;
    };

    const long long steps = std::max<long long>(1, std::llround(t_end / dt));
    const double h = t_end / static_cast<double>(steps);
    DensityMatrix state = rho0;
    CMatrix& r = state.rho;
    for (long long n = 0; n < steps; ++n) {
        const double t = n * h;
        const CMatrix k1 = rhs(r, t);
        const CMatrix k2 = rhs(r + 0.5 * h * k1, t + 0.5 * h);
        const CMatrix k3 = rhs(r + 0.5 * h * k2, t + 0.5 * h);
        const CMatrix k4 = rhs(r + h * k3, t + h);
        r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        state.check(t + h);
    }
    return state;
}

}  // namespace squidqct
