#include <gtest/gtest.h>

#include <cmath>

#include "squidqct/fock.hpp"
#include "squidqct/lindblad.hpp"
#include "squidqct/oracles.hpp"

using namespace squidqct;

namespace {
DimensionlessModel harmonic() {
    DimensionlessModel m;
    m.beta_c = 0.0;
    m.Phi_ex0 = 0.0;
    return m;
}
DimensionlessModel driven() {
    DimensionlessModel m;
    m.beta_c = 1.0;
    m.kappa = 1.0;
    m.Phi_ex0 = 0.5;
    m.omega_d_ratio = 1.0;
    return m;
}
}  // namespace

TEST(Master, ZeroDurationIsIdentity) {
    const auto rho0 = DensityMatrix::pure(coherent({0.5, 0.1}, 10));
    const auto r = evolve_master(rho0, driven(), 0.2, 0.0, 0.01);
    EXPECT_EQ((r.rho - rho0.rho).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Master, UnitaryLimitKeepsPurity) {
    const auto rho0 = DensityMatrix::pure(coherent({0.5, 0.1}, 16));
    const auto r = evolve_master(rho0, driven(), 0.0, 3.0, 0.005);
    EXPECT_NEAR(r.purity(), 1.0, 1e-8);
}

TEST(Master, DampingLowersPurity) {
    const auto rho0 = DensityMatrix::pure(coherent({0.5, 0.1}, 16));
    const auto r = evolve_master(rho0, driven(), 0.3, 2.0, 0.005);
    EXPECT_LT(r.purity(), 0.999);
    EXPECT_NO_THROW(r.check(2.0));
}

TEST(Master, HarmonicMeanFollowsDampedOscillator) {
    const int N = 30;
    const cplx alpha{0.6, -0.3};
    const double D = 0.2;
    const oracles::DampedOscillator exact{std::sqrt(2.0) * alpha.real(), std::sqrt(2.0) * alpha.imag(), D};
    auto rho = DensityMatrix::pure(coherent(alpha, N));
    const CMatrix phi = build_phi(N).entries, q = build_q(N).entries;
    double t = 0.0;
    for (int k = 0; k < 5; ++k) {
        rho = evolve_master(rho, harmonic(), D, 1.0, 0.002);
        t += 1.0;
        const auto [p_ex, q_ex] = exact.at(t);
        EXPECT_NEAR(rho.expectation(phi).real(), p_ex, 1e-7) << "t=" << t;
        EXPECT_NEAR(rho.expectation(q).real(), q_ex, 1e-7) << "t=" << t;
    }
}

TEST(Master, TraceDistance) {
    const auto a = DensityMatrix::pure(fock_state(0, 4));
    const auto b = DensityMatrix::pure(fock_state(1, 4));
    EXPECT_NEAR(trace_distance(a, b), 1.0, 1e-14);
    EXPECT_NEAR(trace_distance(a, a), 0.0, 1e-14);
    EXPECT_THROW(trace_distance(a, DensityMatrix::pure(fock_state(0, 5))), DimensionMismatch);
}

TEST(Master, GuardsAndInvariantFailure) {
    EXPECT_THROW(evolve_master(DensityMatrix::pure(fock_state(0, 65)), harmonic(), 0.1, 1.0, 0.01),
                 InvalidParameter);
    DensityMatrix bad{2.0 * DensityMatrix::pure(fock_state(0, 4)).rho};
    EXPECT_THROW(bad.check(0.0), OracleFailure);
    StateVector moved = fock_state(0, 4);
    moved.frame = {1.0, 0.0};
    EXPECT_THROW(DensityMatrix::pure(moved), InvalidParameter);
}
