#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "squidqct/circuit.hpp"
#include "squidqct/fock.hpp"

using namespace squidqct;

namespace {

DimensionlessModel base_model() { return reduce({0.1e-12, 300e-12, 2.2e-6, 1.14, 0.2684}); }

CVector random_vector(int N, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CVector v(N);
    for (int k = 0; k < N; ++k) v[k] = {g(rng), g(rng)};
    return v / v.norm();
}

}  // namespace

TEST(Ladder, TwoLevelPhi) {
    const auto phi = build_phi(2);
    EXPECT_TRUE(phi.hermitian);
    EXPECT_NEAR(std::abs(phi.entries(0, 0)), 0.0, 1e-15);
    EXPECT_NEAR(phi.entries(0, 1).real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(phi.entries(1, 0).real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(std::abs(phi.entries(1, 1)), 0.0, 1e-15);
}

TEST(Ladder, QMatrixElement) {
    const auto q = build_q(6);
    EXPECT_NEAR(q.entries(0, 1).real(), 0.0, 1e-15);
    EXPECT_NEAR(q.entries(0, 1).imag(), -1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(q.entries(1, 0).imag(), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Ladder, PhiPlusIQLowers) {
    const int N = 5;
    const CMatrix A = build_phi(N).entries + kI * build_q(N).entries;
    const CVector out = A * fock_state(1, N).amps;
    EXPECT_NEAR(std::abs(out[0] - cplx(std::sqrt(2.0), 0.0)), 0.0, 1e-14);
    EXPECT_NEAR(out.tail(N - 1).norm(), 0.0, 1e-14);
}

TEST(Ladder, CommutatorAwayFromEdge) {
    const int N = 20;
    const CMatrix phi = build_phi(N).entries, q = build_q(N).entries;
    const CMatrix c = phi * q - q * phi;
    for (int k = 0; k < N - 1; ++k) {
        EXPECT_NEAR(c(k, k).real(), 0.0, 1e-13);
        EXPECT_NEAR(c(k, k).imag(), 1.0, 1e-13);
    }
}

TEST(Ladder, ApplyMatchesMatrix) {
    std::mt19937_64 rng(5);
    const CVector v = random_vector(12, rng);
    CVector out;
    apply_a(v, out);
    EXPECT_LT((out - annihilation(12) * v).norm(), 1e-14);
    apply_adag(v, out);
    EXPECT_LT((out - annihilation(12).adjoint() * v).norm(), 1e-14);
}

TEST(Ladder, RejectsTinyBasis) { EXPECT_THROW(build_phi(1), InvalidParameter); }

TEST(Hamiltonian, HarmonicIsDiagonal) {
    DimensionlessModel m;
    m.beta_c = 0.0;
    m.Phi_ex0 = 0.0;
    const auto H = build_hamiltonian(m, 0.7, 10);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
            EXPECT_NEAR(std::abs(H.entries(i, j) - (i == j ? cplx(i + 0.5, 0.0) : cplx{})), 0.0, 1e-15);
}

TEST(Hamiltonian, CosineVacuumAverage) {
    // Gaussian integral: <0|cos(kappa Phi)|0> = exp(-kappa^2 / 4).
    const auto m = base_model();
    const RMatrix c = cos_kappa_phi(64, m.kappa);
    EXPECT_NEAR(c(0, 0), std::exp(-m.kappa * m.kappa / 4.0), 1e-12);
    EXPECT_NEAR(m.beta_c * c(0, 0), 37.1, 0.05);
    // kappa = 1 as a harder case
    EXPECT_NEAR(cos_kappa_phi(64, 1.0)(0, 0), std::exp(-0.25), 1e-12);
}

TEST(Hamiltonian, CosineMatchesTaylorSeriesOnSmallBasis) {
    // Independent construction: power series of the matrix kappa Phi on a
    // larger basis, then cropped; the functional calculus on the truncated
    // Phi must agree in the low block.
    const int big = 80, N = 8;
    const double kappa = 0.4;
    const CMatrix X = kappa * build_phi(big).entries;
    CMatrix term = CMatrix::Identity(big, big), acc = term;
    for (int k = 1; k < 60; ++k) {
        term = term * X * X / static_cast<double>((2 * k - 1) * (2 * k));
        acc += (k % 2 ? -1.0 : 1.0) * term;
    }
    const RMatrix c = cos_kappa_phi(big, kappa);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) EXPECT_NEAR(c(i, j), acc(i, j).real(), 1e-10) << i << "," << j;
}

TEST(Hamiltonian, PeriodicInTime) {
    const auto m = base_model();
    for (double t : {0.0, 0.37, 2.1, 5.5}) {
        const auto a = build_hamiltonian(m, t, 32);
        const auto b = build_hamiltonian(m, t + m.drive_period(), 32);
        EXPECT_LT((a.entries - b.entries).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Hamiltonian, HermitianForRandomParameters) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        DimensionlessModel m;
        m.beta_c = 50.0 * u(rng);
        m.kappa = 0.1 + u(rng);
        m.Phi_ex0 = 10.0 * u(rng);
        m.omega_d_ratio = 0.5 + u(rng);
        const auto H = build_hamiltonian(m, 10.0 * u(rng), 24);
        EXPECT_TRUE(H.hermiticity_holds(1e-12));
        const auto R = build_damping(u(rng), 24);
        EXPECT_TRUE(R.hermiticity_holds(1e-12));
    }
}

TEST(Damping, ZeroCouplingGivesZero) {
    EXPECT_EQ(build_damping(0.0, 6).entries.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(build_lindblad(0.0, 6).entries.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Damping, LadderForm) {
    // (D/2)(Phi Q + Q Phi) = -i D/2 (a^2 - a^dag^2) except at the top edge.
    const int N = 10;
    const double D = 0.3;
    const CMatrix a = annihilation(N);
    const CMatrix ladder = -kI * (D / 2.0) * (a * a - a.adjoint() * a.adjoint());
    const CMatrix R = build_damping(D, N).entries;
    for (int i = 0; i < N - 1; ++i)
        for (int j = 0; j < N - 1; ++j) EXPECT_NEAR(std::abs(R(i, j) - ladder(i, j)), 0.0, 1e-14);
    EXPECT_NEAR(R(0, 2).imag(), -D / 2.0 * std::sqrt(2.0), 1e-14);
}

TEST(Damping, LindbladSquareIsNumber) {
    const int N = 9;
    const double D = 0.25;
    const CMatrix L = build_lindblad(D, N).entries;
    const CMatrix LL = L.adjoint() * L;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            EXPECT_NEAR(std::abs(LL(i, j) - (i == j ? cplx(2.0 * D * i, 0.0) : cplx{})), 0.0, 1e-13);
}

TEST(Damping, NegativeCouplingRejected) {
    EXPECT_THROW(build_damping(-0.1, 4), InvalidParameter);
    EXPECT_THROW(build_lindblad(-1e-9, 4), InvalidParameter);
}

TEST(States, VacuumAndFock) {
    const auto v = coherent({0.0, 0.0}, 8);
    EXPECT_NEAR(std::abs(v.amps[0] - cplx(1.0, 0.0)), 0.0, 1e-15);
    EXPECT_NEAR(v.amps.tail(7).norm(), 0.0, 1e-15);
    EXPECT_THROW(fock_state(8, 8), InvalidParameter);
}

TEST(States, CoherentMoments) {
    const cplx alpha{0.877, -0.566};
    const auto s = coherent(alpha, 40);
    EXPECT_NEAR(expectation(s, build_number(40)).real(), std::norm(alpha), 1e-10);
    EXPECT_NEAR(std::norm(alpha), 1.0895, 1e-4);
    EXPECT_NEAR(expectation(s, build_phi(40)).real(), std::sqrt(2.0) * 0.877, 1e-10);
    EXPECT_NEAR(expectation(s, build_q(40)).real(), -0.8004, 1e-4);
    const auto q = quadrature_moments(s);
    EXPECT_NEAR(q.uncertainty(), 0.5, 1e-10);
    EXPECT_NEAR(q.var_phi, 0.5, 1e-10);
    EXPECT_NEAR(std::abs(q.mean_a - alpha), 0.0, 1e-10);
}

TEST(States, CoherentRefusesHopelessTruncation) {
    EXPECT_THROW(coherent({3.0, 0.0}, 16), InvalidParameter);
    std::vector<std::string> seen;
    auto prev = set_warning_sink([&](const std::string& m) { seen.push_back(m); });
    coherent({2.0, 0.0}, 12);
    set_warning_sink(prev);
    EXPECT_EQ(seen.size(), 1u);
}

TEST(States, FockVariance) {
    for (int n = 0; n < 6; ++n) {
        const auto s = fock_state(n, 16);
        EXPECT_NEAR(variance(s, build_phi(16)), n + 0.5, 1e-12);
        const auto q = quadrature_moments(s);
        EXPECT_NEAR(q.var_phi, n + 0.5, 1e-12);
        EXPECT_NEAR(q.var_q, n + 0.5, 1e-12);
    }
}

TEST(States, DimensionMismatch) {
    EXPECT_THROW(expectation(fock_state(0, 4), build_phi(5)), DimensionMismatch);
    EXPECT_THROW(variance(fock_state(0, 4), build_phi(5)), DimensionMismatch);
}

TEST(States, MomentsAgreeWithMatrices) {
    std::mt19937_64 rng(21);
    const int N = 14;
    for (int i = 0; i < 20; ++i) {
        StateVector s(random_vector(N, rng));
        const auto q = quadrature_moments(s);
        EXPECT_NEAR(q.mean_phi, expectation(s, build_phi(N)).real(), 1e-12);
        EXPECT_NEAR(q.mean_q, expectation(s, build_q(N)).real(), 1e-12);
        // Heisenberg bound holds for any amplitude vector
        EXPECT_GE(q.uncertainty(), 0.5 - 1e-12);
    }
}

TEST(States, NormalizeReturnsOldNorm) {
    StateVector s(CVector::Constant(4, cplx(1.0, 1.0)));
    EXPECT_NEAR(s.normalize(), std::sqrt(8.0), 1e-15);
    EXPECT_NEAR(s.norm(), 1.0, 1e-15);
}

TEST(Displacement, CovariantOnMeans) {
    // D(beta) shifts <a> by beta; recenter leaves physical moments unchanged.
    const int N = 48;
    const cplx alpha{0.4, 0.2}, beta{-0.7, 0.5};
    StateVector s = coherent(alpha, N);
    apply_displacement(s.amps, beta);
    EXPECT_NEAR(std::abs(quadrature_moments(s).mean_a - (alpha + beta)), 0.0, 1e-10);
    EXPECT_NEAR(s.norm(), 1.0, 1e-10);

    std::mt19937_64 rng(2);
    CVector v = random_vector(N, rng);
    v.tail(N - 8).setZero();
    StateVector r(v / v.norm());
    const auto before = quadrature_moments(r);
    recenter(r, beta);
    const auto after = quadrature_moments(r);
    EXPECT_NEAR(after.mean_phi, before.mean_phi, 1e-9);
    EXPECT_NEAR(after.mean_q, before.mean_q, 1e-9);
    EXPECT_NEAR(after.var_phi, before.var_phi, 1e-9);
    EXPECT_NEAR(after.var_q, before.var_q, 1e-9);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    std::mt19937_64 rng(4);
    StateVector s(random_vector(17, rng), {1.25, -3.5});
    std::stringstream ss;
    write_state(ss, s);
    EXPECT_EQ(ss.str().size(), 8u * (1 + 2 + 2 * 17));
    EXPECT_EQ(static_cast<unsigned char>(ss.str()[0]), 17);
    const auto r = read_state(ss);
    EXPECT_EQ(r.frame, s.frame);
    ASSERT_EQ(r.dim(), 17);
    for (int k = 0; k < 17; ++k) EXPECT_EQ(r.amps[k], s.amps[k]);
    std::stringstream bad(ss.str().substr(0, 20));
    EXPECT_THROW(read_state(bad), Error);
}
