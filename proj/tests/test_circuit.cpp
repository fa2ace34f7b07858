#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "squidqct/circuit.hpp"

using namespace squidqct;

namespace {

SquidParameters base_params() { return {0.1e-12, 300e-12, 2.2e-6, 1.14, 0.2684}; }

// Hand reduction, written out from the SI definitions rather than reusing reduce().
struct Hand {
    double omega0, beta_c, kappa, Phi_ex0;
};
Hand hand_reduce(const SquidParameters& p) {
    const double e = 1.602176634e-19, h = 6.62607015e-34;
    const double hbar = h / (2.0 * 3.14159265358979323846);
    const double phi0 = h / (2.0 * e);
    Hand r;
    r.omega0 = 1.0 / std::sqrt(p.L * p.C);
    // E_J / (hbar omega0) with E_J = phi0 Ic / 2pi
    r.beta_c = (phi0 * p.Ic / (2.0 * 3.14159265358979323846)) / (hbar * r.omega0);
    const double flux_scale = std::sqrt(hbar / (p.C * r.omega0));  // flux per unit dimensionless Phi
    r.kappa = 2.0 * 3.14159265358979323846 * flux_scale / phi0;
    r.Phi_ex0 = p.phi_ex0_ratio * phi0 / flux_scale;
    return r;
}

struct WarningCapture {
    std::vector<std::string> seen;
    WarningSink previous;
    WarningCapture() {
        previous = set_warning_sink([this](const std::string& m) { seen.push_back(m); });
    }
    ~WarningCapture() { set_warning_sink(previous); }
};

}  // namespace

TEST(Constants, ExactSiValues) {
    constexpr auto k = PhysicalConstants::codata2018();
    EXPECT_EQ(k.e, 1.602176634e-19);
    EXPECT_EQ(k.h, 6.62607015e-34);
    EXPECT_NEAR(k.phi0, 2.067833848e-15, 1e-23);
    EXPECT_NEAR(k.hbar, 1.054571817e-34, 1e-42);
}

TEST(Reduce, BaseSetMatchesHandComputation) {
    const auto m = reduce(base_params());
    const auto h = hand_reduce(base_params());
    EXPECT_NEAR(m.omega0 / h.omega0, 1.0, 1e-12);
    EXPECT_NEAR(m.beta_c / h.beta_c, 1.0, 1e-12);
    EXPECT_NEAR(m.kappa / h.kappa, 1.0, 1e-12);
    EXPECT_NEAR(m.Phi_ex0 / h.Phi_ex0, 1.0, 1e-12);
    EXPECT_NEAR(m.omega0, 1.826e11, 0.001e11);
    EXPECT_NEAR(m.beta_c, 37.6, 0.05);
    EXPECT_NEAR(m.kappa, 0.231, 0.0005);
    EXPECT_NEAR(m.Phi_ex0, 7.30, 0.005);
    EXPECT_EQ(m.omega_d_ratio, 1.14);
}

TEST(Reduce, DriveScaleIdentity) {
    const auto m = reduce(base_params());
    EXPECT_NEAR(m.kappa * m.Phi_ex0, kTwoPi * 0.2684, 1e-12);
    EXPECT_NEAR(m.kappa * m.Phi_ex0, 1.6865, 1e-4);  // 1.68641
}

TEST(Reduce, LabelOneSet) {
    const SquidParameters p{3.95e-12, 100e-12, 4.6e-6, 0.65, 0.081};
    const auto m = reduce(p);
    EXPECT_NEAR(m.beta_c * m.kappa * m.kappa, beta_L(p), 1e-10);
    EXPECT_NEAR(m.beta_c * m.kappa * m.kappa, 1.398, 0.001);
}

TEST(Reduce, RejectsNonPositiveFieldByName) {
    auto p = base_params();
    p.L = 0.0;
    try {
        reduce(p);
        FAIL() << "expected InvalidParameter";
    } catch (const InvalidParameter& e) {
        EXPECT_EQ(e.field(), "L");
    }
    p = base_params();
    p.phi_ex0_ratio = -1.0;
    try {
        reduce(p);
        FAIL();
    } catch (const InvalidParameter& e) {
        EXPECT_EQ(e.field(), "phi_ex0_ratio");
    }
    p = base_params();
    p.C = std::nan("");
    EXPECT_THROW(reduce(p), InvalidParameter);
}

TEST(Reduce, WarnsWithoutMultiWellPotential) {
    WarningCapture cap;
    SquidParameters p = base_params();
    p.Ic = 1e-7;  // beta_L ~ 0.09
    const auto m = reduce(p);
    EXPECT_GT(m.beta_c, 0.0);
    ASSERT_EQ(cap.seen.size(), 1u);
    EXPECT_NE(cap.seen[0].find("beta_L"), std::string::npos);
    cap.seen.clear();
    reduce(base_params());
    EXPECT_TRUE(cap.seen.empty());
}

TEST(Drive, Examples) {
    const auto m = reduce(base_params());
    EXPECT_DOUBLE_EQ(drive(m, 0.0), m.Phi_ex0);
    EXPECT_NEAR(drive(m, std::numbers::pi / 1.14), -m.Phi_ex0, 1e-12);
    EXPECT_NEAR(drive(m, kTwoPi / 1.14), 7.30, 0.005);
    EXPECT_NEAR(m.drive_period(), kTwoPi / 1.14, 1e-15);
}

TEST(Potential, Examples) {
    DimensionlessModel flat;
    flat.beta_c = 0.0;
    flat.Phi_ex0 = 0.0;
    EXPECT_DOUBLE_EQ(potential(flat, 2.0, 0.3), 2.0);

    auto m = reduce(base_params());
    const double quarter = 0.25 * m.drive_period();
    EXPECT_NEAR(potential(m, 0.0, quarter), m.beta_c, 1e-9);
    EXPECT_NEAR(potential(m, m.Phi_ex0, 0.0), m.beta_c * std::cos(m.kappa * m.Phi_ex0), 1e-12);
    EXPECT_NEAR(potential(m, m.Phi_ex0, 0.0), -4.35, 0.02);  // -4.338
}

TEST(ReduceProperty, IdentitiesHoldForRandomParameters) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        SquidParameters p{0.1e-12 * std::pow(10.0, 1.5 * u(rng)), 200e-12 * std::pow(10.0, u(rng)),
                          3e-6 * std::pow(10.0, 0.5 * u(rng)), 1.0 + 0.5 * u(rng), 0.2 + 0.15 * u(rng)};
        WarningCapture quiet;
        const auto m = reduce(p);
        EXPECT_NEAR(m.kappa * m.Phi_ex0 / (kTwoPi * p.phi_ex0_ratio), 1.0, 1e-12);
        EXPECT_NEAR(m.beta_c * m.kappa * m.kappa / beta_L(p), 1.0, 1e-12);
    }
}

TEST(ReduceProperty, DriveIsPeriodic) {
    const auto m = reduce(base_params());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (int i = 0; i < 100; ++i) {
        const double t = u(rng);
        EXPECT_NEAR(drive(m, t), drive(m, t + m.drive_period()), 1e-9);
        EXPECT_NEAR(potential(m, 1.3, t), potential(m, 1.3, t + m.drive_period()), 1e-8);
    }
}

TEST(ReduceProperty, ScalingLAndCKeepsOmega0) {
    // Doubling L and halving C keeps omega0 and the drive's time scale fixed.
    auto p = base_params();
    auto q = p;
    q.L *= 2.0;
    q.C *= 0.5;
    const auto a = reduce(p), b = reduce(q);
    EXPECT_NEAR(a.omega0 / b.omega0, 1.0, 1e-12);
    EXPECT_NEAR(b.kappa / a.kappa, std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(b.beta_c / a.beta_c, 1.0, 1e-12);
}
