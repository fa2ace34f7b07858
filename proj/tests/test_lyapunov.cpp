#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "squidqct/lyapunov.hpp"
#include "squidqct/oracles.hpp"
#include "squidqct/qsd.hpp"

using namespace squidqct;

namespace {

EmbeddingConfig map_config() {
    EmbeddingConfig c;
    c.delay = 1;
    c.dim = 2;
    c.theiler = 1;
    c.max_horizon = 30;
    return c;
}

StretchingCurve line_curve(int H, double slope, double icpt) {
    StretchingCurve c;
    for (int h = 0; h <= H; ++h) {
        c.horizons.push_back(h);
        c.s_values.push_back(slope * h + icpt);
    }
    return c;
}

}  // namespace

TEST(Embed, Examples) {
    std::vector<double> s(10);
    for (int i = 0; i < 10; ++i) s[i] = i + 1;
    const auto c = embed(s, 3, 3);
    EXPECT_EQ(c.size(), 4u);
    EXPECT_EQ(c.vector(0), (std::vector<double>{1, 4, 7}));
    EXPECT_EQ(c.vector(3), (std::vector<double>{4, 7, 10}));

    const auto id = embed(s, 1, 1);
    ASSERT_EQ(id.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(id(i, 0), s[i]);

    const std::vector<double> flat(20, 3.0);
    const auto f = embed(flat, 2, 3);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f.vector(i), f.vector(0));

    EXPECT_THROW(embed(std::vector<double>(6, 0.0), 3, 3), InsufficientData);
    EXPECT_THROW(embed(s, 0, 2), InvalidParameter);
}

TEST(Embed, ConfigNeedsHorizon) {
    EmbeddingConfig cfg;
    EXPECT_THROW(embed(std::vector<double>(300, 0.0), cfg), InsufficientData);
    cfg.scale = 1.5;
    EXPECT_THROW(embed(std::vector<double>(3000, 0.0), cfg), InvalidParameter);
}

TEST(Stretching, ExactCopiesAreAnEstimationFailure) {
    const double pattern[5] = {0.1, 0.7, 0.3, 0.9, 0.5};
    std::vector<double> s(3000);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = pattern[i % 5];
    EXPECT_THROW(lambda_of_series(s, 1.0, map_config()), EstimationFailure);
}

TEST(Stretching, ConstantSeriesFails) {
    EXPECT_THROW(lambda_of_series(std::vector<double>(1000, 1.0), 1.0, map_config()), EstimationFailure);
}

TEST(Stretching, TooFewNeighbours) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u;
    std::vector<double> s(200);
    for (auto& x : s) x = u(rng);
    auto cfg = map_config();
    cfg.scale = 0.001;
    cfg.min_neighbors = 10;
    EXPECT_THROW(lambda_of_series(s, 1.0, cfg), EstimationFailure);
}

TEST(Stretching, TheilerWindowExcludesTemporalNeighbours) {
    const auto x = oracles::henon_series(4000);
    auto cfg = map_config();
    cfg.theiler = 25;
    std::size_t pairs = 0, violations = 0;
    stretching(embed(x, cfg), cfg, [&](std::size_t i, std::size_t j) {
        ++pairs;
        if ((i > j ? i - j : j - i) <= 25) ++violations;
    });
    EXPECT_GT(pairs, 0u);
    EXPECT_EQ(violations, 0u);
}

TEST(Lyapunov, HenonAgainstTangentMap) {
    const double oracle = oracles::henon_tangent_exponent();
    EXPECT_NEAR(oracle, 0.419, 0.002);
    const auto est = lambda_of_series(oracles::henon_series(10000), 1.0, map_config());
    EXPECT_NEAR(est.lambda_per_sample, oracle, 0.05);
}

TEST(Lyapunov, LogisticAgainstTangentMap) {
    const double oracle = oracles::logistic_tangent_exponent();
    EXPECT_NEAR(oracle, std::log(2.0), 0.01);
    const auto est = lambda_of_series(oracles::logistic_series(10000), 1.0, map_config());
    EXPECT_NEAR(est.lambda_per_sample, oracle, 0.1 * oracle);
}

TEST(Lyapunov, SineHasZeroExponent) {
    std::vector<double> s(32768);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sin(kTwoPi * static_cast<double>(i) / 64.0);
    const auto est = lambda_of_series(s, 1.0, EmbeddingConfig{});
    EXPECT_LE(std::abs(est.lambda_per_sample), 0.002);
}

TEST(Fit, FlatCurve) {
    const auto est = fit_lambda(line_curve(20, 0.0, 3.0), {2, 15});
    EXPECT_TRUE(est.flat);
    EXPECT_EQ(est.lambda_per_sample, 0.0);
}

TEST(Fit, ExactLine) {
    const auto c = line_curve(40, 0.1, 2.0);
    const auto est = fit_lambda(c, {3, 30}, 0.5);
    EXPECT_NEAR(est.lambda_per_sample, 0.1, 1e-12);
    EXPECT_NEAR(est.lambda_per_unit_time, 0.2, 1e-12);
    EXPECT_NEAR(est.fit_residual, 0.0, 1e-7);  // cancellation in syy - sxy^2/sxx
    const auto range = auto_fit_range(c);
    EXPECT_NEAR(fit_lambda(c, range).lambda_per_sample, 0.1, 1e-12);
    EXPECT_THROW(fit_lambda(c, {5, 6}), InvalidParameter);
    EXPECT_THROW(fit_lambda(c, {0, 41}), InvalidParameter);
}

TEST(Fit, AutoRangeSkipsFloorAndSaturation) {
    // S-curve: flat at 0 until h = 10, slope 0.2 until h = 40, flat after.
    StretchingCurve c;
    for (int h = 0; h <= 80; ++h) {
        c.horizons.push_back(h);
        c.s_values.push_back(h < 10 ? 0.0 : h < 40 ? 0.2 * (h - 10) : 6.0);
    }
    const auto r = auto_fit_range(c);
    EXPECT_GE(r.first, 10);
    EXPECT_LE(r.second, 40);
    EXPECT_GE(r.second - r.first + 1, 8);
    EXPECT_NEAR(fit_lambda(c, r).lambda_per_sample, 0.2, 1e-12);
}

TEST(LyapunovProperty, AffineInvariance) {
    const auto x = oracles::henon_series(6000);
    std::vector<double> scaled(x.size()), shifted(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        scaled[i] = 4.0 * x[i];
        shifted[i] = x[i] + 10.0;
    }
    const double base = lambda_of_series(x, 1.0, map_config()).lambda_per_sample;
    EXPECT_NEAR(lambda_of_series(scaled, 1.0, map_config()).lambda_per_sample, base, 1e-9);
    EXPECT_NEAR(lambda_of_series(shifted, 1.0, map_config()).lambda_per_sample, base, 0.02 * base);
}

TEST(LyapunovProperty, UnitRelationAndDeterminism) {
    const auto x = oracles::henon_series(5000);
    const auto a = lambda_of_series(x, 0.25, map_config());
    const auto b = lambda_of_series(x, 0.25, map_config());
    EXPECT_EQ(a.lambda_per_sample, b.lambda_per_sample);
    EXPECT_EQ(a.fit_range, b.fit_range);
    EXPECT_NEAR(a.lambda_per_unit_time, a.lambda_per_sample / 0.25, 1e-12);
}

TEST(LyapunovProperty, DampedUndrivenRunContracts) {
    DimensionlessModel m;
    m.beta_c = 0.0;
    m.Phi_ex0 = 0.0;
    m.omega_d_ratio = 1.0;
    auto cfg = IntegratorConfig::for_period(m.drive_period(), 1024, 64);
    cfg.N = 24;
    cfg.moving_frame = false;
    NoiseStream noise(20240601, 0);
    const auto tr = evolve(cplx(1.5, 0.0), m, 0.05, 60 * m.drive_period(), cfg, noise);
    const auto est = lambda_of_trajectory(tr, EmbeddingConfig{});
    EXPECT_LE(est.lambda_per_sample, 1e-3) << est.lambda_per_sample;
}

TEST(LyapunovProperty, ScaleRobustnessIsReported) {
    const auto x = oracles::henon_series(10000);
    auto cfg = map_config();
    cfg.scale = 0.014;
    const double a = lambda_of_series(x, 1.0, cfg).lambda_per_sample;
    cfg.scale = 0.02;
    const double b = lambda_of_series(x, 1.0, cfg).lambda_per_sample;
    RecordProperty("lambda_scale_1_4pct", std::to_string(a));
    RecordProperty("lambda_scale_2pct", std::to_string(b));
    std::cout << "[ diag     ] henon lambda at scale 1.4%: " << a << ", 2.0%: " << b << '\n';
    SUCCEED();
}

TEST(StretchingCsv, Header) {
    std::ostringstream os;
    write_stretching_csv(os, line_curve(3, 1.0, 0.0));
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "horizon,s_value,valid_refs");
}
