#pragma once

// Oracle suites shared by the `validate` subcommand and the acceptance
// binary. Each check compares the production code against an independent
// reference (analytic solution, master equation, tangent maps).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "squidqct/circuit.hpp"
#include "squidqct/fock.hpp"
#include "squidqct/lindblad.hpp"
#include "squidqct/lyapunov.hpp"
#include "squidqct/oracles.hpp"
#include "squidqct/qsd.hpp"
#include "squidqct/sweep.hpp"

namespace squidqct::validation {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

inline std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

/// kappa Phi_ex0 = 2 pi phi_ex0_ratio and beta_c kappa^2 = beta_L for every
/// built-in set.
inline CheckResult reduction_identities(double tol = 1e-10) {
    CheckResult r{"reduction identities", true, {}};
    double worst = 0.0;
    for (const auto& ps : builtin_parameter_sets()) {
        const auto m = reduce(ps.squid);
        const double e1 = std::abs(m.kappa * m.Phi_ex0 / (kTwoPi * ps.squid.phi_ex0_ratio) - 1.0);
        const double e2 = std::abs(m.beta_c * m.kappa * m.kappa / beta_L(ps.squid) - 1.0);
        worst = std::max({worst, e1, e2});
    }
    r.passed = worst <= tol;
    r.detail = "max relative error " + fmt(worst, 3) + " (tolerance " + fmt(tol, 3) + ")";
    return r;
}

struct DampedOscillatorOptions {
    int trajectories = 500;
    int N = 32;
    double D = 0.1;
    int checkpoints = 20;
    double t_end = 20.0;
    double dt = 0.005;
    cplx alpha0{0.877, -0.566};
    std::uint64_t seed = 20240601;
};

/// Ensemble mean of <Phi>, <Q> for the undriven harmonic case against the
/// closed-form damped oscillator, within 3 standard errors at each checkpoint.
inline CheckResult damped_oscillator(const DampedOscillatorOptions& o = {}, double* min_delta = nullptr) {
    DimensionlessModel m;
    m.beta_c = 0.0;
    m.kappa = 1.0;
    m.Phi_ex0 = 0.0;
    m.omega_d_ratio = 1.0;
    IntegratorConfig cfg;
    cfg.N = o.N;
    cfg.dt = o.dt;
    cfg.moving_frame = false;
    const long long per_check = std::llround(o.t_end / o.checkpoints / o.dt);
    std::vector<double> s_phi(o.checkpoints, 0.0), s_phi2(o.checkpoints, 0.0), s_q(o.checkpoints, 0.0),
        s_q2(o.checkpoints, 0.0);
    double dmin = 1e300;
    for (int k = 0; k < o.trajectories; ++k) {
        QsdIntegrator integ(m, o.D, cfg);
        NoiseStream noise(o.seed, static_cast<std::uint64_t>(k));
        StateVector s = coherent(o.alpha0, o.N);
        long long n = 0;
        for (int c = 0; c < o.checkpoints; ++c) {
            for (long long j = 0; j < per_check; ++j, ++n) integ.step(s, n * o.dt, o.dt, noise(o.dt));
            const auto q = quadrature_moments(s);
            s_phi[c] += q.mean_phi;
            s_phi2[c] += q.mean_phi * q.mean_phi;
            s_q[c] += q.mean_q;
            s_q2[c] += q.mean_q * q.mean_q;
            dmin = std::min(dmin, q.uncertainty());
        }
    }
    if (min_delta) *min_delta = std::min(*min_delta, dmin);
    const double n = o.trajectories;
    const oracles::DampedOscillator exact{kSqrt2 * o.alpha0.real(), kSqrt2 * o.alpha0.imag(), o.D};
    double worst = 0.0;
    int failures = 0;
    for (int c = 0; c < o.checkpoints; ++c) {
        const double t = (c + 1) * per_check * o.dt;
        const auto [phi, q] = exact.at(t);
        const double mp = s_phi[c] / n, mq = s_q[c] / n;
        const double sep = std::sqrt(std::max(0.0, s_phi2[c] / n - mp * mp) / (n - 1.0));
        const double seq = std::sqrt(std::max(0.0, s_q2[c] / n - mq * mq) / (n - 1.0));
        const double zp = std::abs(mp - phi) / std::max(sep, 1e-15);
        const double zq = std::abs(mq - q) / std::max(seq, 1e-15);
        worst = std::max({worst, zp, zq});
        if (zp > 3.0) ++failures;
        if (zq > 3.0) ++failures;
    }
    CheckResult r{"damped-oscillator oracle", failures == 0, {}};
    r.detail = std::to_string(o.trajectories) + " trajectories, N=" + std::to_string(o.N) + ", D=" + fmt(o.D) + ", " +
               std::to_string(o.checkpoints) + " checkpoints: worst deviation " + fmt(worst, 3) +
               " standard errors (limit 3), " + std::to_string(failures) + " exceedances";
    return r;
}

struct MasterEquationOptions {
    int trajectories = 2000;
    int N = 12;
    double beta_c = 1.0;
    double kappa = 1.0;
    double Phi_ex0 = 0.5;
    double omega_d = 1.0;
    double D = 0.2;
    double t_end = 5.0;
    double dt = 0.005;
    cplx alpha0{0.5, 0.0};
    std::uint64_t seed = 20240601;
};

/// Trace distance between the QSD ensemble density matrix and the
/// master-equation solution at t_end. Both sides integrate the same
/// truncated model, so no leakage policing is applied here.
inline CheckResult master_equation(const MasterEquationOptions& o = {}, double* distance_out = nullptr,
                                   double* min_delta = nullptr) {
    DimensionlessModel m;
    m.beta_c = o.beta_c;
    m.kappa = o.kappa;
    m.Phi_ex0 = o.Phi_ex0;
    m.omega_d_ratio = o.omega_d;
    IntegratorConfig cfg;
    cfg.N = o.N;
    cfg.dt = o.dt;
    cfg.moving_frame = false;
    const long long steps = std::llround(o.t_end / o.dt);
    const StateVector psi0 = coherent(o.alpha0, o.N);

    CheckResult r{"master-equation equivalence", false, {}};
    DensityMatrix oracle;
    try {
        oracle = evolve_master(DensityMatrix::pure(psi0), m, o.D, o.t_end, o.dt);
    } catch (const OracleFailure& e) {
        r.detail = std::string("oracle invariant failure: ") + e.what();
        return r;
    }

    CMatrix mean = CMatrix::Zero(o.N, o.N);
    double dmin = 1e300;
    for (int k = 0; k < o.trajectories; ++k) {
        QsdIntegrator integ(m, o.D, cfg);
        NoiseStream noise(o.seed, static_cast<std::uint64_t>(k));
        StateVector s = psi0;
        for (long long n = 0; n < steps; ++n) integ.step(s, n * o.dt, o.dt, noise(o.dt));
        const CVector v = s.amps / s.amps.norm();
        mean += v * v.adjoint();
        dmin = std::min(dmin, quadrature_moments(s).uncertainty());
    }
    if (min_delta) *min_delta = std::min(*min_delta, dmin);
    mean /= static_cast<double>(o.trajectories);
    const double dist = trace_distance(DensityMatrix{mean}, oracle);
    if (distance_out) *distance_out = dist;
    r.passed = dist <= 0.05;
    r.detail = std::to_string(o.trajectories) + " trajectories, N=" + std::to_string(o.N) + ": trace distance " +
               fmt(dist, 4) + " at t=" + fmt(o.t_end) + " (limit 0.05); oracle trace/Hermiticity/positivity held";
    return r;
}

struct LyapunovOracleValues {
    double henon = 0.0, henon_oracle = 0.0;
    double logistic = 0.0, logistic_oracle = 0.0;
    double sine = 0.0;
};

/// Henon and logistic estimates against their tangent-map exponents, and a
/// pure sine against zero.
inline CheckResult lyapunov_oracles(LyapunovOracleValues* out = nullptr) {
    LyapunovOracleValues v;
    v.henon_oracle = oracles::henon_tangent_exponent();
    v.logistic_oracle = oracles::logistic_tangent_exponent();

    EmbeddingConfig map_cfg;
    map_cfg.delay = 1;
    map_cfg.dim = 2;
    map_cfg.theiler = 1;
    map_cfg.max_horizon = 30;
    const auto henon = oracles::henon_series(10000);
    v.henon = lambda_of_series(henon, 1.0, map_cfg).lambda_per_sample;
    const auto logistic = oracles::logistic_series(10000);
    v.logistic = lambda_of_series(logistic, 1.0, map_cfg).lambda_per_sample;

    std::vector<double> sine(32768);
    for (std::size_t i = 0; i < sine.size(); ++i) sine[i] = std::sin(kTwoPi * static_cast<double>(i) / 64.0);
    v.sine = lambda_of_series(sine, 1.0, EmbeddingConfig{}).lambda_per_sample;

    const bool ok_h = std::abs(v.henon - v.henon_oracle) <= 0.05;
    const bool ok_l = std::abs(v.logistic - v.logistic_oracle) <= 0.07;
    const bool ok_s = std::abs(v.sine) <= 0.002;
    if (out) *out = v;
    CheckResult r{"lyapunov estimator oracles", ok_h && ok_l && ok_s, {}};
    r.detail = "henon " + fmt(v.henon, 4) + " vs tangent map " + fmt(v.henon_oracle, 5) + " (+-0.05); logistic " +
               fmt(v.logistic, 4) + " vs " + fmt(v.logistic_oracle, 5) + " (+-0.07); sine " + fmt(v.sine, 3) +
               " (|.|<=0.002)";
    return r;
}

}  // namespace squidqct::validation
