#pragma once

// Quantum state diffusion for the driven, damped rf-SQUID:
//
//   |dpsi> = -i (H_D(t) + H_R) |psi> dt
//            + (<L^dag> L - L^dag L / 2 - <L^dag><L> / 2) |psi> dt
//            + (L - <L>) |psi> dxi,
//
// with L = sqrt(2D) a, H_R = D/2 (Phi Q + Q Phi) and complex Wiener
// increments M(dxi* dxi) = dt, M(dxi dxi) = 0.
//
// The deterministic part may be advanced with Euler, Heun or RK4 stages;
// the noise term is always taken at the start of the step (Ito).

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "squidqct/circuit.hpp"
#include "squidqct/error.hpp"
#include "squidqct/fock.hpp"

namespace squidqct {

// -----------------------------------------------------------------------------
// Noise
// -----------------------------------------------------------------------------

/// Complex Wiener increments for one trajectory. Real and imaginary parts are
/// independent N(0, dt/2); the sequence is a pure function of (seed, stream_id).
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id),
                          static_cast<std::uint32_t>(stream_id >> 32), 0x5155u};
        engine_.seed(seq);
    }

    cplx operator()(double dt) {
        const double s = std::sqrt(0.5 * dt);
        const double re = normal_(engine_);
        const double im = normal_(engine_);
        return {s * re, s * im};
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Sums `factor` consecutive increments of dt/factor from an underlying
/// source, so a coarse run sees the same Brownian path as a fine one.
template <class Source>
class CoarsenedNoise {
public:
    CoarsenedNoise(Source& fine, int factor) : fine_(fine), factor_(factor) {}

    cplx operator()(double dt) {
        cplx sum{};
        for (int i = 0; i < factor_; ++i) sum += fine_(dt / factor_);
        return sum;
    }

private:
    Source& fine_;
    int factor_;
};

/// Deterministic zero noise.
struct NoNoise {
    cplx operator()(double) const { return {}; }
};

// -----------------------------------------------------------------------------
// Configuration and records
// -----------------------------------------------------------------------------

enum class Scheme { EulerMaruyama, HeunDrift, Rk4Drift };

inline std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::EulerMaruyama: return "euler-maruyama";
        case Scheme::HeunDrift: return "heun-drift";
        case Scheme::Rk4Drift: return "rk4-drift";
    }
    return "?";
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "euler-maruyama") return Scheme::EulerMaruyama;
    if (s == "heun-drift") return Scheme::HeunDrift;
    if (s == "rk4-drift") return Scheme::Rk4Drift;
    throw InvalidParameter("scheme", "unknown scheme '" + s + "'");
}

struct IntegratorConfig {
    double dt = kTwoPi / 1.14 / 2048.0;
    Scheme scheme = Scheme::Rk4Drift;
    int N = 64;
    bool moving_frame = true;
    int renormalize_every = 1;
    int sample_stride = 32;
    double leakage_limit = 1e-4;
    /// Moving frame: explicit re-centering when |<chi|a|chi>|^2 exceeds
    /// this many quanta; 0 selects N/4.
    double recenter_quanta = 0.0;

    /// Sample spacing must divide the drive period.
    void validate(double drive_period) const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt", "must be > 0");
        if (N < 2) throw InvalidParameter("N", "must be >= 2");
        if (renormalize_every < 1) throw InvalidParameter("renormalize_every", "must be >= 1");
        if (sample_stride < 1) throw InvalidParameter("sample_stride", "must be >= 1");
        if (!(leakage_limit > 0.0)) throw InvalidParameter("leakage_limit", "must be > 0");
        if (recenter_quanta < 0.0) throw InvalidParameter("recenter_quanta", "must be >= 0");
        const double spacing = sample_stride * dt;
        const double ratio = drive_period / spacing;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0)
            throw InvalidParameter("sample_stride",
                                   "sample spacing does not divide the drive period");
    }

    /// dt and stride for `steps` per period and `samples` recorded per period.
    static IntegratorConfig for_period(double drive_period, int steps, int samples) {
        if (steps < 1 || samples < 1 || steps % samples != 0)
            throw InvalidParameter("steps_per_period", "must be a positive multiple of samples_per_period");
        IntegratorConfig cfg;
        cfg.dt = drive_period / steps;
        cfg.sample_stride = steps / samples;
        return cfg;
    }
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> mean_phi;
    std::vector<double> mean_q;
    std::vector<double> var_phi;
    std::vector<double> var_q;
    std::vector<double> leakage;
    std::vector<double> norm_drift;

    std::size_t size() const { return times.size(); }

    double sample_spacing() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

    double uncertainty(std::size_t i) const { return std::sqrt(var_phi[i] * var_q[i]); }

    void push(double t, const QuadratureMoments& m, double leak, double drift) {
        times.push_back(t);
        mean_phi.push_back(m.mean_phi);
        mean_q.push_back(m.mean_q);
        var_phi.push_back(m.var_phi);
        var_q.push_back(m.var_q);
        leakage.push_back(leak);
        norm_drift.push_back(drift);
    }
};

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline constexpr const char* kTrajectoryHeader = "t,mean_phi,mean_q,var_phi,var_q,leakage,norm_drift";

inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& tr) {
    os << kTrajectoryHeader << '\n';
    for (std::size_t i = 0; i < tr.size(); ++i) {
        os << format_g17(tr.times[i]) << ',' << format_g17(tr.mean_phi[i]) << ','
           << format_g17(tr.mean_q[i]) << ',' << format_g17(tr.var_phi[i]) << ','
           << format_g17(tr.var_q[i]) << ',' << format_g17(tr.leakage[i]) << ','
           << format_g17(tr.norm_drift[i]) << '\n';
    }
}

inline TrajectoryRecord read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kTrajectoryHeader)
        throw Error("trajectory CSV header mismatch; expected '" + std::string(kTrajectoryHeader) + "'");
    TrajectoryRecord tr;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        double v[7];
        for (int c = 0; c < 7; ++c) {
            if (!std::getline(ls, cell, ',')) throw Error("trajectory CSV row " + std::to_string(row) + " is short");
            v[c] = std::stod(cell);
        }
        tr.times.push_back(v[0]);
        tr.mean_phi.push_back(v[1]);
        tr.mean_q.push_back(v[2]);
        tr.var_phi.push_back(v[3]);
        tr.var_q.push_back(v[4]);
        tr.leakage.push_back(v[5]);
        tr.norm_drift.push_back(v[6]);
    }
    return tr;
}

// -----------------------------------------------------------------------------
// Integrator
// -----------------------------------------------------------------------------

/// <chi|a|chi> / <chi|chi>
inline cplx mean_annihilation(const CVector& chi) {
    cplx A{};
    for (Eigen::Index k = 0; k + 1 < chi.size(); ++k)
        A += std::conj(chi[k]) * chi[k + 1] * std::sqrt(static_cast<double>(k + 1));
    return A / chi.squaredNorm();
}

/// Per-trajectory integrator: operators for one (model, D, N) plus the
/// scratch buffers of the stage evaluations. Not shareable between threads.
///
/// With a moving frame the displacement delta(t) advances linearly within a
/// step at a velocity chosen to keep <chi|a|chi> near zero. The frame motion
/// adds -(v a^dag - v* a) to the drift, so no re-expansion is needed; an
/// explicit re-centering is the fallback when the excitation relative to the
/// frame exceeds recenter_quanta.
class QsdIntegrator {
public:
    QsdIntegrator(const DimensionlessModel& m, double D, IntegratorConfig cfg)
        : model_(m), D_(D), cfg_(cfg), N_(cfg.N) {
        if (!(D >= 0.0) || !std::isfinite(D)) throw InvalidParameter("D", "coupling must be finite and >= 0");
        if (N_ < 2) throw InvalidParameter("N", "must be >= 2");
        if (!(cfg_.dt > 0.0)) throw InvalidParameter("dt", "must be > 0");
        sqrt_k_.resize(N_ + 2);
        for (int k = 0; k < N_ + 2; ++k) sqrt_k_[k] = std::sqrt(static_cast<double>(k));
        if (m.beta_c != 0.0) {
            cos_ = cos_kappa_phi(N_, m.kappa);
            sin_ = sin_kappa_phi(N_, m.kappa);
        }
        for (CVector* v : {&k1_, &k2_, &k3_, &k4_, &tmp_, &g_, &dense_}) v->resize(N_);
    }

    const IntegratorConfig& config() const { return cfg_; }

    /// Deterministic drift at time t for a state expressed in the frame
    /// `delta` moving with velocity v. Expectations use chi normalized.
    void drift(const CVector& chi, cplx delta, cplx v, double t, CVector& out) {
        const cplx A = mean_annihilation(chi);
        const double phi0 = kSqrt2 * delta.real();
        const double q0 = kSqrt2 * delta.imag();
        const double d = drive(model_, t);
        const double D = D_;
        // Linear terms c_phi Phi + c_q Q of the displaced Hamiltonian
        // (quadratic potential, kinetic term, H_R); c-numbers are dropped.
        const double c_phi = phi0 - d + D * q0;
        const double c_q = q0 + D * phi0;
        const cplx ca = cplx(-c_q, -c_phi) / kSqrt2 + 2.0 * D * std::conj(A) + D * std::conj(delta) + std::conj(v);
        const cplx cad = cplx(c_q, -c_phi) / kSqrt2 - D * delta - v;
        const double diag_real = -D * std::norm(A);
        const double half_D = 0.5 * D;

        if (model_.beta_c != 0.0) {
            apply_cosine(chi, delta, dense_);
        } else {
            dense_.setZero();
        }

        const cplx* c = chi.data();
        const double* sq = sqrt_k_.data();
        for (int k = 0; k < N_; ++k) {
            cplx acc = cplx(diag_real - D * k, -static_cast<double>(k)) * c[k];
            acc += cplx(dense_[k].imag(), -dense_[k].real());
            if (k + 1 < N_) acc += ca * (sq[k + 1] * c[k + 1]);
            if (k >= 1) acc += cad * (sq[k] * c[k - 1]);
            if (k + 2 < N_) acc -= (half_D * sq[k + 1] * sq[k + 2]) * c[k + 2];
            if (k >= 2) acc += (half_D * sq[k] * sq[k - 1]) * c[k - 2];
            out[k] = acc;
        }
    }

    /// (L - <L>) chi, frame independent.
    void noise_direction(const CVector& chi, CVector& out) const {
        const cplx A = mean_annihilation(chi);
        const double s = std::sqrt(2.0 * D_);
        for (int k = 0; k < N_; ++k)
            out[k] = s * ((k + 1 < N_ ? sqrt_k_[k + 1] * chi[k + 1] : cplx{}) - A * chi[k]);
    }

    /// One step of size dt from time t with increment dxi. Returns the norm
    /// before renormalization.
    double step(StateVector& s, double t, double dt, cplx dxi, bool renormalize = true) {
        CVector& chi = s.amps;
        if (chi.size() != N_) throw DimensionMismatch("state dimension differs from integrator N");
        const cplx delta0 = s.frame;
        if (D_ > 0.0 && dxi != cplx{}) noise_direction(chi, g_);
        else g_.setZero();

        // Frame velocity: the current in-frame velocity of <a> plus a pull
        // of the in-frame offset back to zero over a few steps.
        cplx v{};
        drift(chi, delta0, v, t, k1_);
        if (cfg_.moving_frame) {
            const cplx A = mean_annihilation(chi);
            v = in_frame_velocity(chi, k1_, A) + A / (kFrameRelaxSteps * dt);
            add_frame_motion(chi, v, k1_);
        }
        auto frame_at = [&](double h) { return delta0 + v * h; };

        switch (cfg_.scheme) {
            case Scheme::EulerMaruyama:
                chi += dt * k1_;
                break;
            case Scheme::HeunDrift:
                tmp_ = chi + dt * k1_;
                drift(tmp_, frame_at(dt), v, t + dt, k2_);
                chi += (0.5 * dt) * (k1_ + k2_);
                break;
            case Scheme::Rk4Drift:
                tmp_ = chi + (0.5 * dt) * k1_;
                drift(tmp_, frame_at(0.5 * dt), v, t + 0.5 * dt, k2_);
                tmp_ = chi + (0.5 * dt) * k2_;
                drift(tmp_, frame_at(0.5 * dt), v, t + 0.5 * dt, k3_);
                tmp_ = chi + dt * k3_;
                drift(tmp_, frame_at(dt), v, t + dt, k4_);
                chi += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
                break;
        }
        chi.noalias() += dxi * g_;
        s.frame = frame_at(dt);

        const double nrm = chi.norm();
        if (renormalize && nrm > 0.0 && std::isfinite(nrm)) chi /= nrm;
        if (cfg_.moving_frame && std::isfinite(nrm)) {
            const cplx A = mean_annihilation(chi);
            if (std::norm(A) > recenter_quanta()) recenter(s, A);
        }
        return nrm;
    }

    /// Integrate `state` in place over [0, t_end], recording every
    /// sample_stride steps (t = 0 included).
    template <class Noise>
    TrajectoryRecord evolve(StateVector& state, double t_end, Noise& noise) {
        const long long steps = std::llround(t_end / cfg_.dt);
        if (std::abs(steps * cfg_.dt - t_end) > 1e-9 * std::max(1.0, t_end))
            throw InvalidParameter("t_end", "must be an integer number of steps");
        if (state.dim() != N_) throw DimensionMismatch("state dimension differs from integrator N");
        const int tail = default_tail_levels(N_);
        TrajectoryRecord rec;
        rec.times.reserve(steps / cfg_.sample_stride + 1);

        auto record = [&](long long n, double drift_dev) {
            const double t = n * cfg_.dt;
            const double leak = state.tail_weight(tail) / state.amps.squaredNorm();
            if (leak > cfg_.leakage_limit) throw TruncationError(t, leak);
            rec.push(t, quadrature_moments(state), leak, drift_dev);
        };

        state.normalize();
        record(0, 0.0);
        double drift_dev = 0.0;
        for (long long n = 0; n < steps; ++n) {
            const double t = n * cfg_.dt;
            const cplx dxi = noise(cfg_.dt);
            const bool renorm = ((n + 1) % cfg_.renormalize_every) == 0;
            const double nrm = step(state, t, cfg_.dt, dxi, renorm);
            if (!std::isfinite(nrm) || !state.amps.allFinite()) throw NumericalBlowup(n);
            drift_dev = std::max(drift_dev, std::abs(nrm - 1.0));
            if ((n + 1) % cfg_.sample_stride == 0) {
                record(n + 1, drift_dev);
                drift_dev = 0.0;
            }
        }
        state.normalize();
        return rec;
    }

private:
    static constexpr double kFrameRelaxSteps = 4.0;

    double recenter_quanta() const { return cfg_.recenter_quanta > 0.0 ? cfg_.recenter_quanta : N_ / 4.0; }

    /// d/dt <chi|a|chi>/<chi|chi> along the drift f.
    cplx in_frame_velocity(const CVector& chi, const CVector& f, cplx A) const {
        const double nrm2 = chi.squaredNorm();
        cplx fa{}, af{};
        double re_cf = 0.0;
        for (int k = 0; k + 1 < N_; ++k) {
            fa += std::conj(f[k]) * chi[k + 1] * sqrt_k_[k + 1];
            af += std::conj(chi[k]) * f[k + 1] * sqrt_k_[k + 1];
        }
        for (int k = 0; k < N_; ++k) re_cf += (std::conj(chi[k]) * f[k]).real();
        return (fa + af - 2.0 * A * re_cf) / nrm2;
    }

    /// f += v* a chi - v a^dag chi
    void add_frame_motion(const CVector& chi, cplx v, CVector& f) const {
        const cplx vc = std::conj(v);
        for (int k = 0; k < N_; ++k) {
            if (k + 1 < N_) f[k] += vc * (sqrt_k_[k + 1] * chi[k + 1]);
            if (k >= 1) f[k] -= v * (sqrt_k_[k] * chi[k - 1]);
        }
    }

    void apply_cosine(const CVector& chi, cplx delta, CVector& out) {
        // beta_c cos(kappa (Phi + phi0)) = beta_c [cos(k phi0) C - sin(k phi0) S]
        const double phi0 = kSqrt2 * delta.real();
        if (!dense_valid_ || phi0 != dense_phi0_) {
            const double arg = model_.kappa * phi0;
            dense_op_.noalias() = (model_.beta_c * std::cos(arg)) * cos_ - (model_.beta_c * std::sin(arg)) * sin_;
            dense_phi0_ = phi0;
            dense_valid_ = true;
        }
        // Complex vector viewed as a 2 x N real block; the operator is symmetric.
        Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic>> x(reinterpret_cast<const double*>(chi.data()), 2, N_);
        Eigen::Map<Eigen::Matrix<double, 2, Eigen::Dynamic>> y(reinterpret_cast<double*>(out.data()), 2, N_);
        y.noalias() = x * dense_op_;
    }

    DimensionlessModel model_;
    double D_;
    IntegratorConfig cfg_;
    int N_;
    std::vector<double> sqrt_k_;
    RMatrix cos_, sin_, dense_op_;
    double dense_phi0_ = 0.0;
    bool dense_valid_ = false;
    CVector k1_, k2_, k3_, k4_, tmp_, g_, dense_;
};

/// One step of the QSD equation from time t (convenience; builds operators).
inline StateVector step(StateVector s, const DimensionlessModel& m, double D, double t, double dt, cplx dxi,
                        Scheme scheme = Scheme::EulerMaruyama, bool renormalize = true) {
    IntegratorConfig cfg;
    cfg.N = s.dim();
    cfg.dt = dt;
    cfg.scheme = scheme;
    cfg.moving_frame = false;
    QsdIntegrator integ(m, D, cfg);
    integ.step(s, t, dt, dxi, renormalize);
    return s;
}

/// Initial state for a trajectory: |alpha0> directly in a fixed frame, or the
/// vacuum displaced by alpha0 when the frame moves.
inline StateVector initial_state(cplx alpha0, const IntegratorConfig& cfg) {
    if (cfg.moving_frame) {
        StateVector s = fock_state(0, cfg.N);
        s.frame = alpha0;
        return s;
    }
    return coherent(alpha0, cfg.N);
}

template <class Noise>
TrajectoryRecord evolve(cplx alpha0, const DimensionlessModel& m, double D, double t_end,
                        const IntegratorConfig& cfg, Noise& noise) {
    cfg.validate(m.drive_period());
    StateVector s = initial_state(alpha0, cfg);
    QsdIntegrator integ(m, D, cfg);
    return integ.evolve(s, t_end, noise);
}

}  // namespace squidqct
