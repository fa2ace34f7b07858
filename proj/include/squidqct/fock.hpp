#pragma once

// Truncated Fock-basis representation of the flux/charge quadratures.
//
// Convention: Phi = (a + a^dag)/sqrt2, Q = (a - a^dag)/(i sqrt2), so
// [Phi, Q] = i and L = sqrt(D) (Phi + i Q) = sqrt(2D) a.
//
// A StateVector may carry a moving frame delta: the physical state is
// D(delta)|chi>, where chi = amps is stored in the Fock basis and D is the
// displacement operator. Then <a> = delta + <chi|a|chi>.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <vector>

#include "squidqct/circuit.hpp"
#include "squidqct/error.hpp"

namespace squidqct {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr cplx kI{0.0, 1.0};
inline const double kSqrt2 = std::sqrt(2.0);

/// Number of top levels inspected for leakage: max(4, N/16).
inline int default_tail_levels(int N) { return std::max(4, N / 16); }

struct StateVector {
    CVector amps;
    cplx frame{0.0, 0.0};

    StateVector() = default;
    explicit StateVector(CVector a, cplx f = {}) : amps(std::move(a)), frame(f) {}

    int dim() const { return static_cast<int>(amps.size()); }
    double norm() const { return amps.norm(); }

    /// Scales to unit norm; returns the norm before scaling.
    double normalize() {
        const double n = amps.norm();
        if (n > 0.0) amps /= n;
        return n;
    }

    double tail_weight(int k) const {
        k = std::clamp(k, 0, dim());
        return amps.tail(k).squaredNorm();
    }
    double tail_weight() const { return tail_weight(default_tail_levels(dim())); }
};

struct OperatorMatrix {
    CMatrix entries;
    bool hermitian = false;

    int dim() const { return static_cast<int>(entries.rows()); }

    bool hermiticity_holds(double rel_tol = 1e-12) const {
        const double scale = entries.cwiseAbs().maxCoeff();
        const double dev = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
        return dev <= rel_tol * std::max(scale, 1e-300);
    }
};

// -----------------------------------------------------------------------------
// Ladder algebra
// -----------------------------------------------------------------------------

namespace detail {
inline void require_dim(int N) {
    if (N < 2) throw InvalidParameter("N", "truncation must be >= 2");
}
}  // namespace detail

inline CMatrix annihilation(int N) {
    detail::require_dim(N);
    CMatrix a = CMatrix::Zero(N, N);
    for (int k = 1; k < N; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return a;
}

inline OperatorMatrix build_phi(int N) {
    const CMatrix a = annihilation(N);
    return {(a + a.adjoint()) / kSqrt2, true};
}

inline OperatorMatrix build_q(int N) {
    const CMatrix a = annihilation(N);
    return {(a - a.adjoint()) / (kI * kSqrt2), true};
}

inline OperatorMatrix build_number(int N) {
    detail::require_dim(N);
    CMatrix n = CMatrix::Zero(N, N);
    for (int k = 0; k < N; ++k) n(k, k) = static_cast<double>(k);
    return {n, true};
}

/// out = a * in
inline void apply_a(const CVector& in, CVector& out) {
    const Eigen::Index N = in.size();
    out.resize(N);
    for (Eigen::Index k = 0; k + 1 < N; ++k) out[k] = std::sqrt(static_cast<double>(k + 1)) * in[k + 1];
    if (N > 0) out[N - 1] = 0.0;
}

/// out = a^dag * in
inline void apply_adag(const CVector& in, CVector& out) {
    const Eigen::Index N = in.size();
    out.resize(N);
    if (N > 0) out[0] = 0.0;
    for (Eigen::Index k = 1; k < N; ++k) out[k] = std::sqrt(static_cast<double>(k)) * in[k - 1];
}

// -----------------------------------------------------------------------------
// Spectral functions of Phi
// -----------------------------------------------------------------------------

/// Eigendecomposition of the truncated (real symmetric) Phi matrix.
struct PhiSpectrum {
    Eigen::VectorXd values;
    RMatrix vectors;

    explicit PhiSpectrum(int N) {
        detail::require_dim(N);
        RMatrix phi = RMatrix::Zero(N, N);
        for (int k = 1; k < N; ++k) phi(k - 1, k) = phi(k, k - 1) = std::sqrt(k / 2.0);
        Eigen::SelfAdjointEigenSolver<RMatrix> solver(phi);
        values = solver.eigenvalues();
        vectors = solver.eigenvectors();
    }

    /// f(Phi) = V diag(f(lambda)) V^T
    template <class F>
    RMatrix apply(F&& f) const {
        const Eigen::VectorXd fv = values.unaryExpr(std::forward<F>(f));
        return vectors * fv.asDiagonal() * vectors.transpose();
    }
};

/// Shared, read-only spectrum for dimension N; computed once per process.
inline std::shared_ptr<const PhiSpectrum> phi_spectrum(int N) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const PhiSpectrum>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[N];
    if (!slot) slot = std::make_shared<const PhiSpectrum>(N);
    return slot;
}

inline RMatrix cos_kappa_phi(int N, double kappa) {
    return phi_spectrum(N)->apply([kappa](double x) { return std::cos(kappa * x); });
}

inline RMatrix sin_kappa_phi(int N, double kappa) {
    return phi_spectrum(N)->apply([kappa](double x) { return std::sin(kappa * x); });
}

// -----------------------------------------------------------------------------
// Model operators
// -----------------------------------------------------------------------------

/// H_D(t) = (n + 1/2) - Phi_ex(t) Phi + Phi_ex(t)^2/2 + beta_c cos(kappa Phi).
/// The quadratic part uses the number operator, so beta_c = 0 with no drive
/// gives diag(n + 1/2) exactly.
inline OperatorMatrix build_hamiltonian(const DimensionlessModel& m, double t, int N) {
    detail::require_dim(N);
    const double d = drive(m, t);
    CMatrix H = CMatrix::Zero(N, N);
    for (int k = 0; k < N; ++k) H(k, k) = k + 0.5 + 0.5 * d * d;
    H -= d * build_phi(N).entries;
    if (m.beta_c != 0.0) H += m.beta_c * cos_kappa_phi(N, m.kappa).cast<cplx>();
    return {H, true};
}

namespace detail {
inline void require_coupling(double D) {
    if (!(D >= 0.0) || !std::isfinite(D)) throw InvalidParameter("D", "coupling must be finite and >= 0");
}
}  // namespace detail

/// H_R = D/2 (Phi Q + Q Phi) = -i D/2 (a^2 - a^dag^2).
inline OperatorMatrix build_damping(double D, int N) {
    detail::require_coupling(D);
    const CMatrix phi = build_phi(N).entries;
    const CMatrix q = build_q(N).entries;
    return {0.5 * D * (phi * q + q * phi), true};
}

/// L = sqrt(D) (Phi + i Q)
inline OperatorMatrix build_lindblad(double D, int N) {
    detail::require_coupling(D);
    return {std::sqrt(D) * (build_phi(N).entries + kI * build_q(N).entries), false};
}

// -----------------------------------------------------------------------------
// States
// -----------------------------------------------------------------------------

inline StateVector fock_state(int n, int N) {
    detail::require_dim(N);
    if (n < 0 || n >= N) throw InvalidParameter("n", "Fock index outside the truncated basis");
    CVector v = CVector::Zero(N);
    v[n] = 1.0;
    return StateVector(v);
}

/// Coherent state |alpha>, renormalized on the truncated basis.
inline StateVector coherent(cplx alpha, int N) {
    detail::require_dim(N);
    if (std::norm(alpha) > N / 2.0)
        throw InvalidParameter("alpha", "|alpha|^2 exceeds N/2; truncation clearly inadequate");
    CVector v(N);
    v[0] = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < N; ++n) v[n] = v[n - 1] * alpha / std::sqrt(static_cast<double>(n));
    StateVector s(v);
    s.normalize();
    if (const double w = s.tail_weight(); w > 1e-8) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", w);
        warn("coherent state tail weight " + std::string(buf) + " exceeds 1e-8 at N=" + std::to_string(N));
    }
    return s;
}

// -----------------------------------------------------------------------------
// Expectations
// -----------------------------------------------------------------------------

/// <chi|A|chi> in the state's own basis (the frame is not applied).
inline cplx expectation(const StateVector& s, const OperatorMatrix& A) {
    if (A.dim() != s.dim()) throw DimensionMismatch("operator and state dimensions differ");
    return s.amps.dot(A.entries * s.amps);
}

inline double variance(const StateVector& s, const OperatorMatrix& A) {
    if (A.dim() != s.dim()) throw DimensionMismatch("operator and state dimensions differ");
    const CVector Av = A.entries * s.amps;
    const double mean = s.amps.dot(Av).real();
    return std::max(0.0, Av.squaredNorm() - mean * mean);
}

/// First and second moments of the quadratures, frame included.
struct QuadratureMoments {
    double mean_phi = 0.0;
    double mean_q = 0.0;
    double var_phi = 0.0;
    double var_q = 0.0;
    cplx mean_a{};  // <chi|a|chi>, frame excluded

    double uncertainty() const { return std::sqrt(var_phi * var_q); }
};

/// Moments from <a>, <a^2>, <a^dag a>, using Phi^2 = (a^2 + a^dag^2 + 2n + 1)/2
/// so that the bound var_phi var_q >= 1/4 holds for any truncated amplitude vector.
inline QuadratureMoments quadrature_moments(const StateVector& s) {
    const auto& c = s.amps;
    const Eigen::Index N = c.size();
    const double nrm2 = c.squaredNorm();
    cplx ea{}, ea2{};
    double en = 0.0;
    for (Eigen::Index k = 0; k < N; ++k) {
        en += k * std::norm(c[k]);
        if (k + 1 < N) ea += std::conj(c[k]) * c[k + 1] * std::sqrt(static_cast<double>(k + 1));
        if (k + 2 < N)
            ea2 += std::conj(c[k]) * c[k + 2] * std::sqrt(static_cast<double>((k + 1) * (k + 2)));
    }
    ea /= nrm2;
    ea2 /= nrm2;
    en /= nrm2;
    QuadratureMoments m;
    m.mean_a = ea;
    // Variances are frame invariant.
    const double var_a = en - std::norm(ea);          // <n> - |<a>|^2
    const cplx cov = ea2 - ea * ea;                    // <a^2> - <a>^2
    m.var_phi = std::max(0.0, var_a + 0.5 + cov.real());
    m.var_q = std::max(0.0, var_a + 0.5 - cov.real());
    const cplx total = ea + s.frame;
    m.mean_phi = kSqrt2 * total.real();
    m.mean_q = kSqrt2 * total.imag();
    return m;
}

// -----------------------------------------------------------------------------
// Displacements
// -----------------------------------------------------------------------------

/// v <- exp(beta a^dag - beta* a) v on the truncated basis (Taylor series,
/// sub-stepped so each exponent has norm <= 1/2).
inline void apply_displacement(CVector& v, cplx beta) {
    const Eigen::Index N = v.size();
    if (beta == cplx{} || N == 0) return;
    const double gen_norm = 2.0 * std::abs(beta) * std::sqrt(static_cast<double>(N));
    const int pieces = std::max(1, static_cast<int>(std::ceil(gen_norm / 0.5)));
    const cplx b = beta / static_cast<double>(pieces);
    CVector term(N), up(N), down(N), acc(N);
    for (int p = 0; p < pieces; ++p) {
        acc = v;
        term = v;
        for (int k = 1; k < 40; ++k) {
            apply_adag(term, up);
            apply_a(term, down);
            term = (b * up - std::conj(b) * down) / static_cast<double>(k);
            acc += term;
            if (term.squaredNorm() < 1e-34 * acc.squaredNorm()) break;
        }
        v = acc;
    }
}

/// Shifts the frame by beta while leaving the physical state unchanged
/// (up to a global phase): chi <- D(-beta) chi, delta <- delta + beta.
inline void recenter(StateVector& s, cplx beta) {
    apply_displacement(s.amps, -beta);
    s.frame += beta;
}

// -----------------------------------------------------------------------------
// Binary checkpoint: u64 dimension, f64 frame (re, im), then interleaved
// re/im amplitudes; all little-endian.
// -----------------------------------------------------------------------------

namespace detail {
template <class T>
void put_le(std::ostream& os, T value) {
    auto bits = std::bit_cast<std::uint64_t>(value);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    os.write(buf, 8);
}
template <class T>
T get_le(std::istream& is) {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8)) throw Error("truncated state checkpoint");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}
}  // namespace detail

inline void write_state(std::ostream& os, const StateVector& s) {
    detail::put_le(os, static_cast<std::uint64_t>(s.dim()));
    detail::put_le(os, s.frame.real());
    detail::put_le(os, s.frame.imag());
    for (Eigen::Index k = 0; k < s.amps.size(); ++k) {
        detail::put_le(os, s.amps[k].real());
        detail::put_le(os, s.amps[k].imag());
    }
}

inline StateVector read_state(std::istream& is) {
    const auto N = detail::get_le<std::uint64_t>(is);
    if (N < 1 || N > (1u << 20)) throw Error("state checkpoint has implausible dimension");
    StateVector s;
    const double fr = detail::get_le<double>(is);
    const double fi = detail::get_le<double>(is);
    s.frame = {fr, fi};
    s.amps.resize(static_cast<Eigen::Index>(N));
    for (Eigen::Index k = 0; k < s.amps.size(); ++k) {
        const double re = detail::get_le<double>(is);
        const double im = detail::get_le<double>(is);
        s.amps[k] = {re, im};
    }
    return s;
}

}  // namespace squidqct
