#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "mzqe/errors.hpp"

namespace mzqe {

using cplx = std::complex<double>;

inline bool is_finite(const cplx& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

/// Reduce an angle to (-pi, pi].
inline double normalize_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(a, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
}

/// Beam-splitter parameters: reflectance R in [0,1] plus the three free
/// phases of the canonical 2x2 unitary.
struct BeamSplitterSpec {
    double reflectance = 0.5;
    double phase_r = 0.0;
    double phase_t = 0.0;
    double phase_global = 0.0;

    static BeamSplitterSpec identity() { return {1.0, 0.0, 0.0, 0.0}; }
    static BeamSplitterSpec symmetric() { return {0.5, 0.0, 0.0, 0.0}; }

    void validate(const std::string& name = "splitter") const {
        if (!(reflectance >= 0.0 && reflectance <= 1.0))
            throw std::invalid_argument(name + ": reflectance must be in [0,1]");
        if (!std::isfinite(phase_r) || !std::isfinite(phase_t) || !std::isfinite(phase_global))
            throw std::invalid_argument(name + ": phases must be finite");
    }
};

/// 2x2 unitary scattering matrix with entries
///   [ r  t' ]
///   [ t  r' ]
struct Unitary2 {
    cplx r{1.0, 0.0};
    cplx t_prime{0.0, 0.0};
    cplx t{0.0, 0.0};
    cplx r_prime{1.0, 0.0};

    static Unitary2 identity() { return {}; }

    /// Entry by (row, col); row/col 0 is the reflected channel.
    cplx at(int row, int col) const {
        if (row == 0) return col == 0 ? r : t_prime;
        return col == 0 ? t : r_prime;
    }

    double reflectance() const { return std::norm(r); }
    double transmittance() const { return std::norm(t); }
};

/// Canonical completion
///   U = e^{i g} [ cos(th) e^{i pr}, -sin(th) e^{-i pt} ]
///               [ sin(th) e^{i pt},  cos(th) e^{-i pr} ]
/// with cos(th) = sqrt(R), sin(th) = sqrt(T); unitary by construction.
inline Unitary2 build_beam_splitter(const BeamSplitterSpec& spec) {
    spec.validate();
    const double cos_th = std::sqrt(spec.reflectance);
    const double sin_th = std::sqrt(1.0 - spec.reflectance);
    const cplx g = std::polar(1.0, spec.phase_global);
    Unitary2 u;
    u.r = g * std::polar(cos_th, spec.phase_r);
    u.t_prime = -g * std::polar(sin_th, -spec.phase_t);
    u.t = g * std::polar(sin_th, spec.phase_t);
    u.r_prime = g * std::polar(cos_th, -spec.phase_r);
    return u;
}

/// Max elementwise |U U^dag - I| <= tol.
inline bool check_unitary(const Unitary2& u, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("check_unitary: tol must be > 0");
    const cplx d00 = u.r * std::conj(u.r) + u.t_prime * std::conj(u.t_prime) - 1.0;
    const cplx d01 = u.r * std::conj(u.t) + u.t_prime * std::conj(u.r_prime);
    const cplx d10 = u.t * std::conj(u.r) + u.r_prime * std::conj(u.t_prime);
    const cplx d11 = u.t * std::conj(u.t) + u.r_prime * std::conj(u.r_prime) - 1.0;
    const double worst = std::max(std::max(std::abs(d00), std::abs(d01)),
                                  std::max(std::abs(d10), std::abs(d11)));
    return worst <= tol;
}

/// Recover a BeamSplitterSpec from a unitary. det U = e^{2i phase_global}
/// fixes the global phase (up to pi, both branches reproduce U); entry args
/// relative to it give the reflection/transmission phases.
inline BeamSplitterSpec decompose(const Unitary2& u) {
    const cplx det = u.r * u.r_prime - u.t * u.t_prime;
    BeamSplitterSpec spec;
    spec.phase_global = 0.5 * std::arg(det);
    const cplx g_inv = std::polar(1.0, -spec.phase_global);
    spec.reflectance = std::min(1.0, std::norm(u.r));
    spec.phase_r = std::abs(u.r) > 1e-15 ? std::arg(u.r * g_inv) : 0.0;
    spec.phase_t = std::abs(u.t) > 1e-15 ? std::arg(u.t * g_inv) : 0.0;
    return spec;
}

/// Phase enclosed by the loop formed by an input and an output splitter:
///   phi = arg(t_in) + arg(t'_out) - arg(r_in) - arg(r_out),
/// normalized to (-pi, pi].
inline double loop_phase(const Unitary2& s_in, const Unitary2& s_out) {
    constexpr double eps = 1e-15;
    if (std::abs(s_in.r) <= eps || std::abs(s_in.t) <= eps ||
        std::abs(s_out.r) <= eps || std::abs(s_out.t_prime) <= eps)
        throw numeric_error("loop_phase: degenerate splitter, enclosed phase undefined");
    return normalize_angle(std::arg(s_in.t) + std::arg(s_out.t_prime) -
                           std::arg(s_in.r) - std::arg(s_out.r));
}

} // namespace mzqe
