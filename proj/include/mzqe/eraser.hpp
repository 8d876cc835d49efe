#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "mzqe/unitary.hpp"

namespace mzqe {

/// h/e in SI units (weber).
inline constexpr double kFluxQuantumWb = 4.135667696e-15;
/// e^2/h in siemens.
inline constexpr double kConductanceQuantumS = 3.8740458730e-5;
/// Elementary charge in coulomb.
inline constexpr double kElementaryChargeC = 1.602176634e-19;

enum class MziLead { alpha_bar, beta_bar };
enum class DetLead { gamma_bar, delta_bar };

/// Magnetic-field geometry of the interaction region; the trajectory shift
/// encloses the area delta_area at field H.
struct FieldGeometry {
    double field_tesla = 0.0;
    double delta_area_m2 = 0.0;
    double flux_quantum_wb = kFluxQuantumWb;

    void validate() const {
        if (!(field_tesla >= 0.0) || !(delta_area_m2 >= 0.0))
            throw std::invalid_argument("geometry: field and area must be >= 0");
        if (!(flux_quantum_wb > 0.0))
            throw std::invalid_argument("geometry: flux quantum must be > 0");
    }
};

/// Interaction phase 2*pi*H*dA/Phi0, not range-reduced.
inline double delta_phi_from_geometry(const FieldGeometry& g) {
    g.validate();
    return 2.0 * std::numbers::pi * g.field_tesla * g.delta_area_m2 / g.flux_quantum_wb;
}

/// The full two-interferometer device. Setup 1 is the S4 = identity case.
struct EraserSetup {
    Unitary2 s1, s2, s3, s4;
    double delta_phi = 0.0;
    MziLead input_mzi = MziLead::alpha_bar;
    DetLead input_det = DetLead::gamma_bar;

    void validate() const {
        constexpr double tol = 1e-12;
        if (!check_unitary(s1, tol) || !check_unitary(s2, tol) ||
            !check_unitary(s3, tol) || !check_unitary(s4, tol))
            throw std::invalid_argument("setup: all scattering matrices must be unitary");
        if (!std::isfinite(delta_phi))
            throw std::invalid_argument("setup: delta_phi must be finite");
    }

    /// Injected-column amplitudes on the interferometer side, (b_alpha, b_beta).
    std::array<cplx, 2> mzi_column() const {
        const int c = input_mzi == MziLead::alpha_bar ? 0 : 1;
        return {s1.at(0, c), s1.at(1, c)};
    }
    /// Injected-column amplitudes on the detector side, (c_gamma, c_delta).
    std::array<cplx, 2> det_column() const {
        const int c = input_det == DetLead::gamma_bar ? 0 : 1;
        return {s3.at(0, c), s3.at(1, c)};
    }
};

/// Two-particle amplitudes over the product basis, slot order
/// (alpha,gamma)=0, (alpha,delta)=1, (beta,gamma)=2, (beta,delta)=3.
struct TwoParticleState {
    std::array<cplx, 4> amp{};

    double norm_sq() const {
        return std::norm(amp[0]) + std::norm(amp[1]) + std::norm(amp[2]) + std::norm(amp[3]);
    }
};

/// Overlap of the two conditional detector states; |nu| is the residual
/// coherence of the interferometer electron.
struct DetectorOverlap {
    cplx nu;
    double magnitude = 0.0;
    double phase = 0.0;
};

/// Product state after the input splitters: col(S1) (x) col(S3).
inline TwoParticleState initial_state(const EraserSetup& setup) {
    const auto m = setup.mzi_column();
    const auto d = setup.det_column();
    TwoParticleState s;
    s.amp = {m[0] * d[0], m[0] * d[1], m[1] * d[0], m[1] * d[1]};
    return s;
}

/// Coulomb phase kick on the doubly-transmitted component only.
inline TwoParticleState apply_interaction(TwoParticleState state, double delta_phi) {
    state.amp[3] *= std::polar(1.0, delta_phi);
    return state;
}

/// Output splitters: S2 acts on the interferometer index, S4 on the
/// detector index (kron(S2, S4) applied without forming the 4x4 matrix).
inline TwoParticleState apply_output_stage(const TwoParticleState& state,
                                           const Unitary2& s2, const Unitary2& s4) {
    const auto& a = state.amp;
    // S2 mixes slot pairs (0,2) and (1,3).
    std::array<cplx, 4> mid = {
        s2.at(0, 0) * a[0] + s2.at(0, 1) * a[2],
        s2.at(0, 0) * a[1] + s2.at(0, 1) * a[3],
        s2.at(1, 0) * a[0] + s2.at(1, 1) * a[2],
        s2.at(1, 0) * a[1] + s2.at(1, 1) * a[3],
    };
    // S4 mixes slot pairs (0,1) and (2,3).
    TwoParticleState out;
    out.amp = {
        s4.at(0, 0) * mid[0] + s4.at(0, 1) * mid[1],
        s4.at(1, 0) * mid[0] + s4.at(1, 1) * mid[1],
        s4.at(0, 0) * mid[2] + s4.at(0, 1) * mid[3],
        s4.at(1, 0) * mid[2] + s4.at(1, 1) * mid[3],
    };
    return out;
}

/// Full pipeline: inject, interact, scatter out.
inline TwoParticleState evolve(const EraserSetup& setup) {
    return apply_output_stage(apply_interaction(initial_state(setup), setup.delta_phi),
                              setup.s2, setup.s4);
}

/// nu = <0| chi_t chi_r^dag |0> = R3 + T3 e^{-i d_phi} for the gamma-bar
/// input column; the general column version is overlap of the two
/// conditional detector states before the output splitter.
inline DetectorOverlap detector_overlap_nu(const Unitary2& s3, double delta_phi) {
    const double r3 = std::norm(s3.r);
    const double t3 = std::norm(s3.t);
    DetectorOverlap out;
    out.nu = r3 + t3 * std::polar(1.0, -delta_phi);
    out.magnitude = std::abs(out.nu);
    out.phase = std::arg(out.nu);
    return out;
}

/// Same overlap evaluated from the setup's actual detector input column.
inline DetectorOverlap detector_overlap_nu(const EraserSetup& setup) {
    const auto d = setup.det_column();
    DetectorOverlap out;
    out.nu = std::norm(d[0]) + std::norm(d[1]) * std::polar(1.0, -setup.delta_phi);
    out.magnitude = std::abs(out.nu);
    out.phase = std::arg(out.nu);
    return out;
}

/// Conditional detector-lead amplitudes: u_B for the reflected path,
/// v_B for the transmitted path (which carries e^{i d_phi}).
struct UvCoefficients {
    cplx u_gamma, v_gamma, u_delta, v_delta;

    cplx u(int det_lead) const { return det_lead == 0 ? u_gamma : u_delta; }
    cplx v(int det_lead) const { return det_lead == 0 ? v_gamma : v_delta; }
};

inline UvCoefficients uv_coefficients(const Unitary2& s3, const Unitary2& s4,
                                      double delta_phi) {
    const cplx phase = std::polar(1.0, delta_phi);
    UvCoefficients c;
    c.u_gamma = s3.r * s4.r + s3.t * s4.t_prime;
    c.v_gamma = s3.r * s4.r + s3.t * s4.t_prime * phase;
    c.u_delta = s3.r * s4.t + s3.t * s4.r_prime;
    c.v_delta = s3.r * s4.t + s3.t * s4.r_prime * phase;
    return c;
}

/// u/v built from the setup's detector input column (handles delta-bar input).
inline UvCoefficients uv_coefficients(const EraserSetup& setup) {
    const auto d = setup.det_column();
    const cplx phase = std::polar(1.0, setup.delta_phi);
    UvCoefficients c;
    c.u_gamma = d[0] * setup.s4.at(0, 0) + d[1] * setup.s4.at(0, 1);
    c.v_gamma = d[0] * setup.s4.at(0, 0) + d[1] * setup.s4.at(0, 1) * phase;
    c.u_delta = d[0] * setup.s4.at(1, 0) + d[1] * setup.s4.at(1, 1);
    c.v_delta = d[0] * setup.s4.at(1, 0) + d[1] * setup.s4.at(1, 1) * phase;
    return c;
}

} // namespace mzqe
