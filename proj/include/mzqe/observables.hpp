#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "mzqe/eraser.hpp"

namespace mzqe {

/// Marginal detection probabilities at the four output leads.
struct SingleProbabilities {
    double p_alpha = 0.0, p_beta = 0.0, p_gamma = 0.0, p_delta = 0.0;
};

/// Joint detection probabilities, slot order (ag, ad, bg, bd) matching
/// TwoParticleState.
struct JointProbabilities {
    std::array<double, 4> p{};

    double at(int mzi_lead, int det_lead) const { return p[2 * mzi_lead + det_lead]; }
};

/// Lead pair (A, B): A indexes alpha/beta, B indexes gamma/delta.
struct LeadPair {
    int mzi = 0; // 0 = alpha, 1 = beta
    int det = 0; // 0 = gamma, 1 = delta

    std::string name() const {
        return std::string(mzi == 0 ? "alpha" : "beta") + "_" +
               (det == 0 ? "gamma" : "delta");
    }
};

inline constexpr std::array<LeadPair, 4> kAllLeadPairs = {
    LeadPair{0, 0}, LeadPair{0, 1}, LeadPair{1, 0}, LeadPair{1, 1}};

/// Bias-point configuration for converting probabilities into currents and
/// correlators. dimensionless_mode drops all unit prefactors.
struct BiasConfig {
    double voltage_volts = 0.0;
    bool dimensionless_mode = true;

    void validate() const {
        if (!(voltage_volts >= 0.0))
            throw std::invalid_argument("bias: voltage must be >= 0");
    }
};

struct DualityReport {
    double visibility = 0.0;
    double distinguishability = 0.0;
    double sum_of_squares = 0.0;
    enum class Source { analytic, estimated } source = Source::analytic;
};

inline SingleProbabilities single_probabilities(const TwoParticleState& state) {
    const auto& a = state.amp;
    SingleProbabilities p;
    p.p_alpha = std::norm(a[0]) + std::norm(a[1]);
    p.p_beta = std::norm(a[2]) + std::norm(a[3]);
    p.p_gamma = std::norm(a[0]) + std::norm(a[2]);
    p.p_delta = std::norm(a[1]) + std::norm(a[3]);
    return p;
}

inline JointProbabilities joint_probabilities(const TwoParticleState& state) {
    JointProbabilities p;
    for (int k = 0; k < 4; ++k) p.p[k] = std::norm(state.amp[k]);
    return p;
}

/// Fringe form of the single-lead probability:
///   P_alpha = R1 R2 + T1 T2 + 2 |nu| sqrt(R1 T1 R2 T2) cos(phi - phi_nu),
/// with the R/T weights read off the setup's actual input column. The
/// output splitter on the detector side does not enter; nu is unchanged by it.
inline double closed_form_p_alpha(const EraserSetup& setup) {
    const auto m = setup.mzi_column();
    const double r1 = std::norm(m[0]);
    const double t1 = std::norm(m[1]);
    const double r2 = std::norm(setup.s2.r);
    const double t2 = std::norm(setup.s2.t_prime);
    const auto nu = detector_overlap_nu(setup);
    double phase_term = 0.0;
    const double weight = 2.0 * nu.magnitude * std::sqrt(r1 * t1 * r2 * t2);
    if (weight > 0.0) {
        // arg(t_in t'_out) - arg(r_in r_out) for the actual input column.
        const double phi = std::arg(m[1]) + std::arg(setup.s2.t_prime) -
                           std::arg(m[0]) - std::arg(setup.s2.r);
        phase_term = weight * std::cos(phi - nu.phase);
    }
    return r1 * r2 + t1 * t2 + phase_term;
}

namespace detail {

/// Accept round-off excursions up to 1e-9 outside [0,1], clamp them back.
inline double checked_probability(double p, const char* what) {
    if (!(p >= -1e-9 && p <= 1.0 + 1e-9))
        throw std::invalid_argument(std::string(what) + ": probability must be in [0,1]");
    return std::clamp(p, 0.0, 1.0);
}

} // namespace detail

/// I_A = (e^2/h) P_A V, or P_A in dimensionless mode.
inline double current(double p, const BiasConfig& bias) {
    p = detail::checked_probability(p, "current");
    bias.validate();
    if (bias.dimensionless_mode) return p;
    return kConductanceQuantumS * p * bias.voltage_volts;
}

/// Zero-frequency cross correlation S_AB = (2e^2/h) eV (P_AB - P_A P_B),
/// or the bare probability covariance in dimensionless mode.
inline double cross_correlation(double p_a, double p_b, double p_ab,
                                const BiasConfig& bias) {
    p_a = detail::checked_probability(p_a, "cross_correlation");
    p_b = detail::checked_probability(p_b, "cross_correlation");
    p_ab = detail::checked_probability(p_ab, "cross_correlation");
    bias.validate();
    const double cov = p_ab - p_a * p_b;
    if (bias.dimensionless_mode) return cov;
    return 2.0 * kConductanceQuantumS * kElementaryChargeC * bias.voltage_volts * cov;
}

namespace detail {

/// Weights of the two indistinguishable joint-detection amplitudes for a
/// lead pair: w_u |u_B|^2 for the reflected path, w_v |v_B|^2 for the
/// transmitted one.
struct PathWeights {
    double wu = 0.0;
    double wv = 0.0;
};

inline PathWeights path_weights(const EraserSetup& setup, const LeadPair& leads) {
    const auto m = setup.mzi_column();
    const auto uv = uv_coefficients(setup);
    PathWeights w;
    w.wu = std::norm(m[0]) * std::norm(setup.s2.at(leads.mzi, 0)) *
           std::norm(uv.u(leads.det));
    w.wv = std::norm(m[1]) * std::norm(setup.s2.at(leads.mzi, 1)) *
           std::norm(uv.v(leads.det));
    return w;
}

} // namespace detail

/// V = 2 sqrt(wu wv) / (wu + wv), the contrast of the joint fringe at the
/// given lead pair.
inline double visibility(const EraserSetup& setup, const LeadPair& leads) {
    const auto w = detail::path_weights(setup, leads);
    const double denom = w.wu + w.wv;
    if (!(denom > 0.0))
        throw numeric_error("visibility: both path weights vanish at leads " + leads.name());
    return 2.0 * std::sqrt(w.wu * w.wv) / denom;
}

/// D = |wu - wv| / (wu + wv), the normalized path imbalance.
inline double distinguishability(const EraserSetup& setup, const LeadPair& leads) {
    const auto w = detail::path_weights(setup, leads);
    const double denom = w.wu + w.wv;
    if (!(denom > 0.0))
        throw numeric_error("distinguishability: both path weights vanish at leads " +
                            leads.name());
    return std::abs(w.wu - w.wv) / denom;
}

inline DualityReport duality_check(const EraserSetup& setup, const LeadPair& leads) {
    DualityReport rep;
    rep.visibility = visibility(setup, leads);
    rep.distinguishability = distinguishability(setup, leads);
    rep.sum_of_squares =
        rep.visibility * rep.visibility + rep.distinguishability * rep.distinguishability;
    rep.source = DualityReport::Source::analytic;
    return rep;
}

} // namespace mzqe
