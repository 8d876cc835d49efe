#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "mzqe/eraser.hpp"
#include "mzqe/rng.hpp"

namespace mzqe::oracle {

using Mat4 = std::array<std::array<cplx, 4>, 4>;
using Vec4 = std::array<cplx, 4>;

/// Kronecker product of two 2x2 matrices, built index-by-index.
inline Mat4 kron(const Unitary2& a, const Unitary2& b) {
    Mat4 m{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    m[2 * i + k][2 * j + l] = a.at(i, j) * b.at(k, l);
    return m;
}

inline Vec4 kron(const std::array<cplx, 2>& a, const std::array<cplx, 2>& b) {
    return {a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]};
}

inline Vec4 matvec(const Mat4& m, const Vec4& v) {
    Vec4 out{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) out[i] += m[i][j] * v[j];
    return out;
}

/// Reference evolution: kron(S2,S4) . diag(1,1,1,e^{i d_phi}) . (col1 (x) col3),
/// assembled as explicit matrices. Kept deliberately separate from the
/// staged pipeline in eraser.hpp so the two routes can check each other.
inline Vec4 evolve_reference(const EraserSetup& setup) {
    Vec4 v = kron(setup.mzi_column(), setup.det_column());
    v[3] *= std::polar(1.0, setup.delta_phi);
    return matvec(kron(setup.s2, setup.s4), v);
}

inline double max_abs_diff(const Vec4& a, const Vec4& b) {
    double worst = 0.0;
    for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    return worst;
}

/// Seeded random device draw: random reflectances and phases on all four
/// splitters, random interaction phase and input leads. `setup1` forces
/// S4 = identity (first geometry).
inline EraserSetup random_setup(SplitMix64& rng, bool setup1, bool random_leads = false) {
    auto draw_spec = [&rng] {
        BeamSplitterSpec s;
        s.reflectance = rng.next_double();
        s.phase_r = (rng.next_double() - 0.5) * 2.0 * std::numbers::pi;
        s.phase_t = (rng.next_double() - 0.5) * 2.0 * std::numbers::pi;
        s.phase_global = (rng.next_double() - 0.5) * 2.0 * std::numbers::pi;
        return s;
    };
    EraserSetup setup;
    setup.s1 = build_beam_splitter(draw_spec());
    setup.s2 = build_beam_splitter(draw_spec());
    setup.s3 = build_beam_splitter(draw_spec());
    setup.s4 = setup1 ? Unitary2::identity() : build_beam_splitter(draw_spec());
    setup.delta_phi = (rng.next_double() - 0.5) * 4.0 * std::numbers::pi;
    if (random_leads) {
        setup.input_mzi = rng.next_u64() & 1 ? MziLead::beta_bar : MziLead::alpha_bar;
        setup.input_det = rng.next_u64() & 1 ? DetLead::delta_bar : DetLead::gamma_bar;
    }
    return setup;
}

struct SuiteResult {
    std::size_t checked = 0;
    std::size_t failures = 0;
    double worst_error = 0.0;
};

/// Compare evolve() against the reference route over `n` random setups of
/// both geometries; mismatch threshold 1e-12 elementwise.
inline SuiteResult run_suite(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(SplitMix64::mix(seed));
    SuiteResult res;
    for (std::size_t i = 0; i < n; ++i) {
        const EraserSetup setup = random_setup(rng, i % 2 == 0, true);
        const Vec4 expected = evolve_reference(setup);
        const TwoParticleState got = evolve(setup);
        const double err = max_abs_diff(expected, got.amp);
        res.worst_error = std::max(res.worst_error, err);
        if (err > 1e-12) ++res.failures;
        ++res.checked;
    }
    return res;
}

} // namespace mzqe::oracle
