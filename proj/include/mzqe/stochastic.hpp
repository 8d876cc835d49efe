#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>
#include <vector>

#include "mzqe/observables.hpp"
#include "mzqe/rng.hpp"

namespace mzqe {

/// Shot tallies for the four joint outcomes, slot order (ag, ad, bg, bd).
struct CoincidenceCounts {
    std::array<std::uint64_t, 4> n{};
    std::uint64_t total = 0;
};

/// Draw `shots` joint outcomes from the evolved state's distribution.
/// Bit-exact for fixed (setup, shots, seed).
inline CoincidenceCounts sample_shots(const EraserSetup& setup, std::uint64_t shots,
                                      std::uint64_t seed) {
    const JointProbabilities p = joint_probabilities(evolve(setup));
    const std::array<double, 3> cum = {p.p[0], p.p[0] + p.p[1], p.p[0] + p.p[1] + p.p[2]};
    SplitMix64 rng(seed);
    CoincidenceCounts counts;
    counts.total = shots;
    for (std::uint64_t i = 0; i < shots; ++i) {
        const double x = rng.next_double();
        int k = 3;
        if (x < cum[0]) k = 0;
        else if (x < cum[1]) k = 1;
        else if (x < cum[2]) k = 2;
        ++counts.n[k];
    }
    return counts;
}

/// Frequency estimates with per-cell binomial standard errors.
struct ProbabilityEstimate {
    SingleProbabilities singles;
    JointProbabilities joints;
    std::array<double, 4> joint_stderr{};
    std::array<double, 4> single_stderr{}; // alpha, beta, gamma, delta
};

inline ProbabilityEstimate estimate_probabilities(const CoincidenceCounts& counts) {
    if (counts.total == 0) throw numeric_error("estimate_probabilities: empty counts");
    const double n = static_cast<double>(counts.total);
    ProbabilityEstimate est;
    for (int k = 0; k < 4; ++k) {
        const double p = static_cast<double>(counts.n[k]) / n;
        est.joints.p[k] = p;
        est.joint_stderr[k] = std::sqrt(p * (1.0 - p) / n);
    }
    est.singles.p_alpha = est.joints.p[0] + est.joints.p[1];
    est.singles.p_beta = est.joints.p[2] + est.joints.p[3];
    est.singles.p_gamma = est.joints.p[0] + est.joints.p[2];
    est.singles.p_delta = est.joints.p[1] + est.joints.p[3];
    const std::array<double, 4> marg = {est.singles.p_alpha, est.singles.p_beta,
                                        est.singles.p_gamma, est.singles.p_delta};
    for (int k = 0; k < 4; ++k)
        est.single_stderr[k] = std::sqrt(marg[k] * (1.0 - marg[k]) / n);
    return est;
}

struct ValueWithError {
    double value = 0.0;
    double std_error = 0.0;
};

/// Plug-in estimate of the cross correlation for a lead pair, with its
/// first-order (delta-method) standard error from the multinomial
/// covariance of the four cell frequencies.
inline ValueWithError estimate_cross_correlation(const CoincidenceCounts& counts,
                                                 const LeadPair& leads,
                                                 const BiasConfig& bias) {
    const ProbabilityEstimate est = estimate_probabilities(counts);
    const double p_a = leads.mzi == 0 ? est.singles.p_alpha : est.singles.p_beta;
    const double p_b = leads.det == 0 ? est.singles.p_gamma : est.singles.p_delta;
    const double p_ab = est.joints.at(leads.mzi, leads.det);
    ValueWithError out;
    out.value = cross_correlation(p_a, p_b, p_ab, bias);
    // Gradient of (p_ab - p_a p_b) w.r.t. the four cell frequencies.
    std::array<double, 4> grad{};
    for (int k = 0; k < 4; ++k) {
        const int m = k / 2, d = k % 2;
        double g = 0.0;
        if (m == leads.mzi && d == leads.det) g += 1.0;
        if (m == leads.mzi) g -= p_b;
        if (d == leads.det) g -= p_a;
        grad[k] = g;
    }
    double quad = 0.0, lin = 0.0;
    for (int k = 0; k < 4; ++k) {
        quad += grad[k] * grad[k] * est.joints.p[k];
        lin += grad[k] * est.joints.p[k];
    }
    const double var = std::max(0.0, quad - lin * lin) / static_cast<double>(counts.total);
    double scale = 1.0;
    if (!bias.dimensionless_mode)
        scale = 2.0 * kConductanceQuantumS * kElementaryChargeC * bias.voltage_volts;
    out.std_error = scale * std::sqrt(var);
    return out;
}

enum class SweepParameter { phi, phi_d, delta_phi, r1, r2, r3, r4, field };

inline std::string to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::phi: return "phi";
        case SweepParameter::phi_d: return "phi_d";
        case SweepParameter::delta_phi: return "delta_phi";
        case SweepParameter::r1: return "R1";
        case SweepParameter::r2: return "R2";
        case SweepParameter::r3: return "R3";
        case SweepParameter::r4: return "R4";
        case SweepParameter::field: return "H";
    }
    return "?";
}

/// Rebuild one splitter of the setup with a modified spec field.
namespace detail {

template <typename Fn>
inline Unitary2 with_spec(const Unitary2& u, Fn&& modify) {
    BeamSplitterSpec spec = decompose(u);
    modify(spec);
    return build_beam_splitter(spec);
}

} // namespace detail

/// Return `setup` with the swept parameter forced to `value`. Phase
/// parameters are absolute: the relevant transmission phase is shifted so
/// that the enclosed loop phase equals `value` exactly.
inline EraserSetup apply_sweep_parameter(const EraserSetup& setup, SweepParameter param,
                                         double value,
                                         const std::optional<FieldGeometry>& geometry = {}) {
    EraserSetup out = setup;
    switch (param) {
        case SweepParameter::phi: {
            const double shift = value - loop_phase(setup.s1, setup.s2);
            out.s1 = detail::with_spec(setup.s1, [&](BeamSplitterSpec& s) { s.phase_t += shift; });
            break;
        }
        case SweepParameter::phi_d: {
            const double shift = value - loop_phase(setup.s3, setup.s4);
            out.s3 = detail::with_spec(setup.s3, [&](BeamSplitterSpec& s) { s.phase_t += shift; });
            break;
        }
        case SweepParameter::delta_phi:
            out.delta_phi = value;
            break;
        case SweepParameter::r1:
            out.s1 = detail::with_spec(setup.s1, [&](BeamSplitterSpec& s) { s.reflectance = value; });
            break;
        case SweepParameter::r2:
            out.s2 = detail::with_spec(setup.s2, [&](BeamSplitterSpec& s) { s.reflectance = value; });
            break;
        case SweepParameter::r3:
            out.s3 = detail::with_spec(setup.s3, [&](BeamSplitterSpec& s) { s.reflectance = value; });
            break;
        case SweepParameter::r4:
            out.s4 = detail::with_spec(setup.s4, [&](BeamSplitterSpec& s) { s.reflectance = value; });
            break;
        case SweepParameter::field: {
            if (!geometry)
                throw std::invalid_argument("sweep over H requires a field geometry");
            FieldGeometry g = *geometry;
            g.field_tesla = value;
            out.delta_phi = delta_phi_from_geometry(g);
            break;
        }
    }
    return out;
}

struct SweepSpec {
    SweepParameter parameter = SweepParameter::phi;
    std::vector<double> grid;
    EraserSetup base;
    std::uint64_t shots = 0; // 0 = analytic only
    std::uint64_t seed = 0;
    std::optional<FieldGeometry> geometry;

    void validate() const {
        if (grid.empty()) throw std::invalid_argument("sweep: grid must be non-empty");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1]))
                throw std::invalid_argument("sweep: grid must be strictly increasing");
        base.validate();
    }
};

struct SweepRow {
    double value = 0.0;
    EraserSetup setup; // base with the parameter applied
    SingleProbabilities singles;
    JointProbabilities joints;
    std::array<double, 4> cross{}; // analytic, slot order (ag, ad, bg, bd)
    std::optional<CoincidenceCounts> counts;
    std::optional<ProbabilityEstimate> estimate;
    std::array<ValueWithError, 4> cross_estimate{}; // valid iff counts present
};

/// One row per grid point, in grid order. Points are evaluated on up to
/// `max_threads` workers; each sampled point uses the stream
/// SplitMix64::stream(seed, point index).
inline std::vector<SweepRow> sweep(const SweepSpec& spec, const BiasConfig& bias = {},
                                   unsigned max_threads = 1) {
    spec.validate();
    std::vector<SweepRow> rows(spec.grid.size());
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto run_point = [&](std::size_t i) {
        SweepRow& row = rows[i];
        row.value = spec.grid[i];
        row.setup = apply_sweep_parameter(spec.base, spec.parameter, spec.grid[i],
                                          spec.geometry);
        const TwoParticleState state = evolve(row.setup);
        row.singles = single_probabilities(state);
        row.joints = joint_probabilities(state);
        const std::array<double, 4> marg_m = {row.singles.p_alpha, row.singles.p_beta};
        const std::array<double, 4> marg_d = {row.singles.p_gamma, row.singles.p_delta};
        for (int k = 0; k < 4; ++k)
            row.cross[k] = cross_correlation(marg_m[k / 2], marg_d[k % 2], row.joints.p[k], bias);
        if (spec.shots > 0) {
            SplitMix64 stream = SplitMix64::stream(spec.seed, i);
            row.counts = sample_shots(row.setup, spec.shots, stream.next_u64());
            row.estimate = estimate_probabilities(*row.counts);
            for (int k = 0; k < 4; ++k)
                row.cross_estimate[k] =
                    estimate_cross_correlation(*row.counts, LeadPair{k / 2, k % 2}, bias);
        }
    };

    auto run_range = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < rows.size(); i += stride) {
            try {
                run_point(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::make_exception_ptr(
                        numeric_error("sweep row " + std::to_string(i) + " (" +
                                      to_string(spec.parameter) + "=" +
                                      std::to_string(spec.grid[i]) + ") failed"));
            }
        }
    };

    const unsigned workers =
        std::min<unsigned>(std::max(1u, max_threads), static_cast<unsigned>(rows.size()));
    if (workers <= 1) {
        run_range(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(run_range, w, workers);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return rows;
}

/// Cosine fit a + b cos(x - c), b >= 0; visibility = b / a.
struct FringeFit {
    double mean = 0.0;
    double amplitude = 0.0;
    double phase_offset = 0.0;
    double visibility = 0.0;
};

/// Linear least squares on the regressors (1, cos x, sin x) via the 3x3
/// normal equations, then amplitude/phase recovery. Needs >= 3 distinct
/// points spanning at least half a period.
inline FringeFit fit_fringe(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_fringe: size mismatch");
    std::vector<double> distinct = xs;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3)
        throw std::invalid_argument("fit_fringe: need >= 3 distinct grid points");
    if (distinct.back() - distinct.front() < std::numbers::pi - 1e-9)
        throw std::invalid_argument("fit_fringe: grid must span at least half a period");

    double m[3][3] = {};
    double rhs[3] = {};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double reg[3] = {1.0, std::cos(xs[i]), std::sin(xs[i])};
        for (int a = 0; a < 3; ++a) {
            rhs[a] += reg[a] * ys[i];
            for (int b = 0; b < 3; ++b) m[a][b] += reg[a] * reg[b];
        }
    }
    // Gaussian elimination with partial pivoting; pivot ratio doubles as a
    // condition diagnostic.
    int perm[3] = {0, 1, 2};
    double max_pivot = 0.0, min_pivot = std::numeric_limits<double>::infinity();
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int rr = col + 1; rr < 3; ++rr)
            if (std::abs(m[perm[rr]][col]) > std::abs(m[perm[best]][col])) best = rr;
        std::swap(perm[col], perm[best]);
        const double pivot = m[perm[col]][col];
        max_pivot = std::max(max_pivot, std::abs(pivot));
        min_pivot = std::min(min_pivot, std::abs(pivot));
        if (std::abs(pivot) < 1e-12 * std::max(1.0, max_pivot))
            throw numeric_error("fit_fringe: ill-conditioned normal equations (pivot ratio " +
                                std::to_string(max_pivot / std::max(std::abs(pivot), 1e-300)) +
                                ")");
        for (int rr = col + 1; rr < 3; ++rr) {
            const double f = m[perm[rr]][col] / pivot;
            for (int cc = col; cc < 3; ++cc) m[perm[rr]][cc] -= f * m[perm[col]][cc];
            rhs[perm[rr]] -= f * rhs[perm[col]];
        }
    }
    double coef[3];
    for (int col = 2; col >= 0; --col) {
        double v = rhs[perm[col]];
        for (int cc = col + 1; cc < 3; ++cc) v -= m[perm[col]][cc] * coef[cc];
        coef[col] = v / m[perm[col]][col];
    }

    FringeFit fit;
    fit.mean = coef[0];
    fit.amplitude = std::hypot(coef[1], coef[2]);
    fit.phase_offset = fit.amplitude > 0.0 ? std::atan2(coef[2], coef[1]) : 0.0;
    if (!(fit.mean > 0.0)) {
        if (fit.amplitude > 1e-12)
            throw numeric_error("fit_fringe: nonpositive mean level, visibility undefined");
        fit.visibility = 0.0;
    } else {
        fit.visibility = fit.amplitude / fit.mean;
    }
    return fit;
}

/// Fit a column of a sweep table; `column` extracts the y value per row.
template <typename ColumnFn>
inline FringeFit fit_fringe(const std::vector<SweepRow>& table, ColumnFn&& column) {
    std::vector<double> xs, ys;
    xs.reserve(table.size());
    ys.reserve(table.size());
    for (const auto& row : table) {
        xs.push_back(row.value);
        ys.push_back(column(row));
    }
    return fit_fringe(xs, ys);
}

/// Two-run path-marking measurement: force the injected electron onto the
/// reflected then the transmitted interferometer arm, read |u|^2 and |v|^2
/// off the detector-lead frequencies, and recombine with the original
/// setup's path weights.
inline double measure_distinguishability_protocol(const EraserSetup& setup,
                                                  std::uint64_t shots, std::uint64_t seed,
                                                  const LeadPair& leads = LeadPair{0, 0}) {
    if (shots == 0)
        throw std::invalid_argument("protocol: shots must be > 0");
    const auto m = setup.mzi_column();
    // Splitter reflectance that routes the input lead fully onto b_alpha
    // (reflected arm) resp. b_beta.
    const double r_for_reflected = setup.input_mzi == MziLead::alpha_bar ? 1.0 : 0.0;

    auto run = [&](double reflectance, std::uint64_t stream_index) {
        EraserSetup mod = setup;
        mod.s1 = build_beam_splitter({reflectance, 0.0, 0.0, 0.0});
        SplitMix64 stream = SplitMix64::stream(seed, stream_index);
        const CoincidenceCounts counts = sample_shots(mod, shots, stream.next_u64());
        const ProbabilityEstimate est = estimate_probabilities(counts);
        return leads.det == 0 ? est.singles.p_gamma : est.singles.p_delta;
    };
    const double u_sq = run(r_for_reflected, 0);
    const double v_sq = run(1.0 - r_for_reflected, 1);

    const double wu = std::norm(m[0]) * std::norm(setup.s2.at(leads.mzi, 0)) * u_sq;
    const double wv = std::norm(m[1]) * std::norm(setup.s2.at(leads.mzi, 1)) * v_sq;
    if (!(wu + wv > 0.0))
        throw numeric_error("protocol: estimated path weights vanish");
    return std::abs(wu - wv) / (wu + wv);
}

/// Gaussian jitter on the interaction phase; models tracing over an
/// environment as a classical mixture of pure setups.
struct DephasingModel {
    double sigma = 0.0;
    std::uint64_t ensemble = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(sigma >= 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("dephasing: sigma must be finite and >= 0");
        if (ensemble < 1)
            throw std::invalid_argument("dephasing: ensemble size must be >= 1");
    }
};

/// Duality report for the jittered ensemble: joint probabilities are
/// averaged over draws delta_phi_m ~ N(delta_phi, sigma^2), visibility is
/// refit from the averaged fringe, distinguishability from the averaged
/// path weights. Pure setups (sigma = 0) recover V^2 + D^2 = 1.
inline DualityReport dephased_duality(const EraserSetup& setup, const DephasingModel& model,
                                      const LeadPair& leads, std::size_t grid_points = 32) {
    model.validate();
    std::vector<double> draws(model.ensemble);
    SplitMix64 rng(SplitMix64::mix(model.seed));
    for (auto& d : draws)
        d = setup.delta_phi + (model.sigma > 0.0 ? model.sigma * rng.next_normal() : 0.0);

    const auto m = setup.mzi_column();
    const double wm_u = std::norm(m[0]) * std::norm(setup.s2.at(leads.mzi, 0));
    const double wm_v = std::norm(m[1]) * std::norm(setup.s2.at(leads.mzi, 1));
    double wu_bar = 0.0, wv_bar = 0.0;
    for (const double d : draws) {
        EraserSetup s = setup;
        s.delta_phi = d;
        const auto uv = uv_coefficients(s);
        wu_bar += wm_u * std::norm(uv.u(leads.det));
        wv_bar += wm_v * std::norm(uv.v(leads.det));
    }
    wu_bar /= static_cast<double>(model.ensemble);
    wv_bar /= static_cast<double>(model.ensemble);
    if (!(wu_bar + wv_bar > 0.0))
        throw numeric_error("dephased_duality: averaged path weights vanish");

    std::vector<double> xs(grid_points), ys(grid_points, 0.0);
    for (std::size_t i = 0; i < grid_points; ++i)
        xs[i] = 2.0 * std::numbers::pi * static_cast<double>(i) /
                static_cast<double>(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) {
        EraserSetup swept = apply_sweep_parameter(setup, SweepParameter::phi, xs[i]);
        for (const double d : draws) {
            swept.delta_phi = d;
            ys[i] += joint_probabilities(evolve(swept)).at(leads.mzi, leads.det);
        }
        ys[i] /= static_cast<double>(model.ensemble);
    }
    const FringeFit fit = fit_fringe(xs, ys);

    DualityReport rep;
    rep.visibility = std::min(fit.visibility, 1.0 + 1e-9);
    rep.distinguishability = std::abs(wu_bar - wv_bar) / (wu_bar + wv_bar);
    rep.sum_of_squares =
        rep.visibility * rep.visibility + rep.distinguishability * rep.distinguishability;
    rep.source = DualityReport::Source::estimated;
    return rep;
}

} // namespace mzqe
