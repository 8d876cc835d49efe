#include <catch2/catch_amalgamated.hpp>

#include "mzqe/oracle.hpp"
#include "mzqe/stochastic.hpp"

using namespace mzqe;

namespace {

EraserSetup symmetric_setup1(double delta_phi, double r3 = 0.5) {
    EraserSetup s;
    s.s1 = build_beam_splitter(BeamSplitterSpec::symmetric());
    s.s2 = build_beam_splitter(BeamSplitterSpec::symmetric());
    s.s3 = build_beam_splitter({r3, 0.0, 0.0, 0.0});
    s.s4 = Unitary2::identity();
    s.delta_phi = delta_phi;
    return s;
}

EraserSetup symmetric_setup2(double delta_phi, double s4_phase_t) {
    EraserSetup s = symmetric_setup1(delta_phi);
    s.s4 = build_beam_splitter({0.5, 0.0, s4_phase_t, 0.0});
    return s;
}

} // namespace

TEST_CASE("sample_shots basics") {
    const EraserSetup s = symmetric_setup1(1.0);
    SECTION("zero shots") {
        const CoincidenceCounts c = sample_shots(s, 0, 42);
        CHECK(c.total == 0);
        for (auto n : c.n) CHECK(n == 0);
    }
    SECTION("deterministic outcome when one cell has all the weight") {
        EraserSetup aligned;
        aligned.s1 = aligned.s2 = aligned.s3 = aligned.s4 = Unitary2::identity();
        const CoincidenceCounts c = sample_shots(aligned, 1000, 7);
        CHECK(c.n[0] == 1000);
    }
    SECTION("bit-exact for a fixed (setup, n, seed)") {
        const CoincidenceCounts a = sample_shots(s, 50000, 123);
        const CoincidenceCounts b = sample_shots(s, 50000, 123);
        CHECK(a.n == b.n);
        const CoincidenceCounts other = sample_shots(s, 50000, 124);
        CHECK(a.n != other.n);
    }
    SECTION("large-sample frequency lands within 3 sigma") {
        const EraserSetup marked =
            apply_sweep_parameter(symmetric_setup1(std::numbers::pi), SweepParameter::phi, 0.0);
        const CoincidenceCounts c = sample_shots(marked, 1000000, 2024);
        const double p_hat = static_cast<double>(c.n[0]) / 1e6;
        CHECK(std::abs(p_hat - 0.5) < 3.0 * 5e-4);
    }
}

TEST_CASE("estimate_probabilities") {
    CoincidenceCounts c;
    c.n = {10, 0, 0, 0};
    c.total = 10;
    CHECK(estimate_probabilities(c).joints.p[0] == 1.0);

    c.n = {1, 1, 1, 1};
    c.total = 4;
    const ProbabilityEstimate est = estimate_probabilities(c);
    for (int k = 0; k < 4; ++k) CHECK(est.joints.p[k] == 0.25);
    CHECK(est.singles.p_alpha == 0.5);

    CoincidenceCounts empty;
    CHECK_THROWS_AS(estimate_probabilities(empty), numeric_error);
}

TEST_CASE("estimator lands within 3 standard errors nearly always") {
    const EraserSetup s = symmetric_setup1(2.0, 0.3);
    const JointProbabilities truth = joint_probabilities(evolve(s));
    int bad_cells = 0, cells = 0;
    for (int rep = 0; rep < 100; ++rep) {
        SplitMix64 stream = SplitMix64::stream(5000, rep);
        const CoincidenceCounts c = sample_shots(s, 10000, stream.next_u64());
        const ProbabilityEstimate est = estimate_probabilities(c);
        for (int k = 0; k < 4; ++k) {
            const double se = std::sqrt(truth.p[k] * (1.0 - truth.p[k]) / 1e4);
            ++cells;
            if (std::abs(est.joints.p[k] - truth.p[k]) > 3.0 * se) ++bad_cells;
        }
    }
    CHECK(bad_cells <= cells / 100);
}

TEST_CASE("estimator error shrinks like 1/sqrt(n)") {
    const EraserSetup s =
        apply_sweep_parameter(symmetric_setup1(1.3, 0.4), SweepParameter::phi, 1.0);
    const double truth = joint_probabilities(evolve(s)).p[0];
    std::array<double, 4> rms{};
    const std::array<std::uint64_t, 4> sizes = {1000, 10000, 100000, 1000000};
    for (int level = 0; level < 4; ++level) {
        double sq = 0.0;
        for (int rep = 0; rep < 30; ++rep) {
            const CoincidenceCounts c = sample_shots(s, sizes[level], 900 + 37 * rep + level);
            const double err = static_cast<double>(c.n[0]) / sizes[level] - truth;
            sq += err * err;
        }
        rms[level] = std::sqrt(sq / 30.0);
    }
    const double root10 = std::sqrt(10.0);
    for (int level = 1; level < 4; ++level) {
        const double ratio = rms[level - 1] / rms[level];
        CHECK(ratio > root10 / 2.0);
        CHECK(ratio < root10 * 2.0);
    }
}

TEST_CASE("estimated cross correlation") {
    const BiasConfig dimless{0.0, true};
    SECTION("independent pair is consistent with zero") {
        const EraserSetup s = symmetric_setup1(0.0);
        const CoincidenceCounts c = sample_shots(s, 1000000, 31);
        const ValueWithError v = estimate_cross_correlation(c, LeadPair{0, 0}, dimless);
        CHECK(std::abs(v.value) < 3.0 * std::max(v.std_error, 1e-12));
    }
    SECTION("marked symmetric case follows cos(phi)/4") {
        for (auto [phi, expected] : {std::pair{0.0, 0.25}, {std::numbers::pi, -0.25}}) {
            const EraserSetup s = apply_sweep_parameter(symmetric_setup1(std::numbers::pi),
                                                        SweepParameter::phi, phi);
            const CoincidenceCounts c = sample_shots(s, 1000000, 32);
            const ValueWithError v = estimate_cross_correlation(c, LeadPair{0, 0}, dimless);
            CHECK(std::abs(v.value - expected) < 3.0 * v.std_error);
        }
    }
}

TEST_CASE("sweep produces the spec'd fringe rows") {
    SweepSpec spec;
    spec.parameter = SweepParameter::phi;
    spec.grid = {0.0, std::numbers::pi / 2.0, std::numbers::pi};
    spec.base = symmetric_setup1(0.0);

    SECTION("no interaction: interference fringe (1, 1/2, 0)") {
        const auto rows = sweep(spec);
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].singles.p_alpha == Catch::Approx(1.0).margin(1e-12));
        CHECK(rows[1].singles.p_alpha == Catch::Approx(0.5).margin(1e-12));
        CHECK(rows[2].singles.p_alpha == Catch::Approx(0.0).margin(1e-12));
        for (const auto& row : rows) CHECK_FALSE(row.counts.has_value());
    }
    SECTION("full marking flattens the single-lead fringe") {
        spec.base = symmetric_setup1(std::numbers::pi);
        const auto rows = sweep(spec);
        for (const auto& row : rows) {
            CHECK(row.singles.p_alpha == Catch::Approx(0.5).margin(1e-12));
            CHECK(row.joints.p[0] ==
                  Catch::Approx(0.5 * (1.0 + std::cos(row.value)) / 2.0).margin(1e-12));
        }
    }
    SECTION("sampled columns appear iff shots > 0, identically across thread counts") {
        spec.base = symmetric_setup1(1.0);
        spec.shots = 20000;
        spec.seed = 99;
        const auto serial = sweep(spec, {}, 1);
        const auto parallel = sweep(spec, {}, 4);
        REQUIRE(serial.size() == parallel.size());
        for (std::size_t i = 0; i < serial.size(); ++i) {
            REQUIRE(serial[i].counts.has_value());
            REQUIRE(parallel[i].counts.has_value());
            CHECK(serial[i].counts->n == parallel[i].counts->n);
        }
    }
    SECTION("invalid grids are rejected") {
        spec.grid = {};
        CHECK_THROWS_AS(sweep(spec), std::invalid_argument);
        spec.grid = {1.0, 1.0};
        CHECK_THROWS_AS(sweep(spec), std::invalid_argument);
    }
}

TEST_CASE("fringe fit") {
    SECTION("noiseless fringe recovers unit visibility") {
        std::vector<double> xs, ys;
        for (int i = 0; i < 16; ++i) {
            const double x = 2.0 * std::numbers::pi * i / 16.0;
            xs.push_back(x);
            ys.push_back(0.5 + 0.5 * std::cos(x - 0.3));
        }
        const FringeFit fit = fit_fringe(xs, ys);
        CHECK(fit.mean == Catch::Approx(0.5).margin(1e-9));
        CHECK(fit.amplitude == Catch::Approx(0.5).margin(1e-9));
        CHECK(fit.phase_offset == Catch::Approx(0.3).margin(1e-9));
        CHECK(fit.visibility == Catch::Approx(1.0).margin(1e-9));
    }
    SECTION("flat data has zero amplitude") {
        const std::vector<double> xs = {0.0, 1.2, 2.4, 3.6};
        const std::vector<double> ys = {0.7, 0.7, 0.7, 0.7};
        const FringeFit fit = fit_fringe(xs, ys);
        CHECK(fit.amplitude == Catch::Approx(0.0).margin(1e-12));
        CHECK(fit.visibility == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("preconditions") {
        CHECK_THROWS_AS(fit_fringe({0.0, 1.0}, {1.0, 1.0}), std::invalid_argument);
        CHECK_THROWS_AS(fit_fringe({0.0, 0.5, 1.0}, {1.0, 1.0, 1.0}), std::invalid_argument);
        CHECK_THROWS_AS(fit_fringe({0.0, 0.0, 4.0}, {1.0, 1.0, 1.0}), std::invalid_argument);
    }
    SECTION("sampled fringe visibility converges to the analytic value") {
        SweepSpec spec;
        spec.parameter = SweepParameter::phi;
        for (int i = 0; i < 16; ++i)
            spec.grid.push_back(2.0 * std::numbers::pi * i / 16.0);
        spec.base = symmetric_setup2(1.0, 1.8);
        spec.shots = 100000;
        spec.seed = 77;
        const auto rows = sweep(spec);
        const FringeFit fit =
            fit_fringe(rows, [](const SweepRow& r) { return r.estimate->joints.p[0]; });
        const double analytic = visibility(spec.base, LeadPair{0, 0});
        CHECK(std::abs(fit.visibility - analytic) < 0.02);
    }
}

TEST_CASE("loop phase matches the fitted fringe offset") {
    SplitMix64 rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        BeamSplitterSpec a, b;
        a.reflectance = 0.1 + 0.8 * rng.next_double();
        b.reflectance = 0.1 + 0.8 * rng.next_double();
        a.phase_r = rng.next_double();
        a.phase_t = rng.next_double();
        b.phase_r = rng.next_double();
        b.phase_t = rng.next_double();
        EraserSetup s = symmetric_setup1(1.7);
        s.s1 = build_beam_splitter(a);
        s.s2 = build_beam_splitter(b);

        // add a raw offset to S1's transmission phase and trace p_alpha
        std::vector<double> xs, ys;
        for (int i = 0; i < 32; ++i) {
            const double x = 2.0 * std::numbers::pi * i / 32.0;
            BeamSplitterSpec shifted = a;
            shifted.phase_t += x;
            EraserSetup moved = s;
            moved.s1 = build_beam_splitter(shifted);
            xs.push_back(x);
            ys.push_back(single_probabilities(evolve(moved)).p_alpha);
        }
        const FringeFit fit = fit_fringe(xs, ys);
        // p_alpha = C + A cos(phi0 + x - phi_nu), so the fitted offset is
        // phi_nu - phi0 and the loop phase is recovered as phi_nu - offset.
        const double phi_nu = detector_overlap_nu(s).phase;
        const double recovered = normalize_angle(phi_nu - fit.phase_offset);
        const double direct = loop_phase(s.s1, s.s2);
        CHECK(std::cos(recovered) == Catch::Approx(std::cos(direct)).margin(1e-9));
        CHECK(std::sin(recovered) == Catch::Approx(std::sin(direct)).margin(1e-9));
    }
}

TEST_CASE("distinguishability protocol") {
    SECTION("marked case converges to one") {
        EraserSetup s = symmetric_setup2(std::numbers::pi, std::numbers::pi); // phi_d = 0
        const double d = measure_distinguishability_protocol(s, 1000000, 11);
        CHECK(d == Catch::Approx(1.0).margin(0.01));
    }
    SECTION("erased case converges to zero") {
        EraserSetup s = symmetric_setup2(std::numbers::pi, std::numbers::pi / 2.0);
        const double d = measure_distinguishability_protocol(s, 1000000, 12);
        CHECK(d == Catch::Approx(0.0).margin(0.01));
        CHECK(distinguishability(s, LeadPair{0, 0}) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("matches the analytic value on random setups") {
        SplitMix64 rng(66);
        for (int trial = 0; trial < 10; ++trial) {
            EraserSetup s = oracle::random_setup(rng, false);
            const double analytic = distinguishability(s, LeadPair{0, 0});
            const double estimated = measure_distinguishability_protocol(s, 1000000, 700 + trial);
            CHECK(std::abs(estimated - analytic) < 0.02);
        }
    }
    SECTION("rejects empty runs") {
        CHECK_THROWS_AS(measure_distinguishability_protocol(symmetric_setup2(1.0, 0.0), 0, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("dephased duality") {
    const LeadPair ag{0, 0};
    SECTION("sigma = 0 reproduces the pure-state identity") {
        const EraserSetup s = symmetric_setup2(2.0, 1.1);
        const DualityReport rep = dephased_duality(s, {0.0, 100, 5}, ag);
        CHECK(rep.sum_of_squares == Catch::Approx(1.0).margin(1e-9));
        const DualityReport pure = duality_check(s, ag);
        CHECK(rep.visibility == Catch::Approx(pure.visibility).margin(1e-9));
        CHECK(rep.distinguishability == Catch::Approx(pure.distinguishability).margin(1e-9));
    }
    SECTION("jitter pushes the sum strictly below one") {
        const EraserSetup s = symmetric_setup2(2.0, 1.1);
        const DualityReport rep = dephased_duality(s, {1.0, 10000, 5}, ag);
        CHECK(rep.sum_of_squares < 1.0);
        CHECK(rep.sum_of_squares > 0.0);
    }
    SECTION("strong jitter washes out the interaction-sensitive fringe") {
        const EraserSetup s = symmetric_setup1(1.0);
        const DualityReport rep = dephased_duality(s, {20.0, 10000, 9}, LeadPair{0, 1});
        CHECK(rep.visibility < 0.02);
    }
    SECTION("model validation") {
        const EraserSetup s = symmetric_setup2(1.0, 0.5);
        CHECK_THROWS_AS(dephased_duality(s, {-1.0, 10, 0}, ag), std::invalid_argument);
        CHECK_THROWS_AS(dephased_duality(s, {1.0, 0, 0}, ag), std::invalid_argument);
    }
}
