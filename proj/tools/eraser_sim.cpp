// Command-line front end for the Mach-Zehnder quantum-eraser library.
//
// Exit codes: 0 success, 2 config error, 3 numerical/degeneracy error,
// 4 I/O error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mzqe/io.hpp"
#include "mzqe/oracle.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct Overrides {
    std::optional<double> delta_phi;
    std::optional<std::uint64_t> shots;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw std::ios_base::failure("cannot read config file: " + path);
    return ss.str();
}

unsigned sweep_threads() {
    const char* env = std::getenv("ERASER_SIM_THREADS");
    if (!env) return 1;
    const long v = std::strtol(env, nullptr, 10);
    if (v < 1) throw mzqe::config_error("ERASER_SIM_THREADS: must be an integer >= 1");
    return static_cast<unsigned>(v);
}

mzqe::RunConfig load_config(const std::string& path, const Overrides& ov,
                            mzqe::RunMode mode) {
    mzqe::RunConfig cfg = mzqe::parse_config(read_file(path));
    cfg.mode = mode;
    if (ov.delta_phi) {
        cfg.setup.delta_phi = *ov.delta_phi;
        cfg.geometry.reset();
    }
    if (ov.shots) {
        cfg.sample_shots = *ov.shots;
        cfg.sweep_shots = *ov.shots;
    }
    if (ov.seed) {
        cfg.seed = *ov.seed;
        cfg.dephasing.seed = *ov.seed;
    }
    if (ov.out) cfg.output_path = *ov.out;
    if (ov.format) {
        if (*ov.format == "csv") cfg.format = mzqe::OutputFormat::csv;
        else if (*ov.format == "json") cfg.format = mzqe::OutputFormat::json;
        else throw mzqe::config_error("--format: expected csv or json");
    }
    return cfg;
}

void add_duality_fields(mzqe::OutputRecord& rec, const mzqe::EraserSetup& setup,
                        const mzqe::LeadPair& leads) {
    try {
        const mzqe::DualityReport rep = mzqe::duality_check(setup, leads);
        rec.set("visibility", rep.visibility);
        rec.set("distinguishability", rep.distinguishability);
        rec.set("sum_of_squares", rep.sum_of_squares);
    } catch (const mzqe::numeric_error&) {
        rec.set_missing("visibility");
        rec.set_missing("distinguishability");
        rec.set_missing("sum_of_squares");
    }
}

mzqe::OutputRecord make_record(const mzqe::SweepRow& row, const mzqe::LeadPair& leads,
                               bool sampled) {
    static const std::array<std::string, 4> pair_names = {"alpha_gamma", "alpha_delta",
                                                          "beta_gamma", "beta_delta"};
    mzqe::OutputRecord rec;
    rec.set("value", row.value);
    rec.set("p_alpha", row.singles.p_alpha);
    rec.set("p_beta", row.singles.p_beta);
    rec.set("p_gamma", row.singles.p_gamma);
    rec.set("p_delta", row.singles.p_delta);
    for (int k = 0; k < 4; ++k) rec.set("p_" + pair_names[k], row.joints.p[k]);
    for (int k = 0; k < 4; ++k) rec.set("s_" + pair_names[k], row.cross[k]);
    add_duality_fields(rec, row.setup, leads);
    if (sampled && row.estimate) {
        for (int k = 0; k < 4; ++k) {
            rec.set("est_p_" + pair_names[k], row.estimate->joints.p[k]);
            rec.set("se_p_" + pair_names[k], row.estimate->joint_stderr[k]);
        }
        for (int k = 0; k < 4; ++k) {
            rec.set("est_s_" + pair_names[k], row.cross_estimate[k].value);
            rec.set("se_s_" + pair_names[k], row.cross_estimate[k].std_error);
        }
    } else if (sampled) {
        for (const std::string& prefix : {"est_p_", "se_p_", "est_s_", "se_s_"})
            for (int k = 0; k < 4; ++k) rec.set_missing(prefix + pair_names[k]);
    }
    return rec;
}

mzqe::SweepRow evaluate_point(const mzqe::EraserSetup& setup, double value,
                              const mzqe::BiasConfig& bias, std::uint64_t shots,
                              std::uint64_t seed) {
    mzqe::SweepRow row;
    row.value = value;
    row.setup = setup;
    const mzqe::TwoParticleState state = mzqe::evolve(setup);
    row.singles = mzqe::single_probabilities(state);
    row.joints = mzqe::joint_probabilities(state);
    const std::array<double, 2> marg_m = {row.singles.p_alpha, row.singles.p_beta};
    const std::array<double, 2> marg_d = {row.singles.p_gamma, row.singles.p_delta};
    for (int k = 0; k < 4; ++k)
        row.cross[k] =
            mzqe::cross_correlation(marg_m[k / 2], marg_d[k % 2], row.joints.p[k], bias);
    if (shots > 0) {
        row.counts = mzqe::sample_shots(setup, shots, seed);
        row.estimate = mzqe::estimate_probabilities(*row.counts);
        for (int k = 0; k < 4; ++k)
            row.cross_estimate[k] = mzqe::estimate_cross_correlation(
                *row.counts, mzqe::LeadPair{k / 2, k % 2}, bias);
    }
    return row;
}

void write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        if (!std::cout) throw std::ios_base::failure("cannot write to stdout");
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open output file: " + path);
    out << text;
    out.flush();
    if (!out) throw std::ios_base::failure("cannot write output file: " + path);
}

int run_mode(const mzqe::RunConfig& cfg) {
    std::vector<mzqe::OutputRecord> records;
    switch (cfg.mode) {
        case mzqe::RunMode::eval: {
            cfg.setup.validate();
            const auto row = evaluate_point(cfg.setup, cfg.setup.delta_phi, cfg.bias, 0, 0);
            records.push_back(make_record(row, cfg.leads, false));
            break;
        }
        case mzqe::RunMode::sample: {
            cfg.setup.validate();
            const auto row = evaluate_point(cfg.setup, cfg.setup.delta_phi, cfg.bias,
                                            cfg.sample_shots, cfg.seed);
            records.push_back(make_record(row, cfg.leads, true));
            break;
        }
        case mzqe::RunMode::sweep: {
            mzqe::SweepSpec spec;
            spec.parameter = cfg.sweep_parameter;
            spec.base = cfg.setup;
            spec.shots = cfg.sweep_shots;
            spec.seed = cfg.seed;
            spec.geometry = cfg.geometry;
            spec.grid.resize(cfg.sweep_points);
            const double step = cfg.sweep_points > 1
                ? (cfg.sweep_stop - cfg.sweep_start) / static_cast<double>(cfg.sweep_points - 1)
                : 0.0;
            for (std::size_t i = 0; i < cfg.sweep_points; ++i)
                spec.grid[i] = cfg.sweep_start + step * static_cast<double>(i);
            const auto rows = mzqe::sweep(spec, cfg.bias, sweep_threads());
            records.reserve(rows.size());
            for (const auto& row : rows)
                records.push_back(make_record(row, cfg.leads, spec.shots > 0));
            break;
        }
        case mzqe::RunMode::duality: {
            cfg.setup.validate();
            mzqe::DualityReport rep;
            if (cfg.dephasing.sigma > 0.0)
                rep = mzqe::dephased_duality(cfg.setup, cfg.dephasing, cfg.leads);
            else
                rep = mzqe::duality_check(cfg.setup, cfg.leads);
            mzqe::OutputRecord rec;
            rec.set("value", cfg.setup.delta_phi);
            rec.set("visibility", rep.visibility);
            rec.set("distinguishability", rep.distinguishability);
            rec.set("sum_of_squares", rep.sum_of_squares);
            rec.set("sigma", cfg.dephasing.sigma);
            rec.set("ensemble", static_cast<double>(cfg.dephasing.ensemble));
            records.push_back(std::move(rec));
            break;
        }
        case mzqe::RunMode::verify_oracle: {
            const auto res = mzqe::oracle::run_suite(1000, cfg.seed);
            std::cout << "verify-oracle: checked " << res.checked << " random setups, "
                      << res.failures << " mismatches, worst error " << res.worst_error
                      << "\n";
            return res.failures == 0 ? 0 : kExitNumeric;
        }
    }
    write_output(mzqe::emit(records, cfg.format), cfg.output_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Electronic Mach-Zehnder quantum-eraser simulator.\n"
        "Units: all angles in radians, magnetic field in tesla, areas in m^2,\n"
        "voltages in volts."};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;

    struct Sub {
        CLI::App* cmd;
        mzqe::RunMode mode;
    };
    std::vector<Sub> subs = {
        {app.add_subcommand("eval", "Evaluate probabilities and duality at one setup"),
         mzqe::RunMode::eval},
        {app.add_subcommand("sweep", "Sweep a parameter over a grid"), mzqe::RunMode::sweep},
        {app.add_subcommand("sample", "Monte Carlo coincidence sampling at one setup"),
         mzqe::RunMode::sample},
        {app.add_subcommand("duality", "Visibility/distinguishability report"),
         mzqe::RunMode::duality},
        {app.add_subcommand("verify-oracle", "Run the random-setup oracle cross-check"),
         mzqe::RunMode::verify_oracle},
    };
    for (auto& s : subs) {
        s.cmd->add_option("-c,--config", config_path, "JSON run configuration")->required();
        s.cmd->add_option("--delta-phi", ov.delta_phi,
                          "Override the interaction phase (radians)");
        s.cmd->add_option("--shots", ov.shots, "Override shot count");
        s.cmd->add_option("--seed", ov.seed, "Override RNG seed");
        s.cmd->add_option("--out", ov.out, "Output path (default: stdout)");
        s.cmd->add_option("--format", ov.format, "Output format: csv or json");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    mzqe::RunMode mode = mzqe::RunMode::eval;
    for (const auto& s : subs)
        if (s.cmd->parsed()) mode = s.mode;

    try {
        const mzqe::RunConfig cfg = load_config(config_path, ov, mode);
        return run_mode(cfg);
    } catch (const mzqe::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mzqe::numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
