#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mzqe/stochastic.hpp"

namespace mzqe {

struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

enum class RunMode { eval, sweep, sample, duality, verify_oracle };

enum class OutputFormat { csv, json };

/// Validated run configuration; see the README for the JSON schema.
struct RunConfig {
    EraserSetup setup;
    std::array<BeamSplitterSpec, 4> splitter_specs;
    std::optional<FieldGeometry> geometry; // present iff delta_phi came from it
    RunMode mode = RunMode::eval;
    LeadPair leads{0, 0};

    // sweep block
    SweepParameter sweep_parameter = SweepParameter::phi;
    double sweep_start = 0.0, sweep_stop = 0.0;
    std::size_t sweep_points = 0;
    std::uint64_t sweep_shots = 0;

    // sample block
    std::uint64_t sample_shots = 0;
    std::uint64_t seed = 0;

    // duality block
    DephasingModel dephasing;

    BiasConfig bias;

    std::string output_path; // empty = stdout
    OutputFormat format = OutputFormat::csv;
};

namespace detail {

using json = nlohmann::json;

inline double require_number(const json& j, const std::string& path) {
    if (!j.is_number())
        throw config_error(path + ": expected a number");
    return j.get<double>();
}

inline double get_number(const json& obj, const std::string& key, const std::string& path,
                         std::optional<double> fallback = {}) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw config_error(path + "." + key + ": missing required field");
    }
    return require_number(obj.at(key), path + "." + key);
}

inline BeamSplitterSpec parse_splitter(const json& j, const std::string& path) {
    if (!j.is_object()) throw config_error(path + ": expected an object");
    BeamSplitterSpec spec;
    spec.reflectance = get_number(j, "R", path);
    spec.phase_r = get_number(j, "phase_r", path, 0.0);
    spec.phase_t = get_number(j, "phase_t", path, 0.0);
    spec.phase_global = get_number(j, "phase_global", path, 0.0);
    if (!(spec.reflectance >= 0.0 && spec.reflectance <= 1.0))
        throw config_error(path + ".R: must be in [0,1]");
    try {
        spec.validate(path);
    } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
    }
    return spec;
}

inline SweepParameter parse_parameter(const std::string& s, const std::string& path) {
    if (s == "phi") return SweepParameter::phi;
    if (s == "phi_d") return SweepParameter::phi_d;
    if (s == "delta_phi") return SweepParameter::delta_phi;
    if (s == "R1") return SweepParameter::r1;
    if (s == "R2") return SweepParameter::r2;
    if (s == "R3") return SweepParameter::r3;
    if (s == "R4") return SweepParameter::r4;
    if (s == "H") return SweepParameter::field;
    throw config_error(path + ": unknown sweep parameter '" + s +
                       "' (expected phi, phi_d, delta_phi, R1..R4, or H)");
}

inline LeadPair parse_leads(const std::string& s, const std::string& path) {
    for (const auto& p : kAllLeadPairs)
        if (s == p.name()) return p;
    throw config_error(path + ": unknown lead pair '" + s +
                       "' (expected alpha_gamma, alpha_delta, beta_gamma, beta_delta)");
}

} // namespace detail

inline RunConfig parse_config(const std::string& text) {
    using detail::json;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    if (!root.is_object()) throw config_error("config: top level must be an object");

    RunConfig cfg;

    if (!root.contains("setup") || !root.at("setup").is_object())
        throw config_error("setup: missing required block");
    const json& setup = root.at("setup");

    const std::array<std::string, 4> names = {"S1", "S2", "S3", "S4"};
    for (int i = 0; i < 4; ++i) {
        if (setup.contains(names[i]))
            cfg.splitter_specs[i] = detail::parse_splitter(setup.at(names[i]), "setup." + names[i]);
        else if (i == 3)
            cfg.splitter_specs[3] = BeamSplitterSpec::identity(); // setup 1
        else
            throw config_error("setup." + names[i] + ": missing required block");
    }
    cfg.setup.s1 = build_beam_splitter(cfg.splitter_specs[0]);
    cfg.setup.s2 = build_beam_splitter(cfg.splitter_specs[1]);
    cfg.setup.s3 = build_beam_splitter(cfg.splitter_specs[2]);
    cfg.setup.s4 = build_beam_splitter(cfg.splitter_specs[3]);

    const bool has_dphi = setup.contains("delta_phi");
    const bool has_geom = setup.contains("geometry");
    if (has_dphi == has_geom)
        throw config_error(
            "setup: exactly one of setup.delta_phi and setup.geometry must be present");
    if (has_dphi) {
        cfg.setup.delta_phi = detail::require_number(setup.at("delta_phi"), "setup.delta_phi");
        if (!std::isfinite(cfg.setup.delta_phi))
            throw config_error("setup.delta_phi: must be finite");
    } else {
        const json& g = setup.at("geometry");
        FieldGeometry geom;
        geom.field_tesla = detail::get_number(g, "H_tesla", "setup.geometry");
        geom.delta_area_m2 = detail::get_number(g, "delta_area_m2", "setup.geometry");
        try {
            cfg.setup.delta_phi = delta_phi_from_geometry(geom);
        } catch (const std::invalid_argument& e) {
            throw config_error(std::string("setup.geometry: ") + e.what());
        }
        cfg.geometry = geom;
    }

    if (setup.contains("input_mzi")) {
        const std::string v = setup.at("input_mzi").get<std::string>();
        if (v == "alpha_bar") cfg.setup.input_mzi = MziLead::alpha_bar;
        else if (v == "beta_bar") cfg.setup.input_mzi = MziLead::beta_bar;
        else throw config_error("setup.input_mzi: expected alpha_bar or beta_bar");
    }
    if (setup.contains("input_det")) {
        const std::string v = setup.at("input_det").get<std::string>();
        if (v == "gamma_bar") cfg.setup.input_det = DetLead::gamma_bar;
        else if (v == "delta_bar") cfg.setup.input_det = DetLead::delta_bar;
        else throw config_error("setup.input_det: expected gamma_bar or delta_bar");
    }

    const std::string mode = root.value("mode", std::string("eval"));
    if (mode == "eval") cfg.mode = RunMode::eval;
    else if (mode == "sweep") cfg.mode = RunMode::sweep;
    else if (mode == "sample") cfg.mode = RunMode::sample;
    else if (mode == "duality") cfg.mode = RunMode::duality;
    else if (mode == "verify-oracle") cfg.mode = RunMode::verify_oracle;
    else throw config_error("mode: unknown mode '" + mode + "'");

    if (root.contains("leads"))
        cfg.leads = detail::parse_leads(root.at("leads").get<std::string>(), "leads");

    if (cfg.mode == RunMode::sweep) {
        if (!root.contains("sweep") || !root.at("sweep").is_object())
            throw config_error("sweep: missing block required by mode 'sweep'");
        const json& s = root.at("sweep");
        if (!s.contains("parameter"))
            throw config_error("sweep.parameter: missing required field");
        cfg.sweep_parameter =
            detail::parse_parameter(s.at("parameter").get<std::string>(), "sweep.parameter");
        cfg.sweep_start = detail::get_number(s, "start", "sweep");
        cfg.sweep_stop = detail::get_number(s, "stop", "sweep");
        const double pts = detail::get_number(s, "points", "sweep");
        if (!(pts >= 1.0) || pts != std::floor(pts))
            throw config_error("sweep.points: must be a positive integer");
        cfg.sweep_points = static_cast<std::size_t>(pts);
        if (cfg.sweep_points > 1 && !(cfg.sweep_stop > cfg.sweep_start))
            throw config_error("sweep.stop: must exceed sweep.start");
        const double shots = detail::get_number(s, "shots", "sweep", 0.0);
        if (!(shots >= 0.0) || shots != std::floor(shots))
            throw config_error("sweep.shots: must be a non-negative integer");
        cfg.sweep_shots = static_cast<std::uint64_t>(shots);
        if (cfg.sweep_parameter == SweepParameter::field && !cfg.geometry)
            throw config_error("sweep.parameter: sweeping H requires setup.geometry");
    }

    if (root.contains("sample")) {
        const json& s = root.at("sample");
        const double shots = detail::get_number(s, "shots", "sample");
        if (!(shots >= 0.0) || shots != std::floor(shots))
            throw config_error("sample.shots: must be a non-negative integer");
        cfg.sample_shots = static_cast<std::uint64_t>(shots);
        const double seed = detail::get_number(s, "seed", "sample", 0.0);
        cfg.seed = static_cast<std::uint64_t>(seed);
    } else if (cfg.mode == RunMode::sample) {
        throw config_error("sample: missing block required by mode 'sample'");
    }

    if (root.contains("duality")) {
        const json& d = root.at("duality");
        cfg.dephasing.sigma = detail::get_number(d, "sigma", "duality", 0.0);
        const double m = detail::get_number(d, "ensemble", "duality", 1.0);
        if (!(m >= 1.0) || m != std::floor(m))
            throw config_error("duality.ensemble: must be a positive integer");
        cfg.dephasing.ensemble = static_cast<std::uint64_t>(m);
        cfg.dephasing.seed = static_cast<std::uint64_t>(
            detail::get_number(d, "seed", "duality", 0.0));
    }

    if (root.contains("bias")) {
        const json& b = root.at("bias");
        cfg.bias.voltage_volts = detail::get_number(b, "voltage_volts", "bias", 0.0);
        if (b.contains("dimensionless")) {
            if (!b.at("dimensionless").is_boolean())
                throw config_error("bias.dimensionless: expected a boolean");
            cfg.bias.dimensionless_mode = b.at("dimensionless").get<bool>();
        }
        if (cfg.bias.voltage_volts < 0.0)
            throw config_error("bias.voltage_volts: must be >= 0");
    }

    if (root.contains("output")) {
        const json& o = root.at("output");
        cfg.output_path = o.value("path", std::string());
        const std::string fmt = o.value("format", std::string("csv"));
        if (fmt == "csv") cfg.format = OutputFormat::csv;
        else if (fmt == "json") cfg.format = OutputFormat::json;
        else throw config_error("output.format: expected csv or json");
    }

    return cfg;
}

/// One flat output row; missing values stay unset and serialize as empty
/// (CSV) or null (JSON). Key order is fixed for stable column layout.
struct OutputRecord {
    std::vector<std::pair<std::string, std::optional<double>>> fields;

    void set(const std::string& key, double value) { fields.emplace_back(key, value); }
    void set_missing(const std::string& key) { fields.emplace_back(key, std::nullopt); }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// CSV (header + rows, 17 significant digits, '\n' line ends) or a JSON
/// array of objects with the same keys.
inline std::string emit(const std::vector<OutputRecord>& records, OutputFormat format) {
    if (records.empty()) throw std::invalid_argument("emit: no records");
    std::string out;
    if (format == OutputFormat::csv) {
        for (std::size_t k = 0; k < records[0].fields.size(); ++k) {
            if (k) out += ',';
            out += records[0].fields[k].first;
        }
        out += '\n';
        for (const auto& rec : records) {
            for (std::size_t k = 0; k < rec.fields.size(); ++k) {
                if (k) out += ',';
                if (rec.fields[k].second) out += detail::format_double(*rec.fields[k].second);
            }
            out += '\n';
        }
    } else {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& rec : records) {
            nlohmann::ordered_json obj = nlohmann::ordered_json::object();
            for (const auto& [key, value] : rec.fields) {
                if (value) obj[key] = *value;
                else obj[key] = nullptr;
            }
            arr.push_back(std::move(obj));
        }
        out = arr.dump(2);
        out += '\n';
    }
    return out;
}

} // namespace mzqe
