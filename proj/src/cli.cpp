#include "phi4lsi/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phi4lsi/criterion.hpp"
#include "phi4lsi/errors.hpp"
#include "phi4lsi/free_field.hpp"
#include "phi4lsi/io.hpp"
#include "phi4lsi/lattice.hpp"
#include "phi4lsi/oracle.hpp"
#include "phi4lsi/rng.hpp"
#include "phi4lsi/sampler.hpp"
#include "phi4lsi/skeleton.hpp"

namespace phi4 {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------- json utils

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a json object");
}

void expect_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    expect_object(j, where);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys)
            if (it.key() == k) { known = true; break; }
        if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

double number_at(const json& j, const char* key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    return v.get<double>();
}

std::int64_t integer_at(const json& j, const char* key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
    return v.get<std::int64_t>();
}

bool bool_at(const json& j, const char* key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError(where + "." + key + " must be a boolean");
    return v.get<bool>();
}

std::string string_at(const json& j, const char* key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
    return v.get<std::string>();
}

/** scale values: a positive number or the string "inf" */
double scale_of(const json& v, const std::string& where) {
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return INFINITY;
        throw ConfigError(where + " must be a positive number or \"inf\"");
    }
    if (!v.is_number()) throw ConfigError(where + " must be a positive number or \"inf\"");
    const double t = v.get<double>();
    if (!(t > 0.0)) throw ConfigError(where + " must be positive");
    return t;
}

std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(where + " must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<double> scale_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + " must be an array of scales");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(scale_of(e, where + " entry"));
    return out;
}

/** json value for a scale: "inf" for infinity, the number otherwise */
json scale_json(double t) {
    if (std::isinf(t)) return json("inf");
    return json(t);
}

// ------------------------------------------------------------- configuration

struct RunConfig {
    // lattice
    bool has_lattice = false;
    int d = 2;
    double eps = 1.0, boxl = 1.0;
    // model
    double lambda = 0.0, mu = 0.0, m2 = 1.0, t = INFINITY, hfield = 0.0;
    Normalisation norm = Normalisation::continuum;
    // sampler
    ChainConfig chain;
    bool config_workers_set = false;
    // grid
    double t_lo = 1e-6, t_hi = 1e6;
    int per_decade = 200;
    std::vector<double> t_values;
    QuadratureGrid quad;
    // bound constants
    BoundConstants consts = default_bound_constants();
    // profile
    std::string source;
    bool exact_norms = true;
    std::string profile_input;
    double chi_cap_override = INFINITY;
    // counterterm sweeps
    std::vector<double> ct_lambda, ct_m2, ct_t;
    // explicit oracle model
    GeneralModel omodel;
    bool omodel_set = false;
    // verify
    std::vector<std::string> checks{"oracle", "dss"};
    int points = 20;
    std::uint64_t verify_seed = 1;
    // output
    std::string out_dir = ".";
    bool write_samples = false;

    std::string digest;  // digest of the raw config bytes
};

void parse_lattice(const json& s, RunConfig& rc) {
    expect_keys(s, "lattice", {"d", "eps", "L"});
    rc.d = static_cast<int>(integer_at(s, "d", "lattice"));
    rc.eps = number_at(s, "eps", "lattice");
    rc.boxl = number_at(s, "L", "lattice");
    rc.has_lattice = true;
}

void parse_model(const json& s, RunConfig& rc) {
    expect_keys(s, "model", {"lambda", "mu", "m2", "t", "normalisation", "h"});
    if (s.contains("lambda")) rc.lambda = number_at(s, "lambda", "model");
    if (s.contains("mu")) rc.mu = number_at(s, "mu", "model");
    if (s.contains("m2")) rc.m2 = number_at(s, "m2", "model");
    if (s.contains("t")) rc.t = scale_of(s.at("t"), "model.t");
    if (s.contains("h")) rc.hfield = number_at(s, "h", "model");
    if (s.contains("normalisation")) {
        const std::string n = string_at(s, "normalisation", "model");
        if (n == "continuum")
            rc.norm = Normalisation::continuum;
        else if (n == "unit")
            rc.norm = Normalisation::unit_lattice;
        else
            throw ConfigError("model.normalisation must be \"continuum\" or \"unit\"");
    }
}

void parse_sampler(const json& s, RunConfig& rc) {
    expect_keys(s, "sampler",
                {"scheme", "step_dt", "n_burn", "n_keep", "thin", "n_chains", "seed",
                 "proposal_width", "batches", "workers"});
    if (s.contains("scheme")) rc.chain.scheme = scheme_from_string(string_at(s, "scheme", "sampler"));
    if (s.contains("step_dt")) rc.chain.step_dt = number_at(s, "step_dt", "sampler");
    if (s.contains("n_burn")) rc.chain.n_burn = integer_at(s, "n_burn", "sampler");
    if (s.contains("n_keep")) rc.chain.n_keep = integer_at(s, "n_keep", "sampler");
    if (s.contains("thin")) rc.chain.thin = static_cast<int>(integer_at(s, "thin", "sampler"));
    if (s.contains("n_chains")) rc.chain.n_chains = static_cast<int>(integer_at(s, "n_chains", "sampler"));
    if (s.contains("seed")) rc.chain.seed = static_cast<std::uint64_t>(integer_at(s, "seed", "sampler"));
    if (s.contains("proposal_width")) rc.chain.proposal_width = number_at(s, "proposal_width", "sampler");
    if (s.contains("batches")) rc.chain.batches = static_cast<int>(integer_at(s, "batches", "sampler"));
    if (s.contains("workers")) {
        rc.chain.workers = static_cast<int>(integer_at(s, "workers", "sampler"));
        rc.config_workers_set = true;
    }
}

void parse_grid(const json& s, RunConfig& rc) {
    expect_keys(s, "grid",
                {"t_lo", "t_hi", "per_decade", "t_values", "nodes_per_dim", "trapezoid_nodes",
                 "halfwidth", "gate_rtol", "cross_rtol"});
    if (s.contains("t_lo")) rc.t_lo = scale_of(s.at("t_lo"), "grid.t_lo");
    if (s.contains("t_hi")) rc.t_hi = scale_of(s.at("t_hi"), "grid.t_hi");
    if (s.contains("per_decade")) rc.per_decade = static_cast<int>(integer_at(s, "per_decade", "grid"));
    if (s.contains("t_values")) rc.t_values = scale_list(s.at("t_values"), "grid.t_values");
    if (s.contains("nodes_per_dim"))
        rc.quad.nodes_per_dim = static_cast<int>(integer_at(s, "nodes_per_dim", "grid"));
    if (s.contains("trapezoid_nodes"))
        rc.quad.trapezoid_nodes = static_cast<int>(integer_at(s, "trapezoid_nodes", "grid"));
    if (s.contains("halfwidth")) rc.quad.halfwidth = number_at(s, "halfwidth", "grid");
    if (s.contains("gate_rtol")) rc.quad.gate_rtol = number_at(s, "gate_rtol", "grid");
    if (s.contains("cross_rtol")) rc.quad.cross_rtol = number_at(s, "cross_rtol", "grid");
}

void parse_constants(const json& s, RunConfig& rc) {
    expect_keys(s, "constants",
                {"c_sq_d2", "c_sq_d3", "c_eta_d2", "c_eta_d3", "c_gam_d2", "c_gam_d3",
                 "c_psi_l1_d2", "c_cpsi_l1_d3", "c_cpsi_l2_d3", "c_bub5_d2", "c_bub5_d3"});
    auto set = [&](const char* key, double& field) {
        if (s.contains(key)) {
            field = number_at(s, key, "constants");
            rc.consts.provenance = "user-override";
        }
    };
    set("c_sq_d2", rc.consts.c_sq_d2);
    set("c_sq_d3", rc.consts.c_sq_d3);
    set("c_eta_d2", rc.consts.c_eta_d2);
    set("c_eta_d3", rc.consts.c_eta_d3);
    set("c_gam_d2", rc.consts.c_gam_d2);
    set("c_gam_d3", rc.consts.c_gam_d3);
    set("c_psi_l1_d2", rc.consts.c_psi_l1_d2);
    set("c_cpsi_l1_d3", rc.consts.c_cpsi_l1_d3);
    set("c_cpsi_l2_d3", rc.consts.c_cpsi_l2_d3);
    set("c_bub5_d2", rc.consts.c_bub5_d2);
    set("c_bub5_d3", rc.consts.c_bub5_d3);
}

void parse_profile(const json& s, RunConfig& rc) {
    expect_keys(s, "profile", {"source", "exact_norms", "input", "chi_cap"});
    if (s.contains("source")) rc.source = string_at(s, "source", "profile");
    if (s.contains("exact_norms")) rc.exact_norms = bool_at(s, "exact_norms", "profile");
    if (s.contains("input")) rc.profile_input = string_at(s, "input", "profile");
    if (s.contains("chi_cap")) {
        rc.chi_cap_override = number_at(s, "chi_cap", "profile");
        if (!(rc.chi_cap_override > 0.0)) throw ConfigError("profile.chi_cap must be positive");
    }
}

void parse_counterterms(const json& s, RunConfig& rc) {
    expect_keys(s, "counterterms", {"lambda_values", "m2_values", "t_values"});
    if (s.contains("lambda_values")) rc.ct_lambda = number_list(s.at("lambda_values"), "counterterms.lambda_values");
    if (s.contains("m2_values")) rc.ct_m2 = number_list(s.at("m2_values"), "counterterms.m2_values");
    if (s.contains("t_values")) rc.ct_t = scale_list(s.at("t_values"), "counterterms.t_values");
}

void parse_oracle(const json& s, RunConfig& rc) {
    expect_keys(s, "oracle", {"a", "g", "nu", "t", "h"});
    const auto& a = s.at("a");
    if (!a.is_array() || a.empty()) throw ConfigError("oracle.a must be a non-empty array of rows");
    const int n = static_cast<int>(a.size());
    rc.omodel.n = n;
    rc.omodel.a.clear();
    for (const auto& row : a) {
        auto r = number_list(row, "oracle.a row");
        if (static_cast<int>(r.size()) != n) throw ConfigError("oracle.a must be square");
        rc.omodel.a.insert(rc.omodel.a.end(), r.begin(), r.end());
    }
    rc.omodel.g = number_at(s, "g", "oracle");
    if (s.contains("nu")) rc.omodel.nu = number_at(s, "nu", "oracle");
    if (s.contains("t")) {
        const double t = scale_of(s.at("t"), "oracle.t");
        rc.omodel.inv_t = std::isinf(t) ? 0.0 : 1.0 / t;
    }
    if (s.contains("h")) rc.omodel.h = number_list(s.at("h"), "oracle.h");
    rc.omodel_set = true;
}

void parse_verify(const json& s, RunConfig& rc) {
    expect_keys(s, "verify", {"checks", "points", "seed"});
    if (s.contains("checks")) {
        const auto& c = s.at("checks");
        if (!c.is_array()) throw ConfigError("verify.checks must be an array of strings");
        rc.checks.clear();
        for (const auto& e : c) {
            if (!e.is_string()) throw ConfigError("verify.checks must be an array of strings");
            const std::string name = e.get<std::string>();
            if (name != "oracle" && name != "dss" && name != "bfs")
                throw ConfigError("verify.checks entries must be oracle|dss|bfs, got '" + name + "'");
            rc.checks.push_back(name);
        }
    }
    if (s.contains("points")) rc.points = static_cast<int>(integer_at(s, "points", "verify"));
    if (s.contains("seed")) rc.verify_seed = static_cast<std::uint64_t>(integer_at(s, "seed", "verify"));
}

void parse_output(const json& s, RunConfig& rc) {
    expect_keys(s, "output", {"dir", "samples"});
    if (s.contains("dir")) rc.out_dir = string_at(s, "dir", "output");
    if (s.contains("samples")) rc.write_samples = bool_at(s, "samples", "output");
}

RunConfig load_config(const std::string& path) {
    RunConfig rc;
    if (path.empty()) {
        rc.digest = io::content_digest("");
        return rc;
    }
    const std::string text = io::read_text(path);
    rc.digest = io::content_digest(text);
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid json: ") + e.what());
    }
    expect_keys(j, "config",
                {"lattice", "model", "sampler", "grid", "constants", "profile", "counterterms",
                 "oracle", "verify", "output"});
    if (j.contains("lattice")) parse_lattice(j.at("lattice"), rc);
    if (j.contains("model")) parse_model(j.at("model"), rc);
    if (j.contains("sampler")) parse_sampler(j.at("sampler"), rc);
    if (j.contains("grid")) parse_grid(j.at("grid"), rc);
    if (j.contains("constants")) parse_constants(j.at("constants"), rc);
    if (j.contains("profile")) parse_profile(j.at("profile"), rc);
    if (j.contains("counterterms")) parse_counterterms(j.at("counterterms"), rc);
    if (j.contains("oracle")) parse_oracle(j.at("oracle"), rc);
    if (j.contains("verify")) parse_verify(j.at("verify"), rc);
    if (j.contains("output")) parse_output(j.at("output"), rc);
    return rc;
}

// ------------------------------------------------------------------ helpers

LatticeSpec lattice_of(const RunConfig& rc, const std::string& cmd) {
    if (!rc.has_lattice) throw ConfigError(cmd + " needs a lattice section in the config");
    return build_lattice(rc.d, rc.eps, rc.boxl);
}

Phi4Params params_of(const RunConfig& rc, const LatticeSpec& spec) {
    Phi4Params p;
    p.spec = spec;
    p.lambda = rc.lambda;
    p.mu = rc.mu;
    p.m2 = rc.m2;
    p.t = rc.t;
    p.norm = rc.norm;
    p.h = rc.hfield;
    return p;
}

std::vector<double> grid_of(const RunConfig& rc) {
    if (!rc.t_values.empty()) {
        auto g = rc.t_values;
        std::sort(g.begin(), g.end());
        return g;
    }
    return default_t_grid(rc.t_lo, rc.t_hi, rc.per_decade);
}

std::string out_path(const RunConfig& rc, const std::string& name) {
    return rc.out_dir + "/" + name;
}

std::string num_row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double v : cells) s.push_back(io::format_double(v));
    return io::join_row(s);
}

json constants_json(const BoundConstants& c) {
    json j;
    j["c_sq_d2"] = c.c_sq_d2;
    j["c_sq_d3"] = c.c_sq_d3;
    j["c_eta_d2"] = c.c_eta_d2;
    j["c_eta_d3"] = c.c_eta_d3;
    j["c_gam_d2"] = c.c_gam_d2;
    j["c_gam_d3"] = c.c_gam_d3;
    j["c_psi_l1_d2"] = c.c_psi_l1_d2;
    j["c_cpsi_l1_d3"] = c.c_cpsi_l1_d3;
    j["c_cpsi_l2_d3"] = c.c_cpsi_l2_d3;
    j["c_bub5_d2"] = c.c_bub5_d2;
    j["c_bub5_d3"] = c.c_bub5_d3;
    j["provenance"] = c.provenance;
    return j;
}

/** effective configuration after flags and environment are applied */
void write_resolved(const RunConfig& rc, const std::string& cmd) {
    json r;
    r["command"] = cmd;
    r["config_digest"] = rc.digest;
    if (rc.has_lattice) r["lattice"] = {{"d", rc.d}, {"eps", rc.eps}, {"L", rc.boxl}};
    r["model"] = {{"lambda", rc.lambda},
                  {"mu", rc.mu},
                  {"m2", rc.m2},
                  {"t", scale_json(rc.t)},
                  {"normalisation", rc.norm == Normalisation::continuum ? "continuum" : "unit"},
                  {"h", rc.hfield}};
    r["sampler"] = {{"scheme", to_string(rc.chain.scheme)},
                    {"step_dt", rc.chain.step_dt},
                    {"n_burn", rc.chain.n_burn},
                    {"n_keep", rc.chain.n_keep},
                    {"thin", rc.chain.thin},
                    {"n_chains", rc.chain.n_chains},
                    {"seed", rc.chain.seed},
                    {"proposal_width", rc.chain.proposal_width},
                    {"batches", rc.chain.batches},
                    {"workers", rc.chain.workers}};
    json tv = json::array();
    for (double t : rc.t_values) tv.push_back(scale_json(t));
    r["grid"] = {{"t_lo", rc.t_lo},
                 {"t_hi", rc.t_hi},
                 {"per_decade", rc.per_decade},
                 {"t_values", tv},
                 {"nodes_per_dim", rc.quad.nodes_per_dim},
                 {"trapezoid_nodes", rc.quad.trapezoid_nodes},
                 {"halfwidth", rc.quad.halfwidth},
                 {"gate_rtol", rc.quad.gate_rtol},
                 {"cross_rtol", rc.quad.cross_rtol}};
    r["constants"] = constants_json(rc.consts);
    if (!rc.source.empty() || !rc.profile_input.empty())
        r["profile"] = {{"source", rc.source},
                        {"exact_norms", rc.exact_norms},
                        {"input", rc.profile_input},
                        {"chi_cap", scale_json(rc.chi_cap_override)}};
    if (rc.omodel_set) {
        json rows = json::array();
        for (int i = 0; i < rc.omodel.n; ++i) {
            json row = json::array();
            for (int k = 0; k < rc.omodel.n; ++k)
                row.push_back(rc.omodel.a[static_cast<std::size_t>(i * rc.omodel.n + k)]);
            rows.push_back(row);
        }
        r["oracle"] = {{"a", rows},
                       {"g", rc.omodel.g},
                       {"nu", rc.omodel.nu},
                       {"t", rc.omodel.inv_t > 0.0 ? scale_json(1.0 / rc.omodel.inv_t) : scale_json(INFINITY)},
                       {"h", rc.omodel.h}};
    }
    r["verify"] = {{"checks", rc.checks}, {"points", rc.points}, {"seed", rc.verify_seed}};
    // the directory itself is where this file lives; echoing it would make
    // otherwise identical runs into different bytes
    r["output"] = {{"samples", rc.write_samples}};
    io::write_text_atomic(out_path(rc, "resolved_config.json"), r.dump(2) + "\n");
}

void write_csv(const RunConfig& rc, const std::string& name, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::string text = header + "\n";
    for (const auto& row : rows) text += num_row(row) + "\n";
    io::write_text_atomic(out_path(rc, name), text);
}

std::string coord_header(int d, const char* stem) {
    std::string h;
    for (int i = 0; i < d; ++i) h += std::string(stem) + "_" + std::to_string(i + 1) + ",";
    return h;
}

// --------------------------------------------------------------- profiles

SusceptibilityProfile build_profile(const RunConfig& rc) {
    if (rc.source == "gaussian") return gaussian_profile(rc.m2, grid_of(rc));
    if (rc.source == "skeleton") {
        const auto spec = lattice_of(rc, "skeleton profile");
        return skeleton_profile(spec, rc.lambda, rc.mu, rc.m2, rc.exact_norms, rc.consts, grid_of(rc));
    }
    if (rc.source == "mc") {
        if (rc.t_values.empty())
            throw ConfigError("mc profiles need explicit grid.t_values scales");
        const auto spec = lattice_of(rc, "mc profile");
        auto prof = mc_profile(params_of(rc, spec), rc.chain, grid_of(rc));
        if (std::isfinite(rc.chi_cap_override) && rc.chi_cap_override < prof.chi_cap) {
            prof.chi_cap = rc.chi_cap_override;
            char buf[64];
            std::snprintf(buf, sizeof buf, "user_cap:%.17g", rc.chi_cap_override);
            prof.tail_rule = buf;
        }
        return prof;
    }
    throw ConfigError("profile.source must be gaussian|skeleton|mc, got '" + rc.source + "'");
}

json profile_json(const SusceptibilityProfile& p) {
    json j;
    j["t"] = p.t;
    j["chi"] = p.chi;
    j["chi_stderr"] = p.chi_stderr;
    j["provenance"] = p.provenance;
    j["m2"] = p.m2;
    j["chi_cap"] = scale_json(p.chi_cap);
    j["head_constant"] = p.head_constant;
    j["head_certified"] = p.head_certified;
    j["source"] = p.source;
    j["tail_rule"] = p.tail_rule;
    return j;
}

SusceptibilityProfile profile_from_json(const json& j) {
    expect_keys(j, "profile file",
                {"t", "chi", "chi_stderr", "provenance", "m2", "chi_cap", "head_constant",
                 "head_certified", "source", "tail_rule"});
    SusceptibilityProfile p;
    p.t = number_list(j.at("t"), "profile.t");
    p.chi = number_list(j.at("chi"), "profile.chi");
    p.chi_stderr = number_list(j.at("chi_stderr"), "profile.chi_stderr");
    const auto& prov = j.at("provenance");
    if (!prov.is_array()) throw ConfigError("profile.provenance must be an array");
    for (const auto& e : prov) {
        if (!e.is_string()) throw ConfigError("profile.provenance must hold strings");
        p.provenance.push_back(e.get<std::string>());
    }
    p.m2 = number_at(j, "m2", "profile");
    p.chi_cap = scale_of(j.at("chi_cap"), "profile.chi_cap");
    p.head_constant = number_at(j, "head_constant", "profile");
    p.head_certified = bool_at(j, "head_certified", "profile");
    p.source = string_at(j, "source", "profile");
    p.tail_rule = string_at(j, "tail_rule", "profile");
    return p;
}

// --------------------------------------------------------------- commands

int cmd_covariance(const RunConfig& rc) {
    const auto spec = lattice_of(rc, "covariance");
    const MassSchedule sched{rc.m2, rc.t};
    const auto kern = covariance(spec, sched);
    const auto mom = covariance_moments(kern);

    std::string text = coord_header(spec.d, "coord") + "value\n";
    for (std::int64_t s = 0; s < spec.volume(); ++s) {
        const auto c = spec.coords(s);
        std::vector<double> row;
        for (int i = 0; i < spec.d; ++i) row.push_back(c[static_cast<std::size_t>(i)]);
        row.push_back(kern.values[s]);
        text += num_row(row) + "\n";
    }
    io::write_text_atomic(out_path(rc, "covariance.csv"), text);

    json m;
    m["m2"] = sched.m2;
    m["t"] = scale_json(sched.t);
    m["m2_t"] = sched.m2_t();
    m["value0"] = mom.value0;
    m["l1"] = mom.l1;
    m["l2sq"] = mom.l2sq;
    m["sq_l1"] = mom.sq_l1;
    m["cube_l1"] = mom.cube_l1;
    io::write_text_atomic(out_path(rc, "covariance.json"), m.dump(2) + "\n");
    write_resolved(rc, "covariance");
    return 0;
}

int cmd_counterterms(const RunConfig& rc) {
    const auto spec = lattice_of(rc, "counterterms");
    const auto lambdas = rc.ct_lambda.empty() ? std::vector<double>{rc.lambda} : rc.ct_lambda;
    const auto masses = rc.ct_m2.empty() ? std::vector<double>{rc.m2} : rc.ct_m2;
    const auto scales = rc.ct_t.empty() ? std::vector<double>{rc.t} : rc.ct_t;

    std::vector<std::vector<double>> ct_rows;
    for (double m2 : masses)
        for (double lam : lambdas) {
            const auto r = counterterm(spec, lam, m2);
            ct_rows.push_back({static_cast<double>(spec.d), spec.eps, spec.L, m2, lam, r.a_eps,
                               r.tadpole, r.sunset});
        }
    write_csv(rc, "counterterms.csv", "d,eps,L,m2,lambda,a_eps,tadpole,sunset", ct_rows);

    std::string gaps = "d,eps,L,m2,t,eta_t,gamma_t\n";
    for (double m2 : masses)
        for (double t : scales) {
            const auto g = counterterm_gaps(spec, m2, t);
            std::vector<double> head{static_cast<double>(spec.d), spec.eps, spec.L, m2};
            gaps += num_row(head) + "," + (std::isinf(t) ? "inf" : io::format_double(t)) +
                    "," + io::format_double(g.eta_t) + "," + io::format_double(g.gamma_t) + "\n";
        }
    io::write_text_atomic(out_path(rc, "gaps.csv"), gaps);
    write_resolved(rc, "counterterms");
    return 0;
}

json chain_json(const ChainDiagnostics& c) {
    json j;
    j["acceptance"] = c.acceptance;
    j["n_burn_used"] = c.n_burn_used;
    j["stabilised"] = c.stabilised;
    j["proposal_width"] = c.proposal_width;
    j["action_mean"] = c.action_mean;
    return j;
}

int cmd_sample(const RunConfig& rc) {
    const auto spec = lattice_of(rc, "sample");
    const auto p = params_of(rc, spec);
    const auto est = estimate_two_point(p, rc.chain);

    std::string corr = coord_header(spec.d, "r") + "s_hat,stderr\n";
    for (std::int64_t s = 0; s < spec.volume(); ++s) {
        const auto c = spec.coords(s);
        std::vector<double> row;
        for (int i = 0; i < spec.d; ++i) row.push_back(c[static_cast<std::size_t>(i)]);
        row.push_back(est.s_hat[s]);
        row.push_back(est.s_stderr[s]);
        corr += num_row(row) + "\n";
    }
    io::write_text_atomic(out_path(rc, "correlation.csv"), corr);
    write_csv(rc, "chi.csv", "chi_hat,chi_stderr,ess", {{est.chi_hat, est.chi_stderr, est.ess}});

    json rep;
    rep["chi_hat"] = est.chi_hat;
    rep["chi_stderr"] = est.chi_stderr;
    rep["ess"] = est.ess;
    rep["quality_warning"] = est.quality_warning;
    rep["warning"] = est.warning;
    json chains = json::array();
    for (const auto& c : est.chains) chains.push_back(chain_json(c));
    rep["chains"] = chains;
    io::write_text_atomic(out_path(rc, "sampler_report.json"), rep.dump(2) + "\n");

    if (rc.write_samples) {
        const auto sys = site_system(p);
        std::string text = "chain,sweep,site,value\n";
        for (int chain = 0; chain < rc.chain.n_chains; ++chain) {
            run_chain(sys, rc.chain, chain, [&](std::int64_t k, const std::vector<double>& phi) {
                for (std::size_t x = 0; x < phi.size(); ++x)
                    text += std::to_string(chain) + "," + std::to_string(k) + "," +
                            std::to_string(x) + "," + io::format_double(phi[x]) + "\n";
            });
        }
        io::write_text_atomic(out_path(rc, "samples.csv"), text);
    }
    write_resolved(rc, "sample");
    return 0;
}

void write_profile_files(const RunConfig& rc, const SusceptibilityProfile& prof) {
    std::string csv = "t,chi,provenance,stderr\n";
    for (std::size_t i = 0; i < prof.t.size(); ++i)
        csv += io::format_double(prof.t[i]) + "," + io::format_double(prof.chi[i]) + "," +
               prof.provenance[i] + "," + io::format_double(prof.chi_stderr[i]) + "\n";
    io::write_text_atomic(out_path(rc, "chi_profile.csv"), csv);
    io::write_text_atomic(out_path(rc, "profile.json"), profile_json(prof).dump(2) + "\n");
}

int cmd_chi_profile(const RunConfig& rc) {
    const auto prof = build_profile(rc);
    write_profile_files(rc, prof);

    if (rc.source == "skeleton") {
        const auto spec = lattice_of(rc, "skeleton profile");
        const auto grid = grid_of(rc);
        const auto win = rc.exact_norms
                             ? small_scale_window_exact(spec, rc.lambda, rc.mu, rc.m2, grid)
                             : small_scale_window(spec.d, rc.lambda, rc.mu, rc.m2, rc.consts, grid);
        json b;
        b["constants"] = constants_json(rc.consts);
        b["window"] = {{"d", win.d},           {"lambda", win.lambda},
                       {"mu", win.mu},         {"m2", win.m2},
                       {"c0", win.c0},         {"e_bar", win.e_bar},
                       {"t0", win.t0},         {"window_empty", win.window_empty},
                       {"all_scales", win.all_scales}, {"mode", win.mode}};
        if (!win.window_empty) {
            const double t_rep = win.all_scales ? INFINITY : win.t0;
            const auto terms = rc.exact_norms ? exact_terms(spec, rc.m2, t_rep, rc.mu)
                                              : shape_terms(spec.d, rc.m2, t_rep, rc.mu, rc.consts);
            const auto sus = susceptibility_l1_bound(rc.lambda, terms, win.e_bar);
            b["l1_bound"] = {{"t", scale_json(t_rep)},
                             {"p_value", sus.p_value},
                             {"iterations", sus.iterations},
                             {"refined", sus.refined},
                             {"converged", sus.converged},
                             {"polynomial", {{"coeffs", sus.poly.coeffs},
                                             {"provenance", sus.poly.provenance},
                                             {"degree", sus.poly.degree()}}}};
        }
        io::write_text_atomic(out_path(rc, "bounds.json"), b.dump(2) + "\n");
    }
    write_resolved(rc, "chi-profile");
    return 0;
}

int cmd_lsi_bound(const RunConfig& rc) {
    SusceptibilityProfile prof;
    std::string profile_digest;
    if (!rc.profile_input.empty()) {
        const std::string text = io::read_text(rc.profile_input);
        profile_digest = io::content_digest(text);
        json j;
        try {
            j = json::parse(text);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("profile file is not valid json: ") + e.what());
        }
        prof = profile_from_json(j);
    } else {
        prof = build_profile(rc);
        write_profile_files(rc, prof);
        const std::string text = profile_json(prof).dump(2) + "\n";
        profile_digest = io::content_digest(text);
    }

    const auto rep = lsi_lower_bound(prof);
    json r;
    r["profile_digest"] = profile_digest;
    r["has_gamma_lower"] = rep.has_gamma_lower;
    if (rep.has_gamma_lower) r["gamma_lower"] = rep.gamma_lower;
    r["has_conservative"] = rep.has_conservative;
    if (rep.has_conservative) r["gamma_lower_conservative"] = rep.gamma_lower_conservative;
    r["kappa_integral"] = rep.kappa_integral;
    r["head_value"] = rep.head_value;
    r["interior_value"] = rep.interior_value;
    r["tail_value"] = rep.tail_value;
    r["bracket_gap"] = rep.bracket_gap;
    r["has_gamma_upper"] = rep.has_gamma_upper;
    if (rep.has_gamma_upper) r["gamma_upper"] = rep.gamma_upper;
    r["profile_source"] = rep.profile_source;
    r["tail_rule"] = rep.tail_rule;
    r["diagnostics"] = rep.diagnostics;
    r["divergence_decade"] = rep.divergence_decade;
    r["cells"] = rep.cells;
    io::write_text_atomic(out_path(rc, "lsi_report.json"), r.dump(2) + "\n");
    write_resolved(rc, "lsi-bound");
    return 0;
}

GeneralModel default_two_site() {
    GeneralModel m;
    m.n = 2;
    m.a = {2.0, -1.0, -1.0, 2.0};
    m.g = 1.0;
    m.nu = 0.0;
    m.inv_t = 1.0;
    return m;
}

GeneralModel default_three_site() {
    GeneralModel m;
    m.n = 3;
    m.a = {2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0};
    m.g = 1.0;
    m.nu = 0.0;
    m.inv_t = 1.0;
    return m;
}

json check_entry(double worst, double tol, bool pass) {
    json j;
    j["worst"] = worst;
    j["tol"] = tol;
    j["pass"] = pass;
    return j;
}

int cmd_verify(const RunConfig& rc) {
    json checks;
    bool all_pass = true;
    auto record = [&](const char* name, double worst, double tol, bool pass) {
        checks[name] = check_entry(worst, tol, pass);
        all_pass = all_pass && pass;
    };

    const bool want = [&](const char* name) {
        return std::find(rc.checks.begin(), rc.checks.end(), name) != rc.checks.end();
    }("oracle");
    if (want) {
        GeneralModel m = rc.omodel_set ? rc.omodel : default_two_site();
        if (m.inv_t <= 0.0) throw ConfigError("the oracle check needs a finite oracle.t");
        CounterRng rng(rc.verify_seed, 0, 0);
        double fd = 0.0, quad = 0.0, sig_phi = 0.0, dss_min = 0.0, dss_max = 0.0;
        double res1 = 0.0, res2 = 0.0;
        for (int k = 0; k < rc.points; ++k) {
            std::vector<double> phi(static_cast<std::size_t>(m.n));
            for (auto& x : phi) x = 1.5 * (2.0 * rng.uniform() - 1.0);
            const auto r = verify_hessian_criterion(m, phi, rc.quad);
            fd = std::max(fd, r.max_abs_diff);
            quad = std::min(quad, r.quad_form_min_eig);
            sig_phi = std::max(sig_phi, r.sigma_radius_phi - r.sigma_radius_zero);
            dss_min = std::min(dss_min, r.dss_min_entry);
            dss_max = std::max(dss_max, r.dss_max_excess);
            res1 = std::max(res1, r.resolvent_first_err);
            res2 = std::max(res2, r.resolvent_second_err);
        }
        record("hessian_fd", fd, 1e-5, fd <= 1e-5);
        record("quad_form_lower", quad, -1e-8, quad >= -1e-8);
        record("sigma_monotone", sig_phi, 1e-8, sig_phi <= 1e-8);
        record("dss_nonneg", dss_min, -1e-6, dss_min >= -1e-6);
        record("dss_dominance", dss_max, 1e-6, dss_max <= 1e-6);
        record("resolvent_first", res1, 1e-6, res1 <= 1e-6);
        record("resolvent_second", res2, 1e-6, res2 <= 1e-6);
    }

    if (std::find(rc.checks.begin(), rc.checks.end(), "dss") != rc.checks.end()) {
        std::vector<GeneralModel> models;
        if (rc.omodel_set)
            models.push_back(rc.omodel);
        else {
            models.push_back(default_two_site());
            models.push_back(default_three_site());
        }
        double worst_neg = 0.0, worst_excess = 0.0;
        CounterRng rng(rc.verify_seed, 1, 0);
        for (auto m : models) {
            m.h.clear();
            const auto s0 = truncated_two_point(m, rc.quad);
            for (int k = 0; k < rc.points; ++k) {
                auto tilted = m;
                tilted.h.resize(static_cast<std::size_t>(m.n));
                for (auto& x : tilted.h) x = 2.0 * rng.uniform() - 1.0;
                const auto sh = truncated_two_point(tilted, rc.quad);
                for (std::size_t i = 0; i < sh.size(); ++i) {
                    worst_neg = std::min(worst_neg, sh[i]);
                    worst_excess = std::max(worst_excess, sh[i] - s0[i]);
                }
            }
        }
        record("tilted_sigma_nonneg", worst_neg, -1e-6, worst_neg >= -1e-6);
        record("tilted_sigma_dominance", worst_excess, 1e-6, worst_excess <= 1e-6);
    }

    if (std::find(rc.checks.begin(), rc.checks.end(), "bfs") != rc.checks.end()) {
        const auto spec = lattice_of(rc, "bfs check");
        const auto p = params_of(rc, spec);
        const auto est = estimate_two_point(p, rc.chain);
        const auto kern = covariance(spec, MassSchedule{rc.m2, rc.t});
        const auto rep = verify_bfs(est, kern, p);

        std::string csv = coord_header(spec.d, "r") + "lower_slack,upper_slack,stderr\n";
        for (std::int64_t s = 0; s < spec.volume(); ++s) {
            const auto c = spec.coords(s);
            std::vector<double> row;
            for (int i = 0; i < spec.d; ++i) row.push_back(c[static_cast<std::size_t>(i)]);
            const auto si = static_cast<std::size_t>(s);
            row.push_back(rep.lower_slack[si]);
            row.push_back(rep.upper_slack[si]);
            row.push_back(std::max(rep.lower_stderr[si], rep.upper_stderr[si]));
            csv += num_row(row) + "\n";
        }
        io::write_text_atomic(out_path(rc, "bfs_slack.csv"), csv);
        const double worst = std::min(rep.worst_lower_sigma, rep.worst_upper_sigma);
        record("bfs_sandwich", worst, -3.0, !rep.violation);
    }

    json report;
    report["pass"] = all_pass;
    report["checks"] = checks;
    report["points"] = rc.points;
    report["seed"] = rc.verify_seed;
    io::write_text_atomic(out_path(rc, "oracle_report.json"), report.dump(2) + "\n");
    write_resolved(rc, "verify");
    if (!all_pass) throw InequalityViolation("verification failed, see oracle_report.json");
    return 0;
}

// ------------------------------------------------------------------- driver

struct Flags {
    std::string config;
    std::string out;
    int workers = 0;
    std::int64_t seed = -1;
};

int dispatch(const std::string& cmd, const Flags& flags) {
    RunConfig rc = load_config(flags.config);
    if (!flags.out.empty()) rc.out_dir = flags.out;
    if (flags.seed >= 0) {
        rc.chain.seed = static_cast<std::uint64_t>(flags.seed);
        rc.verify_seed = static_cast<std::uint64_t>(flags.seed);
    }
    if (flags.workers > 0)
        rc.chain.workers = flags.workers;
    else if (!rc.config_workers_set) {
        if (const char* env = std::getenv("PHI4_LSI_WORKERS")) {
            const int w = std::atoi(env);
            if (w > 0) rc.chain.workers = w;
        }
    }
    std::error_code ec;
    std::filesystem::create_directories(rc.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + rc.out_dir + ": " + ec.message());

    if (cmd == "covariance") return cmd_covariance(rc);
    if (cmd == "counterterms") return cmd_counterterms(rc);
    if (cmd == "sample") return cmd_sample(rc);
    if (cmd == "chi-profile") return cmd_chi_profile(rc);
    if (cmd == "lsi-bound") return cmd_lsi_bound(rc);
    if (cmd == "verify") return cmd_verify(rc);
    throw ConfigError("unknown command " + cmd);
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"lattice phi^4 susceptibility and log-Sobolev bound toolkit"};
    app.require_subcommand(1);

    Flags flags;
    std::vector<CLI::App*> subs;
    for (const char* name : {"covariance", "counterterms", "sample", "chi-profile", "lsi-bound", "verify"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", flags.config, "json run configuration");
        sub->add_option("--out", flags.out, "output directory (overrides output.dir)");
        sub->add_option("--workers", flags.workers, "worker threads (overrides config and env)");
        sub->add_option("--seed", flags.seed, "sampler seed (overrides sampler.seed)");
        subs.push_back(sub);
    }
    subs[0]->description("free covariance kernel and its norms");
    subs[1]->description("counterterm table and scale gaps");
    subs[2]->description("mcmc two-point estimate");
    subs[3]->description("susceptibility profile over scales");
    subs[4]->description("log-Sobolev lower bound from a profile");
    subs[5]->description("oracle, monotonicity and sandwich checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        return dispatch(app.get_subcommands().front()->get_name(), flags);
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const InequalityViolation& e) {
        std::fprintf(stderr, "inequality violation: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace phi4
