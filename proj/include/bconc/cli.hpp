// cli.hpp
//
// Run configuration (a JSON document, comments allowed) and the five
// commands of the `bconc` tool: mu, solve, sweep, verify, coercivity.
// Everything takes explicit streams so the commands run in-process in tests.

#ifndef BCONC_CLI_HPP
#define BCONC_CLI_HPP

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "errors.hpp"
#include "study.hpp"

namespace bconc::cli {

using json = nlohmann::json;

/// Stable process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_config = 1,
    exit_not_converged = 2,
    exit_indefinite = 3,
    exit_verification = 4,
};

// ---------------------------------------------------------------------------
// Configuration document

/// Every recognised key with its default value. A user document may only
/// use keys that appear here. Tagged objects ({"kind", "params"}) replace
/// the default wholesale.
inline json default_document()
{
    return json::parse(R"({
      "problem": {
        "mode": "eps",
        "eps": 0.1,
        "lambda": 5.0,
        "R": 2.0,
        "f0": {"kind": "saturating", "params": [1.0]},
        "f1": {"kind": "affine", "params": [0.0, 1.0]}
      },
      "geometry": {
        "n": 64,
        "profile": {"kind": "pure-periodic", "params": [2.0, 1.0, 6.283185307179586]}
      },
      "potential": {
        "kind": "canonical",
        "V0": {"kind": "constant", "params": [1.0]}
      },
      "solver": {
        "method": "picard",
        "tol": 1e-10,
        "max_iter": 200,
        "damping": 1.0,
        "linear_tol": 1e-12,
        "check_coercivity": true
      },
      "study": {
        "eps_list": [0.2, 0.1, 0.05, 0.025],
        "c_mesh": 8.0,
        "output": "sweep.csv",
        "lemma_eps_list": [0.1, 0.05, 0.025, 0.0125, 0.00625],
        "lemma_mesh_n": 64,
        "random_fields": 10,
        "seed": 20240611,
        "lemma_output": "lemmas.csv",
        "lambda_min": 0.001,
        "lambda_max": 10.0
      }
    })");
}

namespace detail {

/// {"kind": ..., "params": [...]} with no other keys.
inline bool is_tagged(const json& j)
{
    if (!j.is_object() || !j.contains("kind"))
        return false;
    for (const auto& [k, v] : j.items())
        if (k != "kind" && k != "params")
            return false;
    return true;
}

inline void merge_into(json& dst, const json& src, const std::string& prefix)
{
    if (!src.is_object())
        throw ConfigError(prefix.empty() ? "<root>" : prefix, "expected an object");
    for (const auto& [key, value] : src.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!dst.contains(key))
            throw ConfigError(path, "unknown key");
        json& slot = dst[key];
        if (slot.is_object() && !is_tagged(slot)) {
            merge_into(slot, value, path);
        } else if (is_tagged(slot) && value.is_object()) {
            for (const auto& [k, v] : value.items())
                if (k != "kind" && k != "params")
                    throw ConfigError(path + "." + k, "unknown key (tagged entries take kind and params)");
            slot = value;
        } else {
            slot = value;
        }
    }
}

inline const json& at_path(const json& doc, const std::string& path)
{
    const json* j = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string part = path.substr(start, dot - start);
        if (!j->is_object() || !j->contains(part))
            throw ConfigError(path, "missing key");
        j = &(*j)[part];
        if (dot == std::string::npos)
            return *j;
        start = dot + 1;
    }
}

inline double get_number(const json& doc, const std::string& path)
{
    const json& j = at_path(doc, path);
    if (!j.is_number())
        throw ConfigError(path, "expected a number, got " + j.dump());
    return j.get<double>();
}

inline std::size_t get_count(const json& doc, const std::string& path, std::size_t min_value)
{
    const json& j = at_path(doc, path);
    if (!j.is_number_integer() && !(j.is_number_float() && std::floor(j.get<double>()) == j.get<double>()))
        throw ConfigError(path, "expected an integer, got " + j.dump());
    const double v = j.get<double>();
    if (!(v >= static_cast<double>(min_value)) || v > 1e9)
        throw ConfigError(path, "must be an integer >= " + std::to_string(min_value));
    return static_cast<std::size_t>(v);
}

inline std::string get_string(const json& doc, const std::string& path)
{
    const json& j = at_path(doc, path);
    if (!j.is_string())
        throw ConfigError(path, "expected a string, got " + j.dump());
    return j.get<std::string>();
}

inline bool get_bool(const json& doc, const std::string& path)
{
    const json& j = at_path(doc, path);
    if (!j.is_boolean())
        throw ConfigError(path, "expected true or false, got " + j.dump());
    return j.get<bool>();
}

inline std::vector<double> get_list(const json& doc, const std::string& path)
{
    const json& j = at_path(doc, path);
    if (!j.is_array())
        throw ConfigError(path, "expected a list of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number())
            throw ConfigError(path, "expected a list of numbers, found " + v.dump());
        out.push_back(v.get<double>());
    }
    return out;
}

/// (kind, params) of a tagged entry. A bare number means {"kind": "constant", "params": [x]}.
inline std::pair<std::string, std::vector<double>> get_tagged(const json& doc, const std::string& path)
{
    const json& j = at_path(doc, path);
    if (j.is_number())
        return {"constant", {j.get<double>()}};
    if (!is_tagged(j))
        throw ConfigError(path + ".kind", "missing catalog tag");
    if (!j["kind"].is_string())
        throw ConfigError(path + ".kind", "expected a string");
    std::vector<double> params;
    if (j.contains("params"))
        params = get_list(doc, path + ".params");
    return {j["kind"].get<std::string>(), params};
}

inline void expect_params(const std::string& path, const std::string& kind, const std::vector<double>& p,
                          std::size_t lo, std::size_t hi)
{
    if (p.size() < lo || p.size() > hi) {
        std::string want = lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi);
        throw ConfigError(path + ".params", "'" + kind + "' takes " + want + " parameter(s), got " +
                                                std::to_string(p.size()));
    }
}

inline Nonlinearity parse_nonlinearity(const json& doc, const std::string& path, double R)
{
    const auto [kind, p] = get_tagged(doc, path);
    if (kind == "zero") {
        expect_params(path, kind, p, 0, 0);
        return Nonlinearity::zero(R);
    }
    if (kind == "affine") {
        expect_params(path, kind, p, 2, 2);
        return Nonlinearity::affine(p[0], p[1], R);
    }
    if (kind == "logistic") {
        expect_params(path, kind, p, 0, 0);
        return Nonlinearity::logistic(R);
    }
    if (kind == "saturating") {
        expect_params(path, kind, p, 0, 1);
        return Nonlinearity::saturating(p.empty() ? 1.0 : p[0], R);
    }
    throw ConfigError(path + ".kind",
                      "unknown nonlinearity tag '" + kind + "' (known: zero, affine, logistic, saturating)");
}

inline OscillationProfile parse_profile(const json& doc)
{
    const std::string path = "geometry.profile";
    const auto [kind, p] = get_tagged(doc, path);
    try {
        if (kind == "constant") {
            expect_params(path, kind, p, 1, 1);
            return OscillationProfile::constant(p[0]);
        }
        if (kind == "pure-periodic") {
            expect_params(path, kind, p, 2, 3);
            return OscillationProfile::pure_periodic(p[0], p[1], p.size() > 2 ? p[2] : 1.0);
        }
        if (kind == "x-modulated") {
            expect_params(path, kind, p, 0, 1);
            return OscillationProfile::x_modulated(p.empty() ? 1.0 : p[0]);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ".params", e.what());
    }
    throw ConfigError(path + ".kind",
                      "unknown profile tag '" + kind + "' (known: constant, pure-periodic, x-modulated)");
}

inline std::function<double(double)> parse_V0(const json& doc)
{
    const std::string path = "potential.V0";
    const auto [kind, p] = get_tagged(doc, path);
    if (kind == "constant") {
        expect_params(path, kind, p, 1, 1);
        return [c = p[0]](double) { return c; };
    }
    if (kind == "affine") {
        expect_params(path, kind, p, 2, 2);
        return [a = p[0], b = p[1]](double x) { return a + b * x; };
    }
    if (kind == "cosine") {
        expect_params(path, kind, p, 2, 2);
        return [a = p[0], b = p[1]](double x) { return a + b * std::cos(std::numbers::pi * x); };
    }
    throw ConfigError(path + ".kind", "unknown V0 tag '" + kind + "' (known: constant, affine, cosine)");
}

inline PotentialKind parse_potential_kind(const json& doc)
{
    const std::string k = get_string(doc, "potential.kind");
    if (k == "zero")
        return PotentialKind::zero;
    if (k == "canonical")
        return PotentialKind::canonical;
    if (k == "y-weighted")
        return PotentialKind::y_weighted;
    throw ConfigError("potential.kind", "unknown potential tag '" + k + "' (known: zero, canonical, y-weighted)");
}

inline void check_eps_list(const std::vector<double>& list, const std::string& path, double G1)
{
    if (list.empty())
        throw ConfigError(path, "eps list is empty");
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (!(list[i] > 0.0) || !std::isfinite(list[i]))
            throw ConfigError(path, "entry " + std::to_string(i) + " is not a positive number");
        if (list[i] * G1 >= 1.0)
            throw ConfigError(path, "eps * G1 >= 1 at entry " + std::to_string(i) + " (strip leaves the square)");
        if (i > 0 && !(list[i] < list[i - 1]))
            throw ConfigError(path, "eps list must be strictly decreasing");
    }
}

} // namespace detail

/// A validated configuration. Construction checks every key before any
/// computation starts.
struct RunConfig {
    json document;

    std::string mode;  // "eps" or "limit"
    double eps = 0.1;
    double lambda = 5.0;
    double R = 2.0;
    Nonlinearity f0 = Nonlinearity::zero();
    Nonlinearity f1 = Nonlinearity::zero();
    std::size_t n = 64;
    OscillationProfile profile = OscillationProfile::constant(1.0);
    PotentialKind potential_kind = PotentialKind::canonical;
    std::function<double(double)> V0;
    SolveOptions opts;

    std::vector<double> eps_list;
    double c_mesh = 8.0;
    std::string output;
    std::vector<double> lemma_eps_list;
    std::size_t lemma_mesh_n = 64;
    std::size_t random_fields = 10;
    std::uint64_t seed = 20240611;
    std::string lemma_output;
    double lambda_min = 1e-3, lambda_max = 10.0;

    /// The eps problem, or the limit problem with mu scaled by `mu_scale`.
    ProblemSpec problem(double mu_scale = 1.0) const
    {
        ProblemSpec s;
        s.lambda = lambda;
        s.f0 = f0;
        s.f1 = f1;
        const MuCoefficient mu = MuCoefficient::from_profile(profile);
        const PotentialFamily family = make_family(potential_kind, V0, mu, profile);
        if (mode == "eps")
            s.mode = EpsMode{eps, profile, family};
        else
            s.mode = LimitMode{mu.scaled(mu_scale), family.boundary()};
        return s;
    }
};

inline RunConfig parse_run_config(const json& doc)
{
    using namespace detail;
    RunConfig c;
    c.document = doc;

    c.R = get_number(doc, "problem.R");
    if (!(c.R > 0.0) || !std::isfinite(c.R))
        throw ConfigError("problem.R", "cut-off radius R must be positive");
    c.lambda = get_number(doc, "problem.lambda");
    if (!std::isfinite(c.lambda))
        throw ConfigError("problem.lambda", "lambda must be finite");
    c.f0 = parse_nonlinearity(doc, "problem.f0", c.R);
    c.f1 = parse_nonlinearity(doc, "problem.f1", c.R);

    c.n = get_count(doc, "geometry.n", 1);
    c.profile = parse_profile(doc);
    c.potential_kind = parse_potential_kind(doc);
    c.V0 = parse_V0(doc);

    c.mode = get_string(doc, "problem.mode");
    if (c.mode != "eps" && c.mode != "limit")
        throw ConfigError("problem.mode", "unknown mode '" + c.mode + "' (known: eps, limit)");
    c.eps = get_number(doc, "problem.eps");
    if (!(c.eps >= min_eps) || !std::isfinite(c.eps))
        throw ConfigError("problem.eps", "eps must be a positive number of at least 1e-4");
    if (c.eps * c.profile.G1() >= 1.0)
        throw ConfigError("problem.eps", "eps * G1 >= 1 (strip leaves the square)");

    const std::string method = get_string(doc, "solver.method");
    if (method == "picard")
        c.opts.method = SolveMethod::picard;
    else if (method == "newton")
        c.opts.method = SolveMethod::newton;
    else
        throw ConfigError("solver.method", "unknown method '" + method + "' (known: picard, newton)");
    c.opts.tol_rel = get_number(doc, "solver.tol");
    if (!(c.opts.tol_rel > 0.0))
        throw ConfigError("solver.tol", "tolerance must be positive");
    c.opts.max_iter = get_count(doc, "solver.max_iter", 1);
    c.opts.damping = get_number(doc, "solver.damping");
    if (!(c.opts.damping > 0.0 && c.opts.damping <= 1.0))
        throw ConfigError("solver.damping", "damping must lie in (0, 1]");
    c.opts.linear_tol = get_number(doc, "solver.linear_tol");
    if (!(c.opts.linear_tol > 0.0))
        throw ConfigError("solver.linear_tol", "tolerance must be positive");
    c.opts.check_coercivity = get_bool(doc, "solver.check_coercivity");

    c.eps_list = get_list(doc, "study.eps_list");
    check_eps_list(c.eps_list, "study.eps_list", c.profile.G1());
    for (double e : c.eps_list)
        if (e < min_eps)
            throw ConfigError("study.eps_list", "eps below 1e-4 is outside the supported range");
    c.c_mesh = get_number(doc, "study.c_mesh");
    if (!(c.c_mesh >= 8.0) || !std::isfinite(c.c_mesh))
        throw ConfigError("study.c_mesh", "c_mesh must be at least 8");
    c.output = get_string(doc, "study.output");
    c.lemma_eps_list = get_list(doc, "study.lemma_eps_list");
    check_eps_list(c.lemma_eps_list, "study.lemma_eps_list", c.profile.G1());
    c.lemma_mesh_n = get_count(doc, "study.lemma_mesh_n", 2);
    c.random_fields = get_count(doc, "study.random_fields", 1);
    {
        const json& s = at_path(doc, "study.seed");
        if (!s.is_number_unsigned())
            throw ConfigError("study.seed", "seed must be a non-negative integer");
        c.seed = s.get<std::uint64_t>();
    }
    c.lemma_output = get_string(doc, "study.lemma_output");
    c.lambda_min = get_number(doc, "study.lambda_min");
    c.lambda_max = get_number(doc, "study.lambda_max");
    if (!(c.lambda_min < c.lambda_max))
        throw ConfigError("study.lambda_min", "lambda_min must be below lambda_max");
    return c;
}

/// Parses JSON text (comments allowed). Syntax errors become ConfigError
/// with key "<document>".
inline json parse_document(const std::string& text)
{
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", e.what());
    }
}

/// key.path=value, value read as JSON when it parses and as a string otherwise.
/// Setting a `kind` drops the sibling `params`, so the tag's defaults apply
/// unless params are set too.
inline void apply_override(json& doc, const std::string& assignment)
{
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError(assignment, "override must have the form key.path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* j = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string part = path.substr(start, dot - start);
        const bool params_slot = dot == std::string::npos && part == "params" && detail::is_tagged(*j);
        if (!j->is_object() || (!j->contains(part) && !params_slot))
            throw ConfigError(path, "unknown key");
        if (dot == std::string::npos) {
            if (part == "kind")
                j->erase("params");
            (*j)[part] = value;
            return;
        }
        j = &(*j)[part];
        start = dot + 1;
    }
}

/// Defaults, then the config file, then overrides in order.
inline RunConfig load_run_config(const std::optional<std::string>& path,
                                 const std::vector<std::string>& overrides)
{
    json doc = default_document();
    if (path) {
        std::ifstream f(*path, std::ios::binary);
        if (!f)
            throw ConfigError("--config", "cannot open '" + *path + "'");
        std::ostringstream ss;
        ss << f.rdbuf();
        detail::merge_into(doc, parse_document(ss.str()), "");
    }
    for (const auto& o : overrides)
        apply_override(doc, o);
    return parse_run_config(doc);
}

// ---------------------------------------------------------------------------
// Field files

/// "n vertex_count" on the first line, then one value per vertex in vertex
/// order, 17 significant digits.
inline std::string format_field(const FEField& u)
{
    std::string out = std::to_string(u.mesh->cells_per_side()) + " " + std::to_string(u.values.size()) + "\n";
    char buf[40];
    for (double v : u.values) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        out += buf;
    }
    return out;
}

inline FEField parse_field(const std::string& text)
{
    std::istringstream in(text);
    std::size_t n = 0, count = 0;
    if (!(in >> n >> count) || n == 0)
        throw std::runtime_error("field file: bad header");
    auto mesh = build_uniform_mesh(n);
    if (count != mesh->num_vertices())
        throw std::runtime_error("field file: vertex count does not match n");
    std::vector<double> values(count);
    for (double& v : values)
        if (!(in >> v))
            throw std::runtime_error("field file: too few values");
    return FEField(mesh, std::move(values));
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot open '" + path + "' for writing: " + std::strerror(errno));
    f << text;
    f.close();
    if (!f)
        throw std::runtime_error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Commands

struct GlobalOptions {
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::size_t threads = 1;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    double debug_mu_scale = 1.0;
    bool timings = false;
};

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

/// Table of x, mu(x) at `samples` equispaced points of [0, 1].
inline int cmd_mu(const RunConfig& cfg, const GlobalOptions& g, std::size_t samples, Streams io)
{
    const MuCoefficient mu = MuCoefficient::from_profile(cfg.profile).scaled(g.debug_mu_scale);
    std::string text = "x,mu\n";
    char buf[80];
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(samples - 1);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x, mu(x));
        text += buf;
    }
    if (g.out)
        write_text(*g.out, text);
    else
        io.out << text;
    return exit_ok;
}

inline json report_json(const SolveReport& r)
{
    json j;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["final_residual"] = r.final_residual;
    j["defect"] = r.defect;
    if (std::isfinite(r.coercivity))
        j["coercivity"] = r.coercivity;
    else
        j["coercivity"] = nullptr;
    j["final_damping"] = r.final_damping;
    j["message"] = r.message;
    return j;
}

/// Solves on the n x n mesh, writes the field file and prints the report.
inline int cmd_solve(const RunConfig& cfg, const GlobalOptions& g, Streams io)
{
    const DiscreteSystem sys(build_uniform_mesh(cfg.n), cfg.problem(g.debug_mu_scale));
    const auto [u, report] = solve(sys, cfg.opts);
    const std::string path = g.out.value_or("solution.txt");
    write_text(path, format_field(u));
    json j = report_json(report);
    j["mode"] = cfg.mode;
    j["n"] = cfg.n;
    j["field"] = path;
    io.out << j.dump() << "\n";
    return report.converged ? exit_ok : exit_not_converged;
}

inline int cmd_sweep(const RunConfig& cfg, const GlobalOptions& g, Streams io)
{
    if (cfg.mode != "eps")
        throw ConfigError("problem.mode", "sweep needs mode 'eps'");
    SweepConfig sc;
    sc.eps_list = cfg.eps_list;
    sc.c_mesh = cfg.c_mesh;
    sc.spec = cfg.problem();
    sc.opts = cfg.opts;
    sc.threads = g.threads;
    sc.mu_scale = g.debug_mu_scale;
    sc.log = [&](const std::string& line) { io.err << line << "\n"; };
    const SweepResult r = run_eps_sweep(sc);
    const std::string path = g.out.value_or(cfg.output);
    write_csv(r, path, g.timings);
    bool all = true;
    for (const auto& row : r.rows)
        all = all && row.converged;
    if (!all)
        io.err << "some rows did not converge (converged = 0 in " << path << ")\n";
    return all ? exit_ok : exit_not_converged;
}

inline int cmd_verify(const RunConfig& cfg, const GlobalOptions& g, Streams io)
{
    LemmaConfig lc;
    lc.profile = cfg.profile;
    lc.family = cfg.potential_kind;
    lc.V0 = cfg.V0;
    lc.f0 = cfg.f0;
    lc.eps_list = cfg.lemma_eps_list;
    lc.mesh_n = cfg.lemma_mesh_n;
    lc.random_fields = cfg.random_fields;
    lc.seed = g.seed.value_or(cfg.seed);
    lc.mu_scale = g.debug_mu_scale;
    lc.threads = g.threads;
    const LemmaResult r = run_lemma_suite(lc);
    const std::string path = g.out.value_or(cfg.lemma_output);
    write_csv(to_table(r), path);
    for (const auto& c : r.checks)
        io.out << (c.passed ? "PASS " : "FAIL ") << c.column << ": " << c.detail << "\n";
    return r.all_passed() ? exit_ok : exit_verification;
}

inline int cmd_coercivity(const RunConfig& cfg, const GlobalOptions& g, double lambda_min, double lambda_max,
                          Streams io)
{
    if (!(lambda_min < lambda_max))
        throw ConfigError("--lambda-min", "lambda range is empty");
    auto mesh = build_uniform_mesh(cfg.n);
    const ProblemSpec spec = cfg.problem(g.debug_mu_scale);
    const CoercivityEstimate at = estimate_coercivity(DiscreteSystem(mesh, spec));
    const LambdaStarResult ls = find_lambda_star(mesh, spec, lambda_min, lambda_max);
    json j;
    j["mode"] = cfg.mode;
    j["n"] = cfg.n;
    j["lambda"] = cfg.lambda;
    j["theta"] = at.theta;
    j["theta_converged"] = at.converged;
    j["status"] = ls.status == LambdaStarStatus::found            ? "found"
                  : ls.status == LambdaStarStatus::coercive_at_min ? "coercive_at_min"
                                                                   : "indefinite_at_max";
    j["lambda_star"] = ls.lambda_star;
    j["bracket"] = {ls.lo, ls.hi};
    io.out << j.dump() << "\n";
    return exit_ok;
}

/// Parses the command line and runs one command. Arguments exclude the
/// program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Boundary-concentrated semilinear elliptic problems: solves, eps sweeps and lemma checks.",
                 "bconc"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    std::size_t x_samples = 11;
    std::optional<double> lambda_min, lambda_max;

    app.add_option("--config", g.config, "JSON configuration file (comments allowed)");
    app.add_option("--out", g.out, "Output path (default: from the config or the command)");
    app.add_option("--threads", g.threads, "Worker threads; output does not depend on it")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}));
    app.add_option("--seed", g.seed, "Seed for the random fields of `verify`");
    app.add_option("--set", g.overrides, "Override a config key: key.path=value (repeatable)")
        ->allow_extra_args(false);
    app.add_option("--debug-mu-scale", g.debug_mu_scale,
                   "Multiply the homogenised coefficient mu by this factor (negative control)")
        ->check(CLI::PositiveNumber);
    app.add_flag("--timings", g.timings, "Add wall_time to sweep CSV and report elapsed time");

    auto* mu = app.add_subcommand("mu", "Print x, mu(x) at equispaced samples");
    mu->add_option("--x-samples", x_samples, "Number of sample points (default 11)")
        ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
    auto* solve_cmd = app.add_subcommand("solve", "Solve the eps or limit problem and write the field");
    auto* sweep = app.add_subcommand("sweep", "Run the eps sweep and write CSV");
    auto* verify = app.add_subcommand("verify", "Run the lemma suite; exit 4 if a check fails");
    auto* coerc = app.add_subcommand("coercivity", "Estimate coercivity and the threshold lambda*");
    coerc->add_option("--lambda-min", lambda_min, "Lower end of the bisection range");
    coerc->add_option("--lambda-max", lambda_max, "Upper end of the bisection range");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    const auto t0 = std::chrono::steady_clock::now();
    int code = exit_ok;
    try {
        const RunConfig cfg = load_run_config(g.config, g.overrides);
        const Streams io{out, err};
        if (*mu)
            code = cmd_mu(cfg, g, x_samples, io);
        else if (*solve_cmd)
            code = cmd_solve(cfg, g, io);
        else if (*sweep)
            code = cmd_sweep(cfg, g, io);
        else if (*verify)
            code = cmd_verify(cfg, g, io);
        else
            code = cmd_coercivity(cfg, g, lambda_min.value_or(cfg.lambda_min), lambda_max.value_or(cfg.lambda_max),
                                  io);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const IndefiniteSystem& e) {
        err << "indefinite system: " << e.what() << "\n";
        return exit_indefinite;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    if (g.timings)
        err << "elapsed " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
            << " s\n";
    return code;
}

inline int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args);
}

} // namespace bconc::cli

#endif
