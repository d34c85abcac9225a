#pragma once

// Run configuration: one JSON document with top-level keys
// grid, spec, newton, continuation, eigen, output. Unknown keys are errors.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "continuation.hpp"
#include "json_io.hpp"
#include "pde.hpp"

namespace lpdcm {

struct OutputPaths {
    std::string dir = "out";
    std::string solution = "solution.csv";
    std::string trace = "trace.json";
    std::string report = "report.json";
    std::string eigen = "eigen.json";
    std::string obj = "surface.obj";
    std::string violations = "violations.csv";
    std::string config_echo = "config.resolved.json";
    /// Solution read by `export`; relative to the config file. Empty: dir/solution.
    std::string input_solution;
};

struct RunConfig {
    std::filesystem::path base_dir; // directory of the config file
    int n_lat = 32;
    ProblemSpec spec;
    double assume_rel_tol = 1e-8; // tolerance of the structural check, relative to max f
    NewtonSettings newton;
    ContinuationSettings continuation;
    std::vector<double> eps_sequence{0.4, 0.2, 0.1, 0.05, 0.025, 0.0125};
    OutputPaths output;

    std::filesystem::path out_path(const std::string& name) const
    {
        const std::filesystem::path p(name);
        return p.is_absolute() ? p : std::filesystem::path(output.dir) / p;
    }

    std::filesystem::path input_solution_path() const
    {
        if (output.input_solution.empty())
            return out_path(output.solution);
        const std::filesystem::path p(output.input_solution);
        return p.is_absolute() ? p : base_dir / p;
    }
};

namespace detail {

inline void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where)
{
    if (!obj.is_object())
        throw ConfigError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline double get_number(const Json& obj, const char* key, const std::string& where)
{
    const Json& v = obj.at(key);
    if (!v.is_number())
        throw ConfigError(where + "." + key + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
        throw ConfigError(where + "." + key + ": must be finite");
    return x;
}

inline int get_int(const Json& obj, const char* key, const std::string& where)
{
    const Json& v = obj.at(key);
    if (!v.is_number_integer())
        throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

inline std::string get_string(const Json& obj, const char* key, const std::string& where)
{
    const Json& v = obj.at(key);
    if (!v.is_string())
        throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline AmbientFunction parse_ambient(const Json& j, const std::string& where)
{
    if (!j.is_object() || !j.contains("type"))
        throw ConfigError(where + ": expected an object with a 'type'");
    const std::string type = get_string(j, "type", where);
    AmbientFunction f;
    if (type == "constant") {
        reject_unknown(j, {"type", "value"}, where);
        f = ConstantFn{get_number(j, "value", where)};
    }
    else if (type == "polynomial") {
        reject_unknown(j, {"type", "terms"}, where);
        PolynomialFn p;
        const Json& terms = j.at("terms");
        if (!terms.is_array())
            throw ConfigError(where + ".terms: expected an array");
        for (const Json& t : terms) {
            reject_unknown(t, {"coef", "powers"}, where + ".terms[]");
            Monomial m;
            m.coef = get_number(t, "coef", where + ".terms[]");
            const Json& pw = t.at("powers");
            if (!pw.is_array() || pw.size() != 3)
                throw ConfigError(where + ".terms[].powers: expected 3 integers");
            for (int d = 0; d < 3; ++d) {
                if (!pw[d].is_number_integer())
                    throw ConfigError(where + ".terms[].powers: expected 3 integers");
                m.powers[d] = pw[d].get<int>();
            }
            p.terms.push_back(m);
        }
        f = p;
    }
    else if (type == "translated_sphere") {
        reject_unknown(j, {"type", "radius", "center"}, where);
        TranslatedSphereFn t;
        if (j.contains("radius"))
            t.radius = get_number(j, "radius", where);
        if (j.contains("center")) {
            const Json& c = j.at("center");
            if (!c.is_array() || c.size() != 3)
                throw ConfigError(where + ".center: expected 3 numbers");
            for (int d = 0; d < 3; ++d) {
                if (!c[d].is_number())
                    throw ConfigError(where + ".center: expected 3 numbers");
                t.center[d] = c[d].get<double>();
            }
        }
        f = t;
    }
    else
        throw ConfigError(where + ": unknown type '" + type + "'");
    validate(f);
    return f;
}

inline PhiDescriptor parse_phi(const Json& j, const std::filesystem::path& base_dir)
{
    const std::string where = "spec.phi";
    if (!j.is_object() || !j.contains("type"))
        throw ConfigError(where + ": expected an object with a 'type'");
    const std::string type = get_string(j, "type", where);
    if (type == "tabulated") {
        reject_unknown(j, {"type", "path"}, where);
        const std::string path = get_string(j, "path", where);
        const std::filesystem::path full = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base_dir / path;
        try {
            return TabulatedPhi{path, read_csv(full.string())};
        }
        catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    if (type == "manufactured") {
        reject_unknown(j, {"type", "support"}, where);
        return ManufacturedPhi{parse_ambient(j.at("support"), where + ".support")};
    }
    return parse_ambient(j, where);
}

inline Json ambient_json(const AmbientFunction& f)
{
    if (const auto* c = std::get_if<ConstantFn>(&f))
        return {{"type", "constant"}, {"value", c->value}};
    if (const auto* t = std::get_if<TranslatedSphereFn>(&f))
        return {{"type", "translated_sphere"}, {"radius", t->radius}, {"center", t->center}};
    Json terms = Json::array();
    for (const Monomial& m : std::get<PolynomialFn>(f).terms)
        terms.push_back({{"coef", m.coef}, {"powers", m.powers}});
    return {{"type", "polynomial"}, {"terms", terms}};
}

inline Json phi_json(const PhiDescriptor& phi)
{
    if (const auto* a = std::get_if<AmbientFunction>(&phi))
        return ambient_json(*a);
    if (const auto* t = std::get_if<TabulatedPhi>(&phi))
        return {{"type", "tabulated"}, {"path", t->path}};
    return {{"type", "manufactured"}, {"support", ambient_json(std::get<ManufacturedPhi>(phi).support)}};
}

} // namespace detail

/// Parses and validates everything that does not depend on the command.
inline RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir = ".")
{
    using namespace detail;
    RunConfig c;
    c.base_dir = base_dir;
    try {
        reject_unknown(j, {"grid", "spec", "newton", "continuation", "eigen", "output"}, "config");
        if (!j.contains("spec"))
            throw ConfigError("config: missing 'spec'");

        if (j.contains("grid")) {
            const Json& g = j.at("grid");
            reject_unknown(g, {"n_lat"}, "grid");
            if (g.contains("n_lat"))
                c.n_lat = get_int(g, "n_lat", "grid");
        }
        if (c.n_lat < 8 || c.n_lat % 2 != 0)
            throw ConfigError("grid.n_lat must be even and >= 8");

        const Json& s = j.at("spec");
        reject_unknown(s, {"n", "k", "p", "q", "phi", "assume_rel_tol"}, "spec");
        for (const char* key : {"k", "p", "q", "phi"})
            if (!s.contains(key))
                throw ConfigError(std::string("spec: missing '") + key + "'");
        if (s.contains("n"))
            c.spec.n = get_int(s, "n", "spec");
        if (c.spec.n != 2)
            throw ConfigError("spec.n: only n = 2 is supported");
        c.spec.k = get_int(s, "k", "spec");
        if (c.spec.k < 1 || c.spec.k > c.spec.n)
            throw ConfigError("spec.k must satisfy 1 <= k <= n");
        c.spec.p = get_number(s, "p", "spec");
        c.spec.q = get_number(s, "q", "spec");
        c.spec.phi = parse_phi(s.at("phi"), base_dir);
        if (s.contains("assume_rel_tol"))
            c.assume_rel_tol = get_number(s, "assume_rel_tol", "spec");
        if (!(c.assume_rel_tol >= 0.0))
            throw ConfigError("spec.assume_rel_tol must be >= 0");

        if (j.contains("newton")) {
            const Json& n = j.at("newton");
            reject_unknown(n, {"tol_res", "max_iter"}, "newton");
            if (n.contains("tol_res"))
                c.newton.tol_res = get_number(n, "tol_res", "newton");
            if (n.contains("max_iter"))
                c.newton.max_iter = get_int(n, "max_iter", "newton");
        }
        c.newton.tol_res = c.newton.tolerance(c.spec);
        if (!(*c.newton.tol_res > 0.0))
            throw ConfigError("newton.tol_res must be positive");
        if (c.newton.max_iter < 1)
            throw ConfigError("newton.max_iter must be >= 1");

        if (j.contains("continuation")) {
            const Json& n = j.at("continuation");
            reject_unknown(n, {"n_steps_init"}, "continuation");
            if (n.contains("n_steps_init"))
                c.continuation.n_steps_init = get_int(n, "n_steps_init", "continuation");
        }
        if (c.continuation.n_steps_init < 1)
            throw ConfigError("continuation.n_steps_init must be >= 1");
        c.continuation.newton = c.newton;

        if (j.contains("eigen")) {
            const Json& e = j.at("eigen");
            reject_unknown(e, {"eps_sequence"}, "eigen");
            if (e.contains("eps_sequence")) {
                const Json& seq = e.at("eps_sequence");
                if (!seq.is_array() || seq.empty())
                    throw ConfigError("eigen.eps_sequence: expected a non-empty array");
                c.eps_sequence.clear();
                for (const Json& x : seq) {
                    if (!x.is_number())
                        throw ConfigError("eigen.eps_sequence: expected numbers");
                    c.eps_sequence.push_back(x.get<double>());
                }
            }
        }
        for (std::size_t i = 0; i < c.eps_sequence.size(); ++i)
            if (!(c.eps_sequence[i] > 0.0) || (i > 0 && !(c.eps_sequence[i] < c.eps_sequence[i - 1])))
                throw ConfigError("eigen.eps_sequence must be positive and strictly decreasing");

        if (j.contains("output")) {
            const Json& o = j.at("output");
            reject_unknown(o,
                           {"dir", "solution", "trace", "report", "eigen", "obj", "violations", "config_echo",
                            "input_solution"},
                           "output");
            auto take = [&](const char* key, std::string& dst) {
                if (o.contains(key))
                    dst = get_string(o, key, "output");
            };
            take("dir", c.output.dir);
            take("solution", c.output.solution);
            take("trace", c.output.trace);
            take("report", c.output.report);
            take("eigen", c.output.eigen);
            take("obj", c.output.obj);
            take("violations", c.output.violations);
            take("config_echo", c.output.config_echo);
            take("input_solution", c.output.input_solution);
        }
    }
    catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    }
    catch (const Json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

/// The fully resolved configuration, defaults expanded.
inline Json echo_config(const RunConfig& c)
{
    Json eps = Json::array();
    for (double e : c.eps_sequence)
        eps.push_back(e);
    return {{"grid", {{"n_lat", c.n_lat}}},
            {"spec",
             {{"n", c.spec.n},
              {"k", c.spec.k},
              {"p", c.spec.p},
              {"q", c.spec.q},
              {"phi", detail::phi_json(c.spec.phi)},
              {"assume_rel_tol", c.assume_rel_tol}}},
            {"newton", {{"tol_res", c.newton.tolerance(c.spec)}, {"max_iter", c.newton.max_iter}}},
            {"continuation", {{"n_steps_init", c.continuation.n_steps_init}}},
            {"eigen", {{"eps_sequence", eps}}},
            {"output",
             {{"dir", c.output.dir},
              {"solution", c.output.solution},
              {"trace", c.output.trace},
              {"report", c.output.report},
              {"eigen", c.output.eigen},
              {"obj", c.output.obj},
              {"violations", c.output.violations},
              {"config_echo", c.output.config_echo},
              {"input_solution", c.output.input_solution}}}};
}

} // namespace lpdcm
