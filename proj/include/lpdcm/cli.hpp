#pragma once

// Command-line frontend: solve | eigen | check | export | props.
// Exit codes: 0 ok, 1 configuration or I/O error, 2 solver failure,
// 3 verification failure (bounds, convexity, assumption, properties).

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "continuation.hpp"
#include "geometry.hpp"
#include "json_io.hpp"
#include "properties.hpp"
#include "verify.hpp"

namespace lpdcm::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kSolverFailure = 2, kVerificationFailure = 3 };

struct Options {
    std::string command;
    std::string config;
    std::optional<std::string> out;
    std::uint64_t seed = PropertySettings{}.seed;
    int samples = PropertySettings{}.samples;
    int max_dim = PropertySettings{}.max_dim;
};

namespace detail {

inline void prepare_output(const RunConfig& c)
{
    std::error_code ec;
    std::filesystem::create_directories(c.output.dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + c.output.dir + ": " + ec.message());
    write_json(echo_config(c), c.out_path(c.output.config_echo).string());
}

inline AssumptionReport assumption_for(const RunConfig& c, const ScalarField& phi)
{
    double max_f = 0.0;
    for (double v : phi.values)
        max_f = std::max(max_f, std::pow(v, -1.0 / (c.spec.k + c.spec.p - 1)));
    return check_assumption(phi, c.spec, c.assume_rel_tol * max_f);
}

/// Bounds of every accepted path step; failing reports are kept.
struct PathBounds {
    int steps = 0;
    int failed = 0;
    Json failures = Json::array();

    void record(double t, const ScalarField& u, const ProblemSpec& spec, const ScalarField& phi_t)
    {
        ++steps;
        const BoundsReport r = check_bounds(u, spec, phi_t, BoundsSlack::for_grid(u.grid));
        if (!r.pass()) {
            ++failed;
            Json f = lpdcm::to_json(r);
            f["param"] = t;
            if (spec.epsilon > 0.0)
                f["eps"] = spec.epsilon;
            failures.push_back(f);
        }
    }

    Json summary() const { return {{"steps", steps}, {"failed", failed}, {"failures", failures}}; }
};

} // namespace detail

inline int cmd_solve(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    const ProblemSpec& spec = c.spec;
    if (!(spec.p > spec.q)) {
        err << "config error: solve requires p > q (got p = " << format_double(spec.p)
            << ", q = " << format_double(spec.q) << "); use 'eigen' for p = q\n";
        return kConfigError;
    }
    const SphericalGrid grid(c.n_lat);
    const ScalarField phi = discretize_phi(spec, grid);
    detail::prepare_output(c);

    detail::PathBounds path;
    ContinuationResult res;
    try {
        res = continuation_solve(spec, grid, c.continuation,
                                 [&](double t, const ScalarField& u, const ScalarField& phi_t) {
                                     path.record(t, u, spec, phi_t);
                                 });
    }
    catch (const ConvexityLossError& e) {
        write_json(to_json(e.trace()), c.out_path(c.output.trace).string());
        err << "verification failure: " << e.what() << '\n';
        return kVerificationFailure;
    }
    catch (const ContinuationStallError& e) {
        write_json(to_json(e.trace()), c.out_path(c.output.trace).string());
        err << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    }
    catch (const ConfigError&) {
        throw;
    }
    catch (const Error& e) {
        err << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    }

    write_csv(res.u, c.out_path(c.output.solution).string());
    write_json(to_json(res.trace), c.out_path(c.output.trace).string());

    const BoundsReport bounds = check_bounds(res.u, spec, phi, BoundsSlack::for_grid(grid));
    Json report = {{"command", "solve"},
                   {"bounds", to_json(bounds)},
                   {"path_bounds", path.summary()},
                   {"assumption", to_json(detail::assumption_for(c, phi))}};
    if (const auto* mf = std::get_if<ManufacturedPhi>(&spec.phi))
        report["manufactured_error"] = max_abs_diff(res.u, eval_ambient(mf->support, grid));
    write_json(report, c.out_path(c.output.report).string());

    out << "solve: " << res.trace.steps.size() << " steps, u in [" << format_double(res.u.min()) << ", "
        << format_double(res.u.max()) << "]";
    if (report.contains("manufactured_error"))
        out << ", error vs exact " << format_double(report["manufactured_error"].get<double>());
    out << '\n';

    if (!bounds.pass() || path.failed > 0) {
        write_violations_csv(bounds_violations(res.u, bounds), c.out_path(c.output.violations).string());
        err << "verification failure: a priori bounds violated (see " << c.out_path(c.output.report).string()
            << ")\n";
        return kVerificationFailure;
    }
    return kOk;
}

inline int cmd_eigen(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    const ProblemSpec& spec = c.spec;
    if (!(spec.p == spec.q && spec.p > 1.0)) {
        err << "config error: eigen requires p = q > 1 (got p = " << format_double(spec.p)
            << ", q = " << format_double(spec.q) << ")\n";
        return kConfigError;
    }
    const SphericalGrid grid(c.n_lat);
    discretize_phi(spec, grid);
    detail::prepare_output(c);

    detail::PathBounds path;
    EigenResult res;
    try {
        res = eigen_solve(spec, grid, c.eps_sequence, c.continuation,
                          [&](double eps, double t, const ScalarField& u, const ScalarField& phi_t) {
                              ProblemSpec s = spec;
                              s.epsilon = eps;
                              path.record(t, u, s, phi_t);
                          });
    }
    catch (const ConsistencyError& e) {
        err << "verification failure: " << e.what() << '\n';
        return kVerificationFailure;
    }
    catch (const ConfigError&) {
        throw;
    }
    catch (const Error& e) {
        err << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    }

    write_csv(res.u_normalized, c.out_path(c.output.solution).string());
    write_json(to_json(res.eps_trace()), c.out_path(c.output.trace).string());
    Json report = to_json(res);
    report["path_bounds"] = path.summary();
    write_json(report, c.out_path(c.output.eigen).string());

    out << "eigen: gamma = " << format_double(res.gamma) << " in [" << format_double(res.bracket_lo) << ", "
        << format_double(res.bracket_hi) << "]\n";
    if (path.failed > 0) {
        err << "verification failure: a priori bounds violated on " << path.failed << " path steps\n";
        return kVerificationFailure;
    }
    return kOk;
}

inline int cmd_check(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    const SphericalGrid grid(c.n_lat);
    const ScalarField phi = discretize_phi(c.spec, grid);
    detail::prepare_output(c);
    const AssumptionReport rep = detail::assumption_for(c, phi);
    const Json j = to_json(rep);
    write_json({{"command", "check"}, {"assumption", j}}, c.out_path(c.output.report).string());
    out << j.dump(2) << '\n';
    if (!rep.satisfied) {
        err << "verification failure: structural condition on phi "
            << (rep.case_tag == AssumptionCase::out_of_range ? "is out of range" : "is violated") << '\n';
        return kVerificationFailure;
    }
    return kOk;
}

inline int cmd_export(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    const std::string in = c.input_solution_path().string();
    ScalarField u;
    try {
        u = read_csv(in);
    }
    catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    detail::prepare_output(c);
    EmbeddedSurface s;
    try {
        s = embed(u);
    }
    catch (const NotConvexError& e) {
        err << "verification failure: " << e.what() << '\n';
        return kVerificationFailure;
    }
    catch (const DomainError& e) {
        err << "verification failure: " << e.what() << '\n';
        return kVerificationFailure;
    }
    const std::string path = c.out_path(c.output.obj).string();
    export_obj(s, path);
    out << "export: wrote " << path << '\n';
    return kOk;
}

inline int cmd_props(const PropertySettings& s, std::ostream& out, std::ostream& err)
{
    const std::vector<PropertyResult> results = run_property_suite(s);
    bool ok = true;
    for (const PropertyResult& r : results) {
        out << (r.pass() ? "PASS " : "FAIL ") << r.name << " samples=" << r.samples << " worst_ratio=" << r.worst
            << '\n';
        if (!r.pass()) {
            ok = false;
            err << "counterexample for " << r.name << ": " << r.counterexample << '\n';
        }
    }
    return ok ? kOk : kVerificationFailure;
}

inline int dispatch(const Options& o, std::ostream& out, std::ostream& err)
{
    try {
        if (o.command == "props") {
            PropertySettings s;
            s.seed = o.seed;
            s.samples = o.samples;
            s.max_dim = o.max_dim;
            if (!o.config.empty())
                load_config(o.config); // validated for consistency, not otherwise used
            return cmd_props(s, out, err);
        }
        RunConfig c = load_config(o.config);
        if (o.out)
            c.output.dir = *o.out;
        if (o.command == "solve")
            return cmd_solve(c, out, err);
        if (o.command == "eigen")
            return cmd_eigen(c, out, err);
        if (o.command == "check")
            return cmd_check(c, out, err);
        if (o.command == "export")
            return cmd_export(c, out, err);
        err << "unknown command " << o.command << '\n';
        return kConfigError;
    }
    catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const ArgumentError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const Error& e) {
        err << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Christoffel-Minkowski type curvature equations on S^2"};
    app.require_subcommand(1);
    Options o;
    const char* names[] = {"solve", "eigen", "check", "export", "props"};
    const char* help[] = {"solve the p > q equation by continuation", "compute the constant gamma for p = q > 1",
                          "check the structural condition on phi", "embed a solution and write an OBJ mesh",
                          "run the randomized sigma_k property suite"};
    for (int i = 0; i < 5; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], help[i]);
        auto* cfg = sub->add_option("--config", o.config, "run configuration (JSON)");
        if (std::string(names[i]) != "props")
            cfg->required();
        sub->add_option("--out", o.out, "output directory (overrides output.dir)");
        sub->add_option("--seed", o.seed, "random seed");
        if (std::string(names[i]) == "props") {
            sub->add_option("--samples", o.samples, "samples per property")->check(CLI::PositiveNumber);
            sub->add_option("--dim", o.max_dim, "largest dimension")->check(CLI::Range(2, kMaxDim));
        }
        sub->callback([&o, n = std::string(names[i])] { o.command = n; });
    }
    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }
    return dispatch(o, out, err);
}

} // namespace lpdcm::cli
