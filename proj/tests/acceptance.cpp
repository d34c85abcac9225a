// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <lpdcm/cli.hpp>
#include <lpdcm/lpdcm.hpp>

using namespace lpdcm;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ScalarField sample(const SphericalGrid& g, const std::function<double(double, double, double)>& f)
{
    ScalarField out(g, 0.0);
    for (int i = 0; i < g.n_lat(); ++i)
        for (int j = 0; j < g.n_lon(); ++j) {
            const auto x = g.point(i, j);
            out[g.index(i, j)] = f(x[0], x[1], x[2]);
        }
    return out;
}

RunConfig shipped(const std::string& name)
{
    return load_config(std::filesystem::path(LPDCM_SOURCE_DIR) / "configs" / (name + ".json"));
}

ProblemSpec manufactured_spec()
{
    ProblemSpec s;
    s.k = 2;
    s.p = 4;
    s.q = 2;
    s.phi = ManufacturedPhi{TranslatedSphereFn{1.0, {0.3, 0.0, 0.0}}};
    return s;
}

// ---- 1

Outcome constant_data()
{
    const auto t0 = Clock::now();
    const RunConfig c = shipped("constant");
    const SphericalGrid g(c.n_lat);
    const ContinuationResult r = continuation_solve(c.spec, g, c.continuation);
    const double phi = std::get<ConstantFn>(std::get<AmbientFunction>(c.spec.phi)).value;
    const double want = std::pow(c.spec.binom() / phi, 1.0 / (c.spec.p - c.spec.q));
    const double err = max_abs_diff(r.u, ScalarField(g, want));
    const double secs = seconds_since(t0);
    return {g.n_lat() == 32 && err <= 1e-8 && secs < 5.0, fmt("n=32 error %.3e (<= 1e-8), %.2f s (< 5 s)", err, secs)};
}

// ---- 2

Outcome manufactured_convergence()
{
    const auto t0 = Clock::now();
    const ConvergenceTable t = convergence_study(manufactured_spec(), {32, 64, 128});
    const double secs = seconds_since(t0);
    bool ok = secs < 120.0;
    std::ostringstream d;
    for (const ConvergenceRow& r : t.rows) {
        d << "n=" << r.n_lat << " err=" << fmt("%.3e", r.error);
        if (r.order) {
            d << " order=" << fmt("%.3f", *r.order);
            ok = ok && *r.order >= 1.9;
        }
        d << "; ";
        if (r.n_lat == 64)
            ok = ok && r.error <= 5e-4;
    }
    d << fmt("%.1f s (< 120 s)", secs);
    return {ok, d.str()};
}

// ---- 3, 4, 5: a priori estimates along every path of every shipped config

struct PathAudit {
    int steps = 0;
    int c0_fail = 0;
    int c1_fail = 0;
    int convex_checked = 0;
    int convex_fail = 0;
    double worst_c1_margin = -INFINITY; // max over steps of max|grad u| - max u - slack
    std::vector<std::string> notes;
};

PathAudit audit_shipped_configs()
{
    PathAudit a;
    for (const char* name : {"constant", "manufactured", "nonconstant", "gauss_curvature", "eigen_constant",
                             "eigen_nonconstant", "check_out_of_range"}) {
        const RunConfig c = shipped(name);
        const SphericalGrid g(c.n_lat);
        const ScalarField phi = discretize_phi(c.spec, g);
        const bool assumed = cli::detail::assumption_for(c, phi).satisfied;
        auto record = [&](const ProblemSpec& s, const ScalarField& u, const ScalarField& phi_t) {
            const BoundsReport r = check_bounds(u, s, phi_t, BoundsSlack::for_grid(g));
            ++a.steps;
            a.c0_fail += !r.c0_pass;
            a.c1_fail += !r.c1_pass;
            a.worst_c1_margin = std::max(a.worst_c1_margin, r.max_grad - r.max_u - r.slack.c1);
            if (assumed) {
                ++a.convex_checked;
                a.convex_fail += !r.convex_pass;
            }
        };
        if (c.spec.p > c.spec.q) {
            continuation_solve(c.spec, g, c.continuation,
                               [&](double, const ScalarField& u, const ScalarField& phi_t) { record(c.spec, u, phi_t); });
        }
        else if (c.spec.p == c.spec.q) {
            eigen_solve(c.spec, g, c.eps_sequence, c.continuation,
                        [&](double eps, double, const ScalarField& u, const ScalarField& phi_t) {
                            ProblemSpec s = c.spec;
                            s.epsilon = eps;
                            record(s, u, phi_t);
                        });
        }
        else {
            a.notes.push_back(std::string(name) + " skipped (p < q, nothing to solve)");
        }
    }
    return a;
}

// ---- 6

Outcome manufactured_uniqueness()
{
    const SphericalGrid g(32);
    const std::vector<ScalarField> seeds{
        sample(g, [](double x, double y, double) { return 1 + 0.3 * x + 0.05 * y; }),
        sample(g, [](double x, double y, double) { return 1 + 0.3 * x - 0.05 * y; }),
        sample(g, [](double x, double, double) { return 1.1 + 0.3 * x; }),
        sample(g, [](double x, double, double z) { return 0.9 + 0.25 * x + 0.05 * z; })};
    const UniquenessReport r = uniqueness_probe(manufactured_spec(), g, seeds);
    std::string methods;
    for (const SeedOutcome& s : r.seeds)
        methods += (methods.empty() ? "" : ",") + (s.converged ? s.method : "failed");
    return {r.complete && r.max_discrepancy <= 1e-8,
            fmt("4 seeds, max pairwise %.3e (<= 1e-8), methods %s", r.max_discrepancy, methods.c_str())};
}

// ---- 7

Outcome eigen_constant()
{
    const RunConfig c = shipped("eigen_constant");
    const SphericalGrid g(c.n_lat);
    const EigenResult r = eigen_solve(c.spec, g, c.eps_sequence, c.continuation);
    const double dg = std::abs(r.gamma - 1.0);
    const double du = max_abs_diff(r.u_normalized, ScalarField(g, 1.0));
    return {dg <= 1e-8 && du <= 1e-10, fmt("|gamma - 1| = %.3e (<= 1e-8), |u - 1| = %.3e (<= 1e-10)", dg, du)};
}

// ---- 8

Outcome eigen_nonconstant()
{
    const auto t0 = Clock::now();
    const RunConfig c = shipped("eigen_nonconstant");
    const SphericalGrid g(c.n_lat);
    const EigenResult r = eigen_solve(c.spec, g, c.eps_sequence, c.continuation);
    // phi = 2 + x3^2 lies in [2, 3], so gamma lies in [2/3, 1]
    const bool bracket = r.gamma >= 2.0 / 3.0 && r.gamma <= 1.0 && r.gamma >= r.bracket_lo && r.gamma <= r.bracket_hi;
    bool cauchy = true;
    const auto& seq = r.sequence;
    for (std::size_t i = 2; i < seq.size(); ++i)
        cauchy = cauchy && std::abs(seq[i].gamma_eps - seq[i - 1].gamma_eps) <
                               std::abs(seq[i - 1].gamma_eps - seq[i - 2].gamma_eps);

    ProblemSpec s = c.spec;
    s.epsilon = seq.back().eps;
    const UniquenessReport u = uniqueness_probe(s, g, {r.u_normalized, scaled(r.u_normalized, 3.0)}, c.continuation);
    double du = INFINITY;
    if (u.complete)
        du = std::max(max_abs_diff(scaled(u.seeds[0].solution, 1.0 / u.seeds[0].solution.min()), r.u_normalized),
                      u.max_discrepancy);
    const double secs = seconds_since(t0);
    return {bracket && cauchy && du <= 1e-8 && secs < 300.0,
            fmt("gamma %.9f in [%.6f, %.6f], gamma_eps Cauchy %s, seeds u and 3u at eps=%g agree to %.3e (<= 1e-8), "
                "%.1f s (< 300 s)",
                r.gamma, r.bracket_lo, r.bracket_hi, cauchy ? "yes" : "no", s.epsilon, du, secs)};
}

// ---- 9

Outcome property_suite()
{
    const auto t0 = Clock::now();
    PropertySettings ps;
    ps.samples = 10000;
    const std::vector<PropertyResult> res = run_property_suite(ps);
    const double secs = seconds_since(t0);
    int failed = 0;
    std::string names;
    for (const PropertyResult& r : res)
        if (!r.pass()) {
            ++failed;
            names += " " + r.name;
        }
    return {failed == 0 && secs < 30.0,
            fmt("%zu properties x 10000 samples, %d failed%s, %.2f s (< 30 s)", res.size(), failed, names.c_str(), secs)};
}

// ---- 10

Outcome jacobian_fd()
{
    const SphericalGrid g(32);
    const ProblemSpec s = manufactured_spec();
    const ScalarField phi = discretize_phi(s, g);
    const ScalarField u = eval_ambient(std::get<ManufacturedPhi>(s.phi).support, g);
    const SparseMatrix J = linearize(u, s, phi);
    std::mt19937_64 gen(20240601);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    double worst = 0.0;
    for (int dir = 0; dir < 20; ++dir) {
        // smooth random direction: cubic polynomial in the ambient coordinates
        double c[10];
        for (double& x : c)
            x = coef(gen);
        const ScalarField v = sample(g, [&](double x, double y, double z) {
            return c[0] + c[1] * x + c[2] * y + c[3] * z + c[4] * x * y + c[5] * y * z + c[6] * z * x +
                   c[7] * x * x * x + c[8] * y * y * z + c[9] * z * z * z;
        });
        const double h = 1e-4 * u.max_abs() / v.max_abs();
        ScalarField up = u, um = u;
        for (int idx = 0; idx < g.size(); ++idx) {
            up[idx] += h * v[idx];
            um[idx] -= h * v[idx];
        }
        const ScalarField rp = residual(up, s, phi), rm = residual(um, s, phi);
        const Eigen::VectorXd jv = J * Eigen::Map<const Eigen::VectorXd>(v.values.data(), g.size());
        double diff = 0.0;
        for (int idx = 0; idx < g.size(); ++idx)
            diff = std::max(diff, std::abs((rp[idx] - rm[idx]) / (2 * h) - jv[idx]));
        worst = std::max(worst, diff / jv.lpNorm<Eigen::Infinity>());
    }
    return {worst <= 1e-6, fmt("20 directions, worst relative error %.3e (<= 1e-6)", worst)};
}

// ---- 11

Outcome geometry()
{
    const SphericalGrid g(32);
    const ProblemSpec s = manufactured_spec();
    const ScalarField u = continuation_solve(s, g).u;
    const EmbeddedSurface surf = embed(u);
    const FrameGradient du = gradient(u);
    double support_err = 0.0, curv_err = 0.0, sphere_err = 0.0;
    for (int i = 0; i < g.n_lat(); ++i)
        for (int j = 0; j < g.n_lon(); ++j) {
            const int idx = g.index(i, j);
            const auto x = g.point(i, j);
            const Vec3& X = surf.points[idx];
            support_err = std::max(support_err, std::abs(X[0] * x[0] + X[1] * x[1] + X[2] * x[2] - u[idx]));
            const double rho = std::sqrt(X[0] * X[0] + X[1] * X[1] + X[2] * X[2]);
            support_err = std::max(support_err, std::abs(rho - std::sqrt(u[idx] * u[idx] + du.norm2(idx))));
            curv_err = std::max(curv_err,
                                std::abs(surf.gauss_curvature[idx] * surf.radii[idx][0] * surf.radii[idx][1] - 1.0));
            // the exact body is the unit sphere centred at (0.3, 0, 0)
            const double d = std::hypot(X[0] - 0.3, X[1], X[2]);
            sphere_err = std::max(sphere_err, std::abs(d - 1.0));
        }

    // exact support r + a.x embeds as r x + a, up to the gradient truncation error
    double embed_err[2] = {0.0, 0.0};
    for (int level = 0; level < 2; ++level) {
        const SphericalGrid gl(32 << level);
        const EmbeddedSurface e = embed(eval_ambient(TranslatedSphereFn{1.0, {0.3, 0.0, 0.0}}, gl));
        for (int i = 0; i < gl.n_lat(); ++i)
            for (int j = 0; j < gl.n_lon(); ++j) {
                const auto x = gl.point(i, j);
                const Vec3& X = e.points[gl.index(i, j)];
                embed_err[level] = std::max(embed_err[level], std::hypot(X[0] - x[0] - 0.3, X[1] - x[1], X[2] - x[2]));
            }
    }
    const double embed_order = std::log2(embed_err[0] / embed_err[1]);

    const ObjMesh m = triangulate(surf);
    std::map<std::pair<int, int>, int> directed;
    for (const auto& f : m.faces)
        for (int e = 0; e < 3; ++e)
            ++directed[{f[e], f[(e + 1) % 3]}];
    bool watertight = true;
    for (const auto& [edge, count] : directed)
        watertight = watertight && count == 1 && directed.count({edge.second, edge.first}) == 1;
    const long euler = static_cast<long>(m.vertices.size()) - static_cast<long>(directed.size() / 2) +
                       static_cast<long>(m.faces.size());
    // outward: the body contains its centre (0.3, 0, 0)
    int inward = 0;
    for (const auto& f : m.faces) {
        const Vec3 &a = m.vertices[f[0]], &b = m.vertices[f[1]], &c = m.vertices[f[2]];
        const double e1[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
        const double e2[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
        const double n[3] = {e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]};
        inward += n[0] * (a[0] - 0.3) + n[1] * a[1] + n[2] * a[2] <= 0.0;
    }

    const std::filesystem::path tmp = std::filesystem::temp_directory_path() / "lpdcm_acceptance.obj";
    export_obj(surf, tmp.string());
    const ObjMesh back = read_obj(tmp.string());
    std::filesystem::remove(tmp);
    double rt = 0.0;
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
        for (int d = 0; d < 3; ++d)
            rt = std::max(rt, std::abs(back.vertices[i][d] - m.vertices[i][d]));
    const bool roundtrip = back.faces == m.faces && back.vertices.size() == m.vertices.size() && rt <= 1e-12;

    const double h = g.h();
    const bool ok = support_err <= 1e-10 && curv_err <= 1e-10 && embed_err[0] <= h * h && embed_order >= 1.9 &&
                    sphere_err <= 10 * h * h && watertight && euler == 2 && inward == 0 && roundtrip;
    return {ok, fmt("<X,x>=u and |X|=rho to %.1e, K r1 r2 = 1 to %.1e, embedding of r+a.x vs r x+a %.2e (<= h^2, "
                    "order %.2f), solved surface vs exact sphere %.2e (<= 10h^2), watertight %s, euler %ld, "
                    "inward faces %d, obj round trip %.1e",
                    support_err, curv_err, embed_err[0], embed_order, sphere_err, watertight ? "yes" : "no", euler,
                    inward, rt)};
}

// ---- 12

Outcome assumption()
{
    const RunConfig a = shipped("constant");
    const RunConfig b = shipped("check_out_of_range");
    const AssumptionReport ra = cli::detail::assumption_for(a, discretize_phi(a.spec, SphericalGrid(a.n_lat)));
    const AssumptionReport rb = cli::detail::assumption_for(b, discretize_phi(b.spec, SphericalGrid(b.n_lat)));
    const bool q_is_2k_plus_p = b.spec.q == 2 * b.spec.k + b.spec.p;
    return {ra.satisfied && !rb.satisfied && rb.case_tag == AssumptionCase::out_of_range && q_is_2k_plus_p,
            fmt("constant: %s (%s); q = 2k + p: %s (%s)", ra.satisfied ? "satisfied" : "violated",
                to_string(ra.case_tag), rb.satisfied ? "satisfied" : "not satisfied", to_string(rb.case_tag))};
}

} // namespace

int main()
{
    int failures = 0;
    auto report = [&](int id, const std::function<Outcome()>& f) {
        Outcome o;
        try {
            o = f();
        }
        catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, constant_data);
    report(2, manufactured_convergence);

    PathAudit audit;
    bool audited = false;
    std::string audit_error;
    try {
        audit = audit_shipped_configs();
        audited = true;
    }
    catch (const std::exception& e) {
        audit_error = std::string("exception: ") + e.what();
    }
    std::string skipped;
    for (const std::string& n : audit.notes)
        skipped += "; " + n;
    report(3, [&]() -> Outcome {
        if (!audited)
            return {false, audit_error};
        return {audit.c0_fail == 0, fmt("%d accepted steps, %d outside the C0 bracket%s", audit.steps, audit.c0_fail,
                                        skipped.c_str())};
    });
    report(4, [&]() -> Outcome {
        if (!audited)
            return {false, audit_error};
        return {audit.c1_fail == 0, fmt("%d accepted steps, %d with max|grad u| > max u + 10h (worst margin %.3e)",
                                        audit.steps, audit.c1_fail, audit.worst_c1_margin)};
    });
    report(5, [&]() -> Outcome {
        if (!audited)
            return {false, audit_error};
        return {audit.convex_fail == 0 && audit.convex_checked > 0,
                fmt("%d steps of assumption-satisfying configs, %d with min eig W <= 0", audit.convex_checked,
                    audit.convex_fail)};
    });
    report(6, manufactured_uniqueness);
    report(7, eigen_constant);
    report(8, eigen_nonconstant);
    report(9, property_suite);
    report(10, jacobian_fd);
    report(11, geometry);
    report(12, assumption);

    std::printf("%s: %d of 12 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
