#pragma once

// A priori estimates as runtime checks, and grid-refinement studies.

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "continuation.hpp"
#include "pde.hpp"
#include "sphere.hpp"

namespace lpdcm {

/// Additive discretization slack: the estimates hold for the continuum solution,
/// the discrete one differs by O(h^2) (C^0) or O(h) (C^1, compared through maxima).
struct BoundsSlack {
    double c0 = 1e-6;
    double c1 = 0.0;

    static BoundsSlack for_grid(const SphericalGrid& g)
    {
        const double h = g.h();
        return {1e-6 + 10.0 * h * h, 10.0 * h};
    }
};

struct BoundsReport {
    bool uses_epsilon = false; // exponent is eps (regularized p = q) instead of p - q
    double exponent = 0.0;
    double c0_lower = 0.0; // C_n^k / max phi
    double c0_upper = 0.0; // C_n^k / min phi
    double observed_min = 0.0; // min u^exponent
    double observed_max = 0.0; // max u^exponent
    double max_u = 0.0;
    double max_grad = 0.0;
    double c1_ratio = 0.0; // max |grad u| / max u
    double min_eig_W = 0.0;
    BoundsSlack slack;
    bool c0_pass = false;
    bool c1_pass = false;
    bool convex_pass = false;

    bool pass() const { return c0_pass && c1_pass && convex_pass; }
};

/// C^0 sandwich C_n^k / max phi <= u^{p-q} <= C_n^k / min phi (u^eps when eps > 0),
/// C^1 bound max |grad u| <= max u, and positive definiteness of W.
inline BoundsReport check_bounds(const ScalarField& u, const ProblemSpec& spec, const ScalarField& phi,
                                 const BoundsSlack& slack)
{
    require_positive(u, "check_bounds");
    BoundsReport rep;
    rep.uses_epsilon = spec.epsilon > 0.0;
    rep.exponent = rep.uses_epsilon ? spec.epsilon : spec.p - spec.q;
    rep.c0_lower = spec.binom() / phi.max();
    rep.c0_upper = spec.binom() / phi.min();
    rep.observed_min = std::pow(u.min(), rep.exponent);
    rep.observed_max = std::pow(u.max(), rep.exponent);
    rep.max_u = u.max();
    const FrameGradient du = gradient(u);
    for (int idx = 0; idx < u.size(); ++idx)
        rep.max_grad = std::max(rep.max_grad, std::sqrt(du.norm2(idx)));
    rep.c1_ratio = rep.max_grad / rep.max_u;
    rep.min_eig_W = curvature_matrix(u).global_min_eig();
    rep.slack = slack;
    rep.c0_pass = rep.observed_min >= rep.c0_lower - slack.c0 && rep.observed_max <= rep.c0_upper + slack.c0;
    rep.c1_pass = rep.max_grad <= rep.max_u + slack.c1;
    rep.convex_pass = rep.min_eig_W > 0.0;
    return rep;
}

struct BoundsViolation {
    int node = 0;
    double theta = 0.0;
    double phi = 0.0;
    std::string check;
    double value = 0.0;
    double limit = 0.0;
};

/// Per-node offenders of a failed report: c0 (u^exponent outside the slackened bracket),
/// c1 (|grad u| above max u + slack) and convexity (min eigenvalue of W <= 0).
inline std::vector<BoundsViolation> bounds_violations(const ScalarField& u, const BoundsReport& rep)
{
    std::vector<BoundsViolation> out;
    const SphericalGrid& g = u.grid;
    const FrameGradient du = gradient(u);
    const SymMatrixField w = curvature_matrix(u);
    for (int i = 0; i < g.n_lat(); ++i)
        for (int j = 0; j < g.n_lon(); ++j) {
            const int idx = g.index(i, j);
            const double v = std::pow(u[idx], rep.exponent);
            if (v < rep.c0_lower - rep.slack.c0)
                out.push_back({idx, g.theta(i), g.phi(j), "c0_lower", v, rep.c0_lower - rep.slack.c0});
            if (v > rep.c0_upper + rep.slack.c0)
                out.push_back({idx, g.theta(i), g.phi(j), "c0_upper", v, rep.c0_upper + rep.slack.c0});
            const double gr = std::sqrt(du.norm2(idx));
            if (gr > rep.max_u + rep.slack.c1)
                out.push_back({idx, g.theta(i), g.phi(j), "c1", gr, rep.max_u + rep.slack.c1});
            const double e = w.min_eig(idx);
            if (!(e > 0.0))
                out.push_back({idx, g.theta(i), g.phi(j), "convexity", e, 0.0});
        }
    return out;
}

inline void write_violations_csv(const std::vector<BoundsViolation>& rows, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << "node,theta,phi,check,value,limit\n";
    for (const BoundsViolation& v : rows)
        out << v.node << ',' << format_double(v.theta) << ',' << format_double(v.phi) << ',' << v.check << ','
            << format_double(v.value) << ',' << format_double(v.limit) << '\n';
}

struct ConvergenceRow {
    int n_lat = 0;
    double h = 0.0;
    double error = 0.0;
    std::optional<double> order; // against the previous row
};

struct ConvergenceTable {
    bool manufactured = false; // error against the exact support function, else self-convergence
    std::vector<ConvergenceRow> rows;
};

/// Solves on each grid. With a manufactured phi the error is ||u_h - u*||_inf; otherwise
/// ||u_h - R(u_{h/2})||_inf with R the restriction from the next (2x finer) grid, so the
/// grids must double and the last one only serves as reference.
inline ConvergenceTable convergence_study(const ProblemSpec& spec, const std::vector<int>& grids,
                                          const ContinuationSettings& settings = {})
{
    if (grids.empty())
        throw ArgumentError("convergence_study: no grids");
    ConvergenceTable table;
    const auto* mf = std::get_if<ManufacturedPhi>(&spec.phi);
    table.manufactured = mf != nullptr;

    std::vector<ScalarField> sols;
    for (int n : grids) {
        const SphericalGrid g(n);
        sols.push_back(continuation_solve(spec, g, settings).u);
    }
    if (table.manufactured) {
        for (std::size_t a = 0; a < grids.size(); ++a) {
            const ScalarField exact = eval_ambient(mf->support, sols[a].grid);
            table.rows.push_back({grids[a], sols[a].grid.h(), max_abs_diff(sols[a], exact), std::nullopt});
        }
    }
    else {
        for (std::size_t a = 0; a + 1 < grids.size(); ++a) {
            if (grids[a + 1] != 2 * grids[a])
                throw ArgumentError("convergence_study: self-convergence needs doubling grids");
            const ScalarField ref = restrict_from_fine(sols[a + 1], sols[a].grid);
            table.rows.push_back({grids[a], sols[a].grid.h(), max_abs_diff(sols[a], ref), std::nullopt});
        }
    }
    for (std::size_t a = 1; a < table.rows.size(); ++a) {
        const ConvergenceRow& prev = table.rows[a - 1];
        ConvergenceRow& cur = table.rows[a];
        if (prev.error > 0.0 && cur.error > 0.0)
            cur.order = std::log(prev.error / cur.error) / std::log(prev.h / cur.h);
    }
    return table;
}

} // namespace lpdcm
