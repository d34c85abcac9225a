#pragma once

// Newton corrector, homotopy path following in t for p > q, the eps-path
// for the eigenvalue case p = q > 1 and the uniqueness probe.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseLU>

#include "error.hpp"
#include "pde.hpp"
#include "sphere.hpp"

namespace lpdcm {

struct NewtonSettings {
    /// Max-norm residual target; defaults to 1e-10 * C_n^k.
    std::optional<double> tol_res;
    int max_iter = 30;
    /// Smallest line-search factor; the factor starts at 1 and halves on residual increase.
    double min_damping = 1.0 / 64.0;

    double tolerance(const ProblemSpec& spec) const { return tol_res.value_or(1e-10 * spec.binom()); }
};

struct NewtonStats {
    int iterations = 0;
    double residual_inf = 0.0;
    /// max(tol_res, evaluation_noise) at the last iterate; convergence means residual_inf <= effective_tol.
    double effective_tol = 0.0;
    std::vector<double> history;
};

struct NewtonResult {
    ScalarField u;
    NewtonStats stats;
};

class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& what, ScalarField last, NewtonStats stats)
        : Error(what), last_(std::move(last)), stats_(std::move(stats))
    {
    }
    const ScalarField& last_iterate() const noexcept { return last_; }
    const NewtonStats& stats() const noexcept { return stats_; }

private:
    ScalarField last_;
    NewtonStats stats_;
};

/// An iterate could not be kept inside the admissible set (u > 0, W in Gamma_k).
class ConeExitError : public Error {
public:
    ConeExitError(const std::string& what, int node) : Error(what), node_(node) {}
    int node() const noexcept { return node_; }

private:
    int node_;
};

/// Max-norm residual used for convergence. For eps > 0 the equation is homogeneous of
/// degree k up to the factor u^eps, so the residual is measured relative to (max u)^k.
inline double residual_measure(const ScalarField& r, const ScalarField& u, const ProblemSpec& spec)
{
    const double scale = spec.epsilon > 0.0 ? std::pow(u.max(), spec.k) : 1.0;
    return r.max_abs() / scale;
}

/// Returns -1 when u > 0 and W(u) in Gamma_k at every node, else the offending node.
inline int admissibility_violation(const ScalarField& u, int k)
{
    for (int idx = 0; idx < u.size(); ++idx)
        if (!(u[idx] > 0.0) || !std::isfinite(u[idx]))
            return idx;
    return first_cone_exit(curvature_matrix(u), k);
}

/// Rounding level of the discrete residual at u: 2 eps_mach max_i sum_j |J_ij| |u_j|, in the
/// units of residual_measure. Near the poles the difference quotients divide by h^2 sin^2(theta),
/// so this floor grows like n_lat^4 and exceeds a fixed tolerance on fine grids.
inline double evaluation_noise(const SparseMatrix& J, const ScalarField& u, const ProblemSpec& spec)
{
    std::vector<double> row(static_cast<std::size_t>(J.rows()), 0.0);
    for (int col = 0; col < J.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(J, col); it; ++it)
            row[it.row()] += std::abs(it.value()) * std::abs(u[col]);
    const double worst = *std::max_element(row.begin(), row.end());
    const double scale = spec.epsilon > 0.0 ? std::pow(u.max(), spec.k) : 1.0;
    return 2.0 * std::numeric_limits<double>::epsilon() * worst / scale;
}

/// Sparse LU of the Jacobian. The stencil pattern is fixed per grid, so the
/// symbolic analysis is done once and reused.
class JacobianSolver {
public:
    Eigen::VectorXd solve(const SparseMatrix& J, const Eigen::VectorXd& b)
    {
        if (analyzed_for_ != J.rows()) {
            lu_.analyzePattern(J);
            analyzed_for_ = J.rows();
        }
        lu_.factorize(J);
        if (lu_.info() != Eigen::Success)
            throw Error("Jacobian factorization failed: " + lu_.lastErrorMessage());
        Eigen::VectorXd x = lu_.solve(b);
        if (lu_.info() != Eigen::Success || !x.allFinite())
            throw Error("Jacobian solve failed");
        return x;
    }

private:
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
    Eigen::Index analyzed_for_ = -1;
};

/// Damped Newton iteration on residual(., spec, phi) = 0 starting from u0.
/// Every accepted iterate stays admissible.
inline NewtonResult newton_solve(const ScalarField& u0, const ProblemSpec& spec, const ScalarField& phi,
                                 const NewtonSettings& settings = {}, JacobianSolver* solver = nullptr)
{
    if (settings.max_iter < 1)
        throw ArgumentError("newton_solve: max_iter must be >= 1");
    const double tol = settings.tolerance(spec);
    if (!(tol > 0.0))
        throw ArgumentError("newton_solve: tol_res must be positive");
    if (const int bad = admissibility_violation(u0, spec.k); bad >= 0)
        throw ConeExitError("newton_solve: initial guess is not admissible at node " + std::to_string(bad), bad);

    JacobianSolver local;
    JacobianSolver& lin = solver ? *solver : local;

    ScalarField u = u0;
    ScalarField r = residual(u, spec, phi);
    double res = residual_measure(r, u, spec);
    NewtonStats stats;
    stats.history.push_back(res);

    for (int it = 0;; ++it) {
        const SparseMatrix J = linearize(u, spec, phi);
        stats.iterations = it;
        stats.residual_inf = res;
        stats.effective_tol = std::max(tol, evaluation_noise(J, u, spec));
        if (res <= stats.effective_tol)
            return {std::move(u), std::move(stats)};
        if (it == settings.max_iter)
            throw NoConvergenceError("newton_solve: no convergence in " + std::to_string(settings.max_iter) +
                                         " iterations (residual " + format_double(res) + ")",
                                     u, stats);

        const Eigen::VectorXd step = lin.solve(J, -Eigen::Map<const Eigen::VectorXd>(r.values.data(), r.size()));

        double lambda = 1.0;
        while (true) {
            ScalarField trial = u;
            for (int idx = 0; idx < trial.size(); ++idx)
                trial[idx] += lambda * step[idx];
            const int bad = admissibility_violation(trial, spec.k);
            if (bad < 0) {
                ScalarField rt = residual(trial, spec, phi);
                const double res_t = residual_measure(rt, trial, spec);
                if (res_t < res || lambda * 0.5 < settings.min_damping) {
                    u = std::move(trial);
                    r = std::move(rt);
                    res = res_t;
                    break;
                }
            }
            else if (lambda * 0.5 < settings.min_damping) {
                throw ConeExitError("newton_solve: step leaves the admissible cone at node " + std::to_string(bad) +
                                        " even at damping " + format_double(lambda),
                                    bad);
            }
            lambda *= 0.5;
        }
        stats.history.push_back(res);
    }
}

struct TraceStep {
    double param = 0.0; // t, or eps on an eps-path
    int newton_iters = 0;
    double residual_inf = 0.0;
    double min_eig_W = 0.0;
    double min_u = 0.0;
    double max_u = 0.0;
    double effective_tol = 0.0; // convergence threshold the corrector met (not serialized)
};

struct ContinuationTrace {
    enum class Param { t, eps };
    Param param = Param::t;
    std::vector<TraceStep> steps;
};

class ContinuationStallError : public Error {
public:
    ContinuationStallError(const std::string& what, ContinuationTrace trace) : Error(what), trace_(std::move(trace)) {}
    const ContinuationTrace& trace() const noexcept { return trace_; }

private:
    ContinuationTrace trace_;
};

/// An accepted step has a curvature matrix that is not positive definite somewhere.
class ConvexityLossError : public Error {
public:
    ConvexityLossError(const std::string& what, ContinuationTrace trace, int node)
        : Error(what), trace_(std::move(trace)), node_(node)
    {
    }
    const ContinuationTrace& trace() const noexcept { return trace_; }
    int node() const noexcept { return node_; }

private:
    ContinuationTrace trace_;
    int node_;
};

struct ContinuationSettings {
    int n_steps_init = 4;
    double min_step = 1.0 / 1024.0;
    double growth = 1.5;
    NewtonSettings newton;
};

struct ContinuationResult {
    ScalarField u;
    ContinuationTrace trace;
};

/// Called after every accepted step with (t, u_t, phi_t).
using StepObserver = std::function<void(double, const ScalarField&, const ScalarField&)>;

inline TraceStep make_trace_step(double param, const NewtonStats& stats, const ScalarField& u)
{
    return TraceStep{param,   stats.iterations, stats.residual_inf, curvature_matrix(u).global_min_eig(),
                     u.min(), u.max(),          stats.effective_tol};
}

/// Follows phi_t = homotopy_between(phi_start, phi_target, t) from t = 0, where u_start
/// solves the phi_start equation, to t = 1. The predictor is the previous solution.
/// The step halves on corrector failure and grows by `growth` after two consecutive
/// first-attempt successes.
inline ContinuationResult continuation_between(const ScalarField& u_start, const ScalarField& phi_start,
                                               const ScalarField& phi_target, const ProblemSpec& spec,
                                               const ContinuationSettings& settings = {},
                                               const StepObserver& observer = {})
{
    if (settings.n_steps_init < 1)
        throw ArgumentError("continuation: n_steps_init must be >= 1");
    JacobianSolver lin;
    ContinuationResult out;

    // t = 0: the start state must already solve its own equation.
    NewtonResult start = newton_solve(u_start, spec, phi_start, settings.newton, &lin);
    out.u = std::move(start.u);
    auto accept = [&](double t, const NewtonStats& stats, const ScalarField& phi_t) {
        const TraceStep step = make_trace_step(t, stats, out.u);
        out.trace.steps.push_back(step);
        if (!(step.min_eig_W > 0.0)) {
            int node = 0;
            curvature_matrix(out.u).global_min_eig(&node);
            throw ConvexityLossError("continuation: curvature matrix is not positive definite at t = " +
                                         format_double(t) + " (min eigenvalue " + format_double(step.min_eig_W) +
                                         " at node " + std::to_string(node) + ")",
                                     out.trace, node);
        }
        if (observer)
            observer(t, out.u, phi_t);
    };
    accept(0.0, start.stats, phi_start);

    double t = 0.0;
    double dt = 1.0 / settings.n_steps_init;
    int streak = 0;
    bool first_attempt = true;
    while (t < 1.0) {
        const double t_next = (t + dt >= 1.0 - 1e-12) ? 1.0 : t + dt;
        const ScalarField phi_t = homotopy_between(phi_start, phi_target, t_next, spec);
        try {
            NewtonResult step = newton_solve(out.u, spec, phi_t, settings.newton, &lin);
            out.u = std::move(step.u);
            t = t_next;
            accept(t, step.stats, phi_t);
            if (first_attempt && ++streak == 2) {
                dt *= settings.growth;
                streak = 0;
            }
            else if (!first_attempt)
                streak = 0;
            first_attempt = true;
        }
        catch (const ConvexityLossError&) {
            throw;
        }
        catch (const Error& e) {
            dt *= 0.5;
            streak = 0;
            first_attempt = false;
            if (dt < settings.min_step)
                throw ContinuationStallError("continuation: step size fell below " + format_double(settings.min_step) +
                                                 " at t = " + format_double(t) + " (" + e.what() + ")",
                                             out.trace);
        }
    }
    return out;
}

/// Continuity method for p > q (or the regularized eps > 0 equation): starts from
/// u = 1 solving the phi_0 = C_n^k equation and follows phi_t to phi.
inline ContinuationResult continuation_solve(const ProblemSpec& spec, const SphericalGrid& grid,
                                             const ContinuationSettings& settings = {},
                                             const StepObserver& observer = {})
{
    spec.validate();
    const ScalarField phi = discretize_phi(spec, grid);
    return continuation_between(ScalarField(grid, 1.0), ScalarField(grid, spec.binom()), phi, spec, settings,
                                observer);
}

/// max |grad u| / u over nodes.
inline double max_gradient_ratio(const ScalarField& u)
{
    const FrameGradient du = gradient(u);
    double m = 0.0;
    for (int idx = 0; idx < u.size(); ++idx)
        m = std::max(m, std::sqrt(du.norm2(idx)) / u[idx]);
    return m;
}

struct EigenStep {
    double eps = 0.0;
    double gamma_eps = 0.0; // (min u_eps)^eps
    double min_u = 0.0;
    double max_u = 0.0;
    double grad_ratio = 0.0;  // max |grad u_eps| / u_eps
    double oscillation = 0.0; // max u_eps / min u_eps
    int newton_iters = 0;     // summed over the t-path
    double residual_inf = 0.0;
    double effective_tol = 0.0;
    double min_eig_W = 0.0;
    ContinuationTrace trace;
};

struct EigenResult {
    double gamma = 0.0;
    ScalarField u_normalized; // min = 1, at the smallest eps
    std::vector<EigenStep> sequence;
    double bracket_lo = 0.0; // C_n^k / max phi
    double bracket_hi = 0.0; // C_n^k / min phi
    int fit_points = 0;
    std::string extrapolation = "least-squares line of log(gamma_eps) against eps over the last 4 points, "
                                "evaluated at eps = 0";

    ContinuationTrace eps_trace() const
    {
        ContinuationTrace tr;
        tr.param = ContinuationTrace::Param::eps;
        for (const EigenStep& s : sequence)
            tr.steps.push_back({s.eps, s.newton_iters, s.residual_inf, s.min_eig_W, s.min_u, s.max_u, s.effective_tol});
        return tr;
    }
};

namespace detail {

inline double extrapolate_log_linear(const std::vector<EigenStep>& seq, int points)
{
    const int n = static_cast<int>(seq.size());
    const int m = std::min(points, n);
    if (m == 1)
        return seq.back().gamma_eps;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = n - m; i < n; ++i) {
        const double x = seq[i].eps;
        const double y = std::log(seq[i].gamma_eps);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;
    return std::exp(intercept);
}

} // namespace detail

class EigenPathError : public Error {
public:
    EigenPathError(const std::string& what, std::vector<EigenStep> partial)
        : Error(what), partial_(std::move(partial))
    {
    }
    const std::vector<EigenStep>& partial_sequence() const noexcept { return partial_; }

private:
    std::vector<EigenStep> partial_;
};

/// Called after every accepted step of every inner path with (eps, t, u_t, phi_t).
using EigenObserver = std::function<void(double, double, const ScalarField&, const ScalarField&)>;

/// Eigenvalue case p = q > 1. For each eps (strictly decreasing) the regularized equation
/// with u-exponent p-1+eps is solved by the t-homotopy from u = 1; gamma_eps = (min u_eps)^eps
/// and gamma is extrapolated to eps = 0.
inline EigenResult eigen_solve(ProblemSpec spec, const SphericalGrid& grid, const std::vector<double>& eps_sequence,
                               const ContinuationSettings& settings = {}, const EigenObserver& observer = {})
{
    if (!(spec.p == spec.q && spec.p > 1.0))
        throw ArgumentError("eigen_solve: requires p = q > 1");
    if (eps_sequence.empty())
        throw ArgumentError("eigen_solve: eps_sequence is empty");
    for (std::size_t i = 0; i < eps_sequence.size(); ++i) {
        if (!(eps_sequence[i] > 0.0))
            throw ArgumentError("eigen_solve: eps values must be positive");
        if (i > 0 && !(eps_sequence[i] < eps_sequence[i - 1]))
            throw ArgumentError("eigen_solve: eps_sequence must be strictly decreasing");
    }

    spec.epsilon = eps_sequence.front();
    const ScalarField phi = discretize_phi(spec, grid);
    EigenResult out;
    out.bracket_lo = spec.binom() / phi.max();
    out.bracket_hi = spec.binom() / phi.min();

    ScalarField last_u;
    for (double eps : eps_sequence) {
        spec.epsilon = eps;
        ContinuationResult cr;
        try {
            StepObserver inner;
            if (observer)
                inner = [&](double t, const ScalarField& u, const ScalarField& phi_t) { observer(eps, t, u, phi_t); };
            cr = continuation_solve(spec, grid, settings, inner);
        }
        catch (const Error& e) {
            throw EigenPathError("eigen_solve: solve failed at eps = " + format_double(eps) + ": " + e.what(),
                                 out.sequence);
        }
        EigenStep st;
        st.eps = eps;
        st.min_u = cr.u.min();
        st.max_u = cr.u.max();
        st.gamma_eps = std::pow(st.min_u, eps);
        st.grad_ratio = max_gradient_ratio(cr.u);
        st.oscillation = st.max_u / st.min_u;
        for (const TraceStep& ts : cr.trace.steps)
            st.newton_iters += ts.newton_iters;
        st.residual_inf = cr.trace.steps.back().residual_inf;
        st.min_eig_W = cr.trace.steps.back().min_eig_W;
        st.effective_tol = cr.trace.steps.back().effective_tol;
        st.trace = std::move(cr.trace);
        out.sequence.push_back(std::move(st));
        last_u = std::move(cr.u);
    }

    out.u_normalized = scaled(last_u, 1.0 / last_u.min());
    out.fit_points = std::min<int>(4, static_cast<int>(out.sequence.size()));
    out.gamma = detail::extrapolate_log_linear(out.sequence, 4);

    const double slack = std::max(1e-4 * (out.bracket_hi - out.bracket_lo), 1e-12 * out.bracket_hi);
    if (out.gamma < out.bracket_lo - slack || out.gamma > out.bracket_hi + slack)
        throw ConsistencyError("eigen_solve: extrapolated gamma " + format_double(out.gamma) + " outside [" +
                               format_double(out.bracket_lo) + ", " + format_double(out.bracket_hi) + "]");
    return out;
}

struct SeedOutcome {
    bool converged = false;
    std::string method; // "newton" or "homotopy"
    int newton_iters = 0;
    double gamma_eps = 0.0; // (min u)^eps when eps > 0
    std::string error;
    ScalarField solution;
};

struct UniquenessReport {
    bool normalized = false; // discrepancies of u / min u (p = q)
    std::vector<SeedOutcome> seeds;
    std::vector<std::vector<double>> discrepancy; // pairwise max-norm, NaN where a seed failed
    double max_discrepancy = 0.0;
    bool complete = true;
};

/// The phi for which u solves the equation exactly: sigma_k(W(u)) / (u^{p-1+eps} rho^{k+1-q}).
inline ScalarField implied_phi(const ScalarField& u, const ProblemSpec& spec)
{
    ScalarField one(u.grid, 1.0);
    const ScalarField denom = rhs(u, gradient(u), spec, one);
    ScalarField s = sigma_field(curvature_matrix(u), spec.k);
    for (int idx = 0; idx < s.size(); ++idx)
        s[idx] /= denom[idx];
    return s;
}

/// Solves from every seed (Newton, then a homotopy from the seed's own implied phi
/// as fallback) and reports pairwise max-norm discrepancies. For p = q (eps > 0) the
/// comparison is made after normalizing each solution by its minimum.
inline UniquenessReport uniqueness_probe(const ProblemSpec& spec, const SphericalGrid& grid,
                                         const std::vector<ScalarField>& seeds,
                                         const ContinuationSettings& settings = {})
{
    spec.validate();
    const ScalarField phi = discretize_phi(spec, grid);
    UniquenessReport rep;
    rep.normalized = spec.epsilon > 0.0;

    for (const ScalarField& seed : seeds) {
        SeedOutcome out;
        try {
            NewtonResult nr = newton_solve(seed, spec, phi, settings.newton);
            out.solution = std::move(nr.u);
            out.method = "newton";
            out.newton_iters = nr.stats.iterations;
            out.converged = true;
        }
        catch (const Error& first) {
            try {
                if (admissibility_violation(seed, spec.k) >= 0)
                    throw;
                const ScalarField phi_seed = implied_phi(seed, spec);
                ContinuationResult cr = continuation_between(seed, phi_seed, phi, spec, settings);
                out.solution = std::move(cr.u);
                out.method = "homotopy";
                for (const TraceStep& ts : cr.trace.steps)
                    out.newton_iters += ts.newton_iters;
                out.converged = true;
            }
            catch (const Error& e) {
                out.error = e.what();
                rep.complete = false;
            }
        }
        if (out.converged && spec.epsilon > 0.0)
            out.gamma_eps = std::pow(out.solution.min(), spec.epsilon);
        rep.seeds.push_back(std::move(out));
    }

    const std::size_t n = rep.seeds.size();
    rep.discrepancy.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            double d = std::numeric_limits<double>::quiet_NaN();
            if (rep.seeds[a].converged && rep.seeds[b].converged) {
                const ScalarField& ua = rep.seeds[a].solution;
                const ScalarField& ub = rep.seeds[b].solution;
                d = rep.normalized ? max_abs_diff(scaled(ua, 1.0 / ua.min()), scaled(ub, 1.0 / ub.min()))
                                   : max_abs_diff(ua, ub);
                rep.max_discrepancy = std::max(rep.max_discrepancy, d);
            }
            rep.discrepancy[a][b] = rep.discrepancy[b][a] = d;
        }
    return rep;
}

} // namespace lpdcm
