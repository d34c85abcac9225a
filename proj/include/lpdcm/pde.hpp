#pragma once

// The equation
//     sigma_k(W(u)) = u^{p-1+eps} (u^2 + |grad u|^2)^{(k+1-q)/2} phi,   W(u) = Hess u + u I,
// on S^2: right-hand side, residual, Jacobian, the homotopy family phi_t and
// the checker for the structural condition on phi.

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>

#include "ambient.hpp"
#include "error.hpp"
#include "sphere.hpp"
#include "symmfunc.hpp"

namespace lpdcm {

struct TabulatedPhi {
    std::string path;
    ScalarField field;
};

/// phi chosen so that the given support function solves the equation exactly.
/// Analytic for the translated-sphere family, discrete otherwise.
struct ManufacturedPhi {
    AmbientFunction support;
};

using PhiDescriptor = std::variant<AmbientFunction, TabulatedPhi, ManufacturedPhi>;

struct ProblemSpec {
    int n = 2;
    int k = 1;
    double p = 2.0;
    double q = 1.0;
    double epsilon = 0.0;
    PhiDescriptor phi = AmbientFunction{ConstantFn{2.0}};

    double binom() const { return binomial(n, k); }
    /// Exponent of u on the right-hand side.
    double u_power() const { return p - 1.0 + epsilon; }
    /// q actually used: the regularized equation always carries q = p.
    double q_effective() const { return epsilon > 0.0 ? p : q; }
    /// Exponent of rho^2 = u^2 + |grad u|^2 on the right-hand side.
    double rho2_power() const { return 0.5 * (k + 1 - q_effective()); }
    /// Degree of the homotopy family, p - 1 + eps + k.
    double homotopy_power() const { return p - 1.0 + epsilon + k; }

    /// Checks the solve-level invariants: n = 2, 1 <= k <= n, and either eps = 0 with p > q,
    /// or eps > 0 with p = q > 1.
    void validate() const
    {
        if (n != 2)
            throw ArgumentError("ProblemSpec: only n = 2 (surfaces in R^3) can be solved");
        if (k < 1 || k > n)
            throw ArgumentError("ProblemSpec: k must satisfy 1 <= k <= n");
        if (!std::isfinite(p) || !std::isfinite(q) || !std::isfinite(epsilon) || epsilon < 0.0)
            throw ArgumentError("ProblemSpec: p, q must be finite and epsilon >= 0");
        if (epsilon == 0.0 && !(p > q))
            throw ArgumentError("ProblemSpec: epsilon = 0 requires p > q (got p = " + format_double(p) +
                                ", q = " + format_double(q) + ")");
        if (epsilon > 0.0 && !(p == q && p > 1.0))
            throw ArgumentError("ProblemSpec: epsilon > 0 requires p = q > 1");
    }
};

namespace detail {

inline ScalarField manufactured_phi(const AmbientFunction& support, const ProblemSpec& spec, const SphericalGrid& g)
{
    ScalarField out(g, 0.0);
    if (const auto* ts = std::get_if<TranslatedSphereFn>(&support)) {
        // W = r I exactly, |grad(a.x)|^2 = |a|^2 - (a.x)^2, so rho^2 = r^2 + 2 r a.x + |a|^2.
        const double r = ts->radius;
        const auto& a = ts->center;
        const double a2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
        const double sig = spec.binom() * std::pow(r, spec.k);
        for (int i = 0; i < g.n_lat(); ++i)
            for (int j = 0; j < g.n_lon(); ++j) {
                const auto x = g.point(i, j);
                const double ax = a[0] * x[0] + a[1] * x[1] + a[2] * x[2];
                const double u = r + ax;
                if (!(u > 0.0))
                    throw ConfigError("manufactured: support function must be positive (need r > |a|)");
                const double rho2 = r * r + 2.0 * r * ax + a2;
                out[g.index(i, j)] = sig / (std::pow(u, spec.u_power()) * std::pow(rho2, spec.rho2_power()));
            }
        return out;
    }
    const ScalarField u = eval_ambient(support, g);
    if (!(u.min() > 0.0))
        throw ConfigError("manufactured: support function must be positive");
    const SymMatrixField w = curvature_matrix(u);
    const FrameGradient du = gradient(u);
    for (int idx = 0; idx < g.size(); ++idx) {
        const double sig = spec.k == 1 ? w.trace(idx) : w.det(idx);
        const double rho2 = u[idx] * u[idx] + du.norm2(idx);
        out[idx] = sig / (std::pow(u[idx], spec.u_power()) * std::pow(rho2, spec.rho2_power()));
    }
    return out;
}

} // namespace detail

/// Samples the phi descriptor of `spec` onto `grid` and checks phi > 0.
inline ScalarField discretize_phi(const ProblemSpec& spec, const SphericalGrid& grid)
{
    ScalarField phi;
    if (const auto* f = std::get_if<AmbientFunction>(&spec.phi))
        phi = eval_ambient(*f, grid);
    else if (const auto* t = std::get_if<TabulatedPhi>(&spec.phi)) {
        if (!(t->field.grid == grid))
            throw ConfigError("tabulated phi '" + t->path + "' has n_lat = " + std::to_string(t->field.grid.n_lat()) +
                              ", grid has n_lat = " + std::to_string(grid.n_lat()));
        phi = t->field;
    }
    else
        phi = detail::manufactured_phi(std::get<ManufacturedPhi>(spec.phi).support, spec, grid);

    if (!phi.all_finite())
        throw ConfigError("phi has non-finite values");
    int worst = 0;
    for (int idx = 0; idx < phi.size(); ++idx)
        if (phi[idx] < phi[worst])
            worst = idx;
    if (!(phi[worst] > 0.0))
        throw ConfigError("phi must be positive everywhere (min " + format_double(phi[worst]) + " at node " +
                          std::to_string(worst) + ")");
    return phi;
}

inline void require_positive(const ScalarField& u, const char* who)
{
    for (int idx = 0; idx < u.size(); ++idx)
        if (!(u[idx] > 0.0))
            throw DomainError(std::string(who) + ": u must be positive, u = " + format_double(u[idx]) + " at node " +
                              std::to_string(idx));
}

/// g = u^{p-1+eps} (u^2 + |grad u|^2)^{(k+1-q)/2} phi, pointwise.
inline ScalarField rhs(const ScalarField& u, const FrameGradient& grad, const ProblemSpec& spec,
                       const ScalarField& phi)
{
    require_positive(u, "rhs");
    ScalarField g(u.grid, 0.0);
    const double a = spec.u_power();
    const double b = spec.rho2_power();
    for (int idx = 0; idx < u.size(); ++idx) {
        const double rho2 = u[idx] * u[idx] + grad.norm2(idx);
        g[idx] = std::pow(u[idx], a) * std::pow(rho2, b) * phi[idx];
    }
    return g;
}

/// sigma_k of every node matrix (k = 1: trace, k = 2: determinant).
inline ScalarField sigma_field(const SymMatrixField& w, int k)
{
    ScalarField s(w.grid, 0.0);
    for (int idx = 0; idx < w.size(); ++idx)
        s[idx] = k == 1 ? w.trace(idx) : w.det(idx);
    return s;
}

/// sigma_k(W(u)) - g(u, grad u).
inline ScalarField residual(const ScalarField& u, const ProblemSpec& spec, const ScalarField& phi)
{
    const ScalarField g = rhs(u, gradient(u), spec, phi);
    ScalarField r = sigma_field(curvature_matrix(u), spec.k);
    for (int idx = 0; idx < r.size(); ++idx)
        r[idx] -= g[idx];
    return r;
}

/// Node where W leaves Gamma_k (or -1 if none).
inline int first_cone_exit(const SymMatrixField& w, int k)
{
    for (int idx = 0; idx < w.size(); ++idx) {
        const double tr = w.trace(idx);
        if (!(tr > 0.0) || (k == 2 && !(w.det(idx) > 0.0)))
            return idx;
    }
    return -1;
}

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Jacobian of residual() at u:
///   v -> F^{ij}(v_ij + v delta_ij) - g_u v - (k+1-q) g / rho^2 <grad u, grad v>,
/// with F^{ij} = sigma_grad(W, k) and g_u = [(p-1+eps)/u + (k+1-q) u / rho^2] g,
/// assembled on the 9-point stencil.
inline SparseMatrix linearize(const ScalarField& u, const ProblemSpec& spec, const ScalarField& phi)
{
    require_positive(u, "linearize");
    const SphericalGrid& g = u.grid;
    const SymMatrixField w = curvature_matrix(u);
    if (const int bad = first_cone_exit(w, spec.k); bad >= 0)
        throw EllipticityError("linearize: W leaves Gamma_" + std::to_string(spec.k) + " at node " +
                                   std::to_string(bad) + " (theta index " + std::to_string(bad / g.n_lon()) + ")",
                               bad);
    const FrameGradient du = gradient(u);

    const double ht = g.dtheta();
    const double hp = g.dphi();
    const auto Wt = stencil::d_theta(ht);
    const auto Wp = stencil::d_phi(hp);
    const auto Wtt = stencil::d_theta_theta(ht);
    const auto Wpp = stencil::d_phi_phi(hp);
    const auto Wtp = stencil::d_theta_phi(ht, hp);

    const double a = spec.u_power();
    const double b = spec.rho2_power();
    const double kq = spec.k + 1 - spec.q_effective();

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(g.size()) * 9);
    for (int i = 0; i < g.n_lat(); ++i) {
        const double s = g.sin_theta(i);
        const double c = g.cos_theta(i);
        for (int j = 0; j < g.n_lon(); ++j) {
            const int idx = g.index(i, j);
            SymMatrix wm(2);
            wm.set(0, 0, w.w11[idx]);
            wm.set(0, 1, w.w12[idx]);
            wm.set(1, 1, w.w22[idx]);
            const SymMatrix F = sigma_grad(wm, spec.k);

            const double uu = u[idx];
            const double rho2 = uu * uu + du.norm2(idx);
            const double gval = std::pow(uu, a) * std::pow(rho2, b) * phi[idx];
            const double g_u = (a / uu + kq * uu / rho2) * gval;
            const double g_grad = kq * gval / rho2;

            const auto nb = stencil::neighbours(g, i, j);
            for (int da = 0; da < 3; ++da)
                for (int db = 0; db < 3; ++db) {
                    double coef = F(0, 0) * Wtt[da][db] + 2.0 * F(0, 1) * (Wtp[da][db] / s - c / (s * s) * Wp[da][db]) +
                                  F(1, 1) * (Wpp[da][db] / (s * s) + c / s * Wt[da][db]) -
                                  g_grad * (du.comp1[idx] * Wt[da][db] + du.comp2[idx] * Wp[da][db] / s);
                    if (da == 1 && db == 1)
                        coef += F(0, 0) + F(1, 1) - g_u;
                    // zeros are kept so the sparsity pattern is the same at every u
                    trip.emplace_back(idx, nb[da][db], coef);
                }
        }
    }
    SparseMatrix J(g.size(), g.size());
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

/// phi_t = ((1-t) phi0^{-1/m} + t phi1^{-1/m})^{-m}, m = p - 1 + eps + k.
inline ScalarField homotopy_between(const ScalarField& phi0, const ScalarField& phi1, double t, const ProblemSpec& spec)
{
    if (!(t >= 0.0 && t <= 1.0))
        throw ArgumentError("homotopy: t must lie in [0, 1]");
    const double m = spec.homotopy_power();
    ScalarField out(phi1.grid, 0.0);
    for (int idx = 0; idx < out.size(); ++idx) {
        if (t == 1.0)
            out[idx] = phi1[idx];
        else if (t == 0.0)
            out[idx] = phi0[idx];
        else
            out[idx] = std::pow((1.0 - t) * std::pow(phi0[idx], -1.0 / m) + t * std::pow(phi1[idx], -1.0 / m), -m);
    }
    return out;
}

/// The continuity-method family from phi_0 = C_n^k (solved by u = 1) to phi_1 = phi.
inline ScalarField homotopy_phi(const ScalarField& phi, double t, const ProblemSpec& spec)
{
    return homotopy_between(ScalarField(phi.grid, spec.binom()), phi, t, spec);
}

enum class AssumptionCase { q_le_k_plus_1, between, out_of_range };

inline const char* to_string(AssumptionCase c)
{
    switch (c) {
    case AssumptionCase::q_le_k_plus_1:
        return "q <= k+1";
    case AssumptionCase::between:
        return "k+1 < q < 2k+p";
    case AssumptionCase::out_of_range:
        return "out-of-range";
    }
    return "?";
}

struct AssumptionReport {
    AssumptionCase case_tag = AssumptionCase::out_of_range;
    double coefficient = 0.0; // c in Hess f + c f I
    double min_eig = 0.0;
    int argmin_node = -1;
    double tol_assume = 0.0;
    bool satisfied = false;
};

/// Structural condition on phi: with f = phi^{-1/(k+p-1)}, Hess f + c f I must be
/// positive semi-definite, c = 1 when q <= k+1 and c = (2k+p-q)/(k+p-1) when k+1 < q < 2k+p.
/// Default tolerance 1e-8 max f.
inline AssumptionReport check_assumption(const ScalarField& phi, const ProblemSpec& spec,
                                         std::optional<double> tol_assume = std::nullopt)
{
    const double k = spec.k;
    const double p = spec.p;
    const double q = spec.q;
    AssumptionReport rep;
    if (p < 1.0 || q >= 2 * k + p)
        rep.case_tag = AssumptionCase::out_of_range;
    else if (q <= k + 1)
        rep.case_tag = AssumptionCase::q_le_k_plus_1;
    else
        rep.case_tag = AssumptionCase::between;
    rep.coefficient = rep.case_tag == AssumptionCase::between ? (2 * k + p - q) / (k + p - 1) : 1.0;

    require_positive(phi, "check_assumption");
    ScalarField f(phi.grid, 0.0);
    for (int idx = 0; idx < f.size(); ++idx)
        f[idx] = std::pow(phi[idx], -1.0 / (k + p - 1));
    rep.tol_assume = tol_assume.value_or(1e-8 * f.max());

    SymMatrixField m = covariant_hessian(f);
    for (int idx = 0; idx < m.size(); ++idx) {
        m.w11[idx] += rep.coefficient * f[idx];
        m.w22[idx] += rep.coefficient * f[idx];
    }
    rep.min_eig = m.global_min_eig(&rep.argmin_node);
    rep.satisfied = rep.case_tag != AssumptionCase::out_of_range && rep.min_eig >= -rep.tol_assume;
    return rep;
}

} // namespace lpdcm
