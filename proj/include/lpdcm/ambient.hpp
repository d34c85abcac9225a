#pragma once

// Functions on S^2 given in ambient coordinates x in R^3, sampled onto the grid.

#include <array>
#include <cmath>
#include <variant>
#include <vector>

#include "sphere.hpp"

namespace lpdcm {

struct ConstantFn {
    double value = 1.0;
};

struct Monomial {
    double coef = 0.0;
    std::array<int, 3> powers{}; // exponents of x1, x2, x3
};

/// sum_alpha c_alpha x^alpha with total degree <= 4.
struct PolynomialFn {
    std::vector<Monomial> terms;
};

/// Support function r + a.x of the sphere of radius r centred at a.
struct TranslatedSphereFn {
    double radius = 1.0;
    std::array<double, 3> center{};
};

using AmbientFunction = std::variant<ConstantFn, PolynomialFn, TranslatedSphereFn>;

inline constexpr int kMaxPolynomialDegree = 4;

inline double evaluate(const AmbientFunction& f, const std::array<double, 3>& x)
{
    struct Visitor {
        const std::array<double, 3>& x;
        double operator()(const ConstantFn& c) const { return c.value; }
        double operator()(const PolynomialFn& p) const
        {
            double s = 0.0;
            for (const Monomial& m : p.terms) {
                double t = m.coef;
                for (int d = 0; d < 3; ++d)
                    for (int e = 0; e < m.powers[d]; ++e)
                        t *= x[d];
                s += t;
            }
            return s;
        }
        double operator()(const TranslatedSphereFn& t) const
        {
            return t.radius + t.center[0] * x[0] + t.center[1] * x[1] + t.center[2] * x[2];
        }
    };
    return std::visit(Visitor{x}, f);
}

inline void validate(const AmbientFunction& f)
{
    if (const auto* p = std::get_if<PolynomialFn>(&f)) {
        for (const Monomial& m : p->terms) {
            int deg = 0;
            for (int e : m.powers) {
                if (e < 0)
                    throw ConfigError("polynomial: negative exponent");
                deg += e;
            }
            if (deg > kMaxPolynomialDegree)
                throw ConfigError("polynomial: total degree " + std::to_string(deg) + " exceeds 4");
            if (!std::isfinite(m.coef))
                throw ConfigError("polynomial: non-finite coefficient");
        }
    }
    else if (const auto* c = std::get_if<ConstantFn>(&f)) {
        if (!std::isfinite(c->value))
            throw ConfigError("constant: non-finite value");
    }
    else if (const auto* t = std::get_if<TranslatedSphereFn>(&f)) {
        if (!(t->radius > 0.0) || !std::isfinite(t->radius))
            throw ConfigError("translated_sphere: radius must be positive");
    }
}

/// Exact pointwise sampling of an ambient function at the grid nodes.
inline ScalarField eval_ambient(const AmbientFunction& f, const SphericalGrid& grid)
{
    validate(f);
    ScalarField out(grid, 0.0);
    for (int i = 0; i < grid.n_lat(); ++i)
        for (int j = 0; j < grid.n_lon(); ++j)
            out[grid.index(i, j)] = evaluate(f, grid.point(i, j));
    return out;
}

} // namespace lpdcm
