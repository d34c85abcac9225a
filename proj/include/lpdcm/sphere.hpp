#pragma once

// Staggered latitude-longitude discretization of the unit sphere S^2 and
// second-order covariant difference operators in the orthonormal frame
// (e_theta, e_phi / sin(theta)).
//
// Nodes sit at theta_i = (i + 1/2) pi / n_lat and phi_j = j 2pi / n_lon with
// n_lon = 2 n_lat, so no node lies on a pole. Latitude neighbours beyond row 0
// or row n_lat-1 are taken across the pole: u(-theta, phi) = u(theta, phi + pi).

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace lpdcm {

class SphericalGrid {
public:
    SphericalGrid() = default;

    explicit SphericalGrid(int n_lat)
    {
        if (n_lat < 8 || n_lat % 2 != 0)
            throw ArgumentError("build_grid: n_lat must be even and >= 8, got " + std::to_string(n_lat));
        n_lat_ = n_lat;
        n_lon_ = 2 * n_lat;
        sin_.resize(n_lat);
        cos_.resize(n_lat);
        for (int i = 0; i < n_lat; ++i) {
            const double th = theta(i);
            sin_[i] = std::sin(th);
            cos_[i] = std::cos(th);
        }
        // exact antipodal symmetry of the row tables
        for (int i = 0; i < n_lat / 2; ++i) {
            sin_[n_lat - 1 - i] = sin_[i];
            cos_[n_lat - 1 - i] = -cos_[i];
        }
    }

    int n_lat() const noexcept { return n_lat_; }
    int n_lon() const noexcept { return n_lon_; }
    int size() const noexcept { return n_lat_ * n_lon_; }

    double dtheta() const noexcept { return std::numbers::pi / n_lat_; }
    double dphi() const noexcept { return 2.0 * std::numbers::pi / n_lon_; }
    /// Mesh width used for resolution-aware tolerances.
    double h() const noexcept { return dtheta(); }

    double theta(int i) const noexcept { return (i + 0.5) * dtheta(); }
    double phi(int j) const noexcept { return j * dphi(); }
    double sin_theta(int i) const { return sin_[i]; }
    double cos_theta(int i) const { return cos_[i]; }

    int index(int i, int j) const noexcept { return i * n_lon_ + j; }

    /// Flat index of the node displaced by (di, dj), |di| <= 1, applying
    /// periodicity in longitude and the pole-crossing rule in latitude.
    int neighbor(int i, int j, int di, int dj) const noexcept
    {
        int ii = i + di;
        int jj = j + dj;
        if (ii < 0) {
            ii = -ii - 1;
            jj += n_lon_ / 2;
        }
        else if (ii >= n_lat_) {
            ii = 2 * n_lat_ - ii - 1;
            jj += n_lon_ / 2;
        }
        jj = ((jj % n_lon_) + n_lon_) % n_lon_;
        return index(ii, jj);
    }

    /// Quadrature weight sin(theta_i) dtheta dphi.
    double weight(int i) const { return sin_[i] * dtheta() * dphi(); }

    /// Ambient coordinates x = (sin th cos ph, sin th sin ph, cos th).
    std::array<double, 3> point(int i, int j) const
    {
        const double ph = phi(j);
        return {sin_[i] * std::cos(ph), sin_[i] * std::sin(ph), cos_[i]};
    }

    friend bool operator==(const SphericalGrid& a, const SphericalGrid& b)
    {
        return a.n_lat_ == b.n_lat_ && a.n_lon_ == b.n_lon_;
    }

private:
    int n_lat_ = 0;
    int n_lon_ = 0;
    std::vector<double> sin_;
    std::vector<double> cos_;
};

inline SphericalGrid build_grid(int n_lat) { return SphericalGrid(n_lat); }

/// Node values of a scalar function on the grid, row-major (latitude, then longitude).
struct ScalarField {
    SphericalGrid grid;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(SphericalGrid g, double fill) : grid(std::move(g)), values(grid.size(), fill) {}
    ScalarField(SphericalGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v))
    {
        if (static_cast<int>(values.size()) != grid.size())
            throw ArgumentError("ScalarField: value count does not match grid");
    }

    int size() const noexcept { return static_cast<int>(values.size()); }
    double& operator[](int idx) { return values[idx]; }
    double operator[](int idx) const { return values[idx]; }
    double at(int i, int j) const { return values[grid.index(i, j)]; }

    double min() const;
    double max() const;
    double max_abs() const;
    bool all_finite() const;
};

inline double ScalarField::min() const
{
    double m = values.front();
    for (double v : values)
        m = std::min(m, v);
    return m;
}

inline double ScalarField::max() const
{
    double m = values.front();
    for (double v : values)
        m = std::max(m, v);
    return m;
}

inline double ScalarField::max_abs() const
{
    double m = 0.0;
    for (double v : values)
        m = std::max(m, std::abs(v));
    return m;
}

inline bool ScalarField::all_finite() const
{
    for (double v : values)
        if (!std::isfinite(v))
            return false;
    return true;
}

/// max |a - b| over nodes.
inline double max_abs_diff(const ScalarField& a, const ScalarField& b)
{
    if (!(a.grid == b.grid))
        throw ArgumentError("max_abs_diff: grids differ");
    double m = 0.0;
    for (int n = 0; n < a.size(); ++n)
        m = std::max(m, std::abs(a[n] - b[n]));
    return m;
}

inline ScalarField scaled(const ScalarField& f, double s)
{
    ScalarField r = f;
    for (double& v : r.values)
        v *= s;
    return r;
}

/// Components (u_theta, u_phi / sin theta) of the gradient in the orthonormal frame.
struct FrameGradient {
    SphericalGrid grid;
    std::vector<double> comp1;
    std::vector<double> comp2;

    double norm2(int idx) const { return comp1[idx] * comp1[idx] + comp2[idx] * comp2[idx]; }
};

/// Per-node 2x2 symmetric matrix (w11, w12, w22).
struct SymMatrixField {
    SphericalGrid grid;
    std::vector<double> w11;
    std::vector<double> w12;
    std::vector<double> w22;

    int size() const noexcept { return static_cast<int>(w11.size()); }
    double trace(int idx) const { return w11[idx] + w22[idx]; }
    double det(int idx) const { return w11[idx] * w22[idx] - w12[idx] * w12[idx]; }
    double min_eig(int idx) const
    {
        const double m = 0.5 * (w11[idx] + w22[idx]);
        const double d = 0.5 * (w11[idx] - w22[idx]);
        return m - std::hypot(d, w12[idx]);
    }
    double max_eig(int idx) const
    {
        const double m = 0.5 * (w11[idx] + w22[idx]);
        const double d = 0.5 * (w11[idx] - w22[idx]);
        return m + std::hypot(d, w12[idx]);
    }
    /// min over nodes of the smaller eigenvalue; `argmin` receives the node.
    double global_min_eig(int* argmin = nullptr) const
    {
        double best = min_eig(0);
        int at = 0;
        for (int n = 1; n < size(); ++n) {
            const double e = min_eig(n);
            if (e < best) {
                best = e;
                at = n;
            }
        }
        if (argmin)
            *argmin = at;
        return best;
    }
};

// Centered difference stencils on the 3x3 neighbourhood; weights are indexed [di+1][dj+1].
namespace stencil {

using Weights = std::array<std::array<double, 3>, 3>;

inline Weights d_theta(double h) { return {{{0, -0.5 / h, 0}, {0, 0, 0}, {0, 0.5 / h, 0}}}; }
inline Weights d_phi(double h) { return {{{0, 0, 0}, {-0.5 / h, 0, 0.5 / h}, {0, 0, 0}}}; }
inline Weights d_theta_theta(double h)
{
    const double a = 1.0 / (h * h);
    return {{{0, a, 0}, {0, -2 * a, 0}, {0, a, 0}}};
}
inline Weights d_phi_phi(double h)
{
    const double a = 1.0 / (h * h);
    return {{{0, 0, 0}, {a, -2 * a, a}, {0, 0, 0}}};
}
inline Weights d_theta_phi(double ht, double hp)
{
    const double a = 1.0 / (4.0 * ht * hp);
    return {{{a, 0, -a}, {0, 0, 0}, {-a, 0, a}}};
}

/// The nine flat neighbour indices of node (i, j), indexed [di+1][dj+1].
inline std::array<std::array<int, 3>, 3> neighbours(const SphericalGrid& g, int i, int j)
{
    std::array<std::array<int, 3>, 3> nb{};
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
            nb[di + 1][dj + 1] = g.neighbor(i, j, di, dj);
    return nb;
}

inline double apply(const Weights& w, const std::array<std::array<int, 3>, 3>& nb, const std::vector<double>& u)
{
    double s = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (w[a][b] != 0.0)
                s += w[a][b] * u[nb[a][b]];
    return s;
}

} // namespace stencil

/// Raw coordinate derivatives at one node, used by the residual and its linearization.
struct NodeDerivatives {
    double u, u_t, u_p, u_tt, u_pp, u_tp;
};

inline NodeDerivatives node_derivatives(const SphericalGrid& g, const std::vector<double>& u, int i, int j)
{
    const auto nb = stencil::neighbours(g, i, j);
    const double ht = g.dtheta();
    const double hp = g.dphi();
    const double c = u[nb[1][1]];
    return NodeDerivatives{
        c,
        (u[nb[2][1]] - u[nb[0][1]]) / (2.0 * ht),
        (u[nb[1][2]] - u[nb[1][0]]) / (2.0 * hp),
        (u[nb[2][1]] - 2.0 * c + u[nb[0][1]]) / (ht * ht),
        (u[nb[1][2]] - 2.0 * c + u[nb[1][0]]) / (hp * hp),
        (u[nb[2][2]] - u[nb[2][0]] - u[nb[0][2]] + u[nb[0][0]]) / (4.0 * ht * hp),
    };
}

inline FrameGradient gradient(const ScalarField& u)
{
    const SphericalGrid& g = u.grid;
    FrameGradient out{g, std::vector<double>(g.size()), std::vector<double>(g.size())};
    for (int i = 0; i < g.n_lat(); ++i)
        for (int j = 0; j < g.n_lon(); ++j) {
            const NodeDerivatives d = node_derivatives(g, u.values, i, j);
            const int idx = g.index(i, j);
            out.comp1[idx] = d.u_t;
            out.comp2[idx] = d.u_p / g.sin_theta(i);
        }
    return out;
}

/// Covariant Hessian in the orthonormal frame:
///   h11 = u_tt,  h12 = u_tp / s - (c / s^2) u_p,  h22 = u_pp / s^2 + (c / s) u_t.
inline SymMatrixField covariant_hessian(const ScalarField& u)
{
    const SphericalGrid& g = u.grid;
    const int n = g.size();
    SymMatrixField out{g, std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    for (int i = 0; i < g.n_lat(); ++i) {
        const double s = g.sin_theta(i);
        const double c = g.cos_theta(i);
        for (int j = 0; j < g.n_lon(); ++j) {
            const NodeDerivatives d = node_derivatives(g, u.values, i, j);
            const int idx = g.index(i, j);
            out.w11[idx] = d.u_tt;
            out.w12[idx] = d.u_tp / s - c / (s * s) * d.u_p;
            out.w22[idx] = d.u_pp / (s * s) + c / s * d.u_t;
        }
    }
    return out;
}

/// W = Hess(u) + u I; its eigenvalues are the principal radii of curvature.
inline SymMatrixField curvature_matrix(const ScalarField& u)
{
    SymMatrixField w = covariant_hessian(u);
    for (int idx = 0; idx < w.size(); ++idx) {
        w.w11[idx] += u[idx];
        w.w22[idx] += u[idx];
    }
    return w;
}

inline double integrate(const ScalarField& f)
{
    const SphericalGrid& g = f.grid;
    double total = 0.0;
    for (int i = 0; i < g.n_lat(); ++i) {
        double row = 0.0;
        for (int j = 0; j < g.n_lon(); ++j)
            row += f.at(i, j);
        total += row * g.weight(i);
    }
    return total;
}

/// Restriction of a field on the 2x refined grid onto `coarse`: coarse node (i, j)
/// sits midway in latitude between fine rows 2i and 2i+1 at fine column 2j.
inline ScalarField restrict_from_fine(const ScalarField& fine, const SphericalGrid& coarse)
{
    if (fine.grid.n_lat() != 2 * coarse.n_lat())
        throw ArgumentError("restrict_from_fine: fine grid must have twice the resolution");
    ScalarField out(coarse, 0.0);
    for (int i = 0; i < coarse.n_lat(); ++i)
        for (int j = 0; j < coarse.n_lon(); ++j)
            out[coarse.index(i, j)] = 0.5 * (fine.at(2 * i, 2 * j) + fine.at(2 * i + 1, 2 * j));
    return out;
}

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV with header "theta,phi,value", one row per node in row-major order.
inline void write_csv(const ScalarField& f, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << "theta,phi,value\n";
    const SphericalGrid& g = f.grid;
    for (int i = 0; i < g.n_lat(); ++i)
        for (int j = 0; j < g.n_lon(); ++j)
            out << format_double(g.theta(i)) << ',' << format_double(g.phi(j)) << ','
                << format_double(f.at(i, j)) << '\n';
    if (!out)
        throw IoError("write failed: " + path);
}

/// Reads a field written by write_csv. The grid is inferred from the row count
/// (2 n_lat^2 rows) and every coordinate pair is checked against it.
inline ScalarField read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("theta,phi,value", 0) != 0)
        throw ConfigError(path + ": missing header 'theta,phi,value'");
    std::vector<std::array<double, 3>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        std::array<double, 3> r{};
        std::istringstream ss(line);
        std::string cell;
        for (int c = 0; c < 3; ++c) {
            if (!std::getline(ss, cell, ','))
                throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 3 columns");
            try {
                std::size_t used = 0;
                r[c] = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size())
                    throw std::invalid_argument("trailing");
            }
            catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
            }
            if (!std::isfinite(r[c]))
                throw ConfigError(path + ":" + std::to_string(lineno) + ": non-finite value");
        }
        if (std::getline(ss, cell, ','))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": too many columns");
        rows.push_back(r);
    }
    const int count = static_cast<int>(rows.size());
    const int n_lat = static_cast<int>(std::lround(std::sqrt(count / 2.0)));
    if (2 * n_lat * n_lat != count || n_lat < 8 || n_lat % 2 != 0)
        throw ConfigError(path + ": row count " + std::to_string(count) + " is not 2*n_lat^2 for an even n_lat >= 8");
    SphericalGrid g(n_lat);
    ScalarField f(g, 0.0);
    for (int i = 0; i < g.n_lat(); ++i)
        for (int j = 0; j < g.n_lon(); ++j) {
            const auto& r = rows[g.index(i, j)];
            if (std::abs(r[0] - g.theta(i)) > 1e-9 || std::abs(r[1] - g.phi(j)) > 1e-9)
                throw ConfigError(path + ": coordinates of row " + std::to_string(g.index(i, j) + 2) +
                                  " do not match the grid ordering");
            f[g.index(i, j)] = r[2];
        }
    return f;
}

} // namespace lpdcm
