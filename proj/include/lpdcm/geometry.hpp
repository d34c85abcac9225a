#pragma once

// Convex surface recovered from its support function: X = u x + grad u,
// principal radii = eigenvalues of W, Gauss curvature K = 1 / det W.

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "sphere.hpp"

namespace lpdcm {

using Vec3 = std::array<double, 3>;

struct EmbeddedSurface {
    SphericalGrid grid;
    std::vector<Vec3> points;
    std::vector<double> gauss_curvature;
    std::vector<std::array<double, 2>> radii; // ascending
};

inline EmbeddedSurface embed(const ScalarField& u)
{
    const SphericalGrid& g = u.grid;
    const SymMatrixField w = curvature_matrix(u);
    for (int idx = 0; idx < w.size(); ++idx)
        if (!(w.min_eig(idx) > 0.0) || !(u[idx] > 0.0))
            throw NotConvexError("embed: curvature matrix not positive definite at node " + std::to_string(idx) +
                                     " (min eigenvalue " + format_double(w.min_eig(idx)) + ")",
                                 idx);
    const FrameGradient du = gradient(u);

    EmbeddedSurface s{g, std::vector<Vec3>(g.size()), std::vector<double>(g.size()),
                      std::vector<std::array<double, 2>>(g.size())};
    for (int i = 0; i < g.n_lat(); ++i) {
        const double st = g.sin_theta(i);
        const double ct = g.cos_theta(i);
        for (int j = 0; j < g.n_lon(); ++j) {
            const int idx = g.index(i, j);
            const double cp = std::cos(g.phi(j));
            const double sp = std::sin(g.phi(j));
            const Vec3 x{st * cp, st * sp, ct};
            const Vec3 e_theta{ct * cp, ct * sp, -st};
            const Vec3 e_phi{-sp, cp, 0.0};
            for (int d = 0; d < 3; ++d)
                s.points[idx][d] = u[idx] * x[d] + du.comp1[idx] * e_theta[d] + du.comp2[idx] * e_phi[d];
            s.gauss_curvature[idx] = 1.0 / w.det(idx);
            s.radii[idx] = {w.min_eig(idx), w.max_eig(idx)};
        }
    }
    return s;
}

struct ObjMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces; // 0-based
};

/// Triangulation of an embedded surface: grid vertices in row-major order, then the
/// north and south apex (average of the adjacent ring), lateral quads split in two,
/// fan caps at the poles. Faces are counterclockwise seen from outside.
inline ObjMesh triangulate(const EmbeddedSurface& s)
{
    const SphericalGrid& g = s.grid;
    const int nl = g.n_lat();
    const int nm = g.n_lon();
    ObjMesh m;
    m.vertices = s.points;
    Vec3 north{}, south{};
    for (int j = 0; j < nm; ++j)
        for (int d = 0; d < 3; ++d) {
            north[d] += s.points[g.index(0, j)][d] / nm;
            south[d] += s.points[g.index(nl - 1, j)][d] / nm;
        }
    const int north_id = static_cast<int>(m.vertices.size());
    m.vertices.push_back(north);
    const int south_id = north_id + 1;
    m.vertices.push_back(south);

    for (int i = 0; i + 1 < nl; ++i)
        for (int j = 0; j < nm; ++j) {
            const int jn = (j + 1) % nm;
            const int a = g.index(i, j), b = g.index(i + 1, j), c = g.index(i + 1, jn), d = g.index(i, jn);
            m.faces.push_back({a, b, c});
            m.faces.push_back({a, c, d});
        }
    for (int j = 0; j < nm; ++j) {
        const int jn = (j + 1) % nm;
        m.faces.push_back({north_id, g.index(0, j), g.index(0, jn)});
        m.faces.push_back({south_id, g.index(nl - 1, jn), g.index(nl - 1, j)});
    }
    return m;
}

/// ASCII Wavefront OBJ, "v x y z" with 17 significant digits and 1-based "f i j k".
inline void write_obj(const ObjMesh& m, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    for (const Vec3& v : m.vertices)
        out << "v " << format_double(v[0]) << ' ' << format_double(v[1]) << ' ' << format_double(v[2]) << '\n';
    for (const auto& f : m.faces)
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    if (!out)
        throw IoError("write failed: " + path);
}

inline void export_obj(const EmbeddedSurface& s, const std::string& path) { write_obj(triangulate(s), path); }

inline ObjMesh read_obj(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    ObjMesh m;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 v{};
            if (!(ss >> v[0] >> v[1] >> v[2]))
                throw IoError(path + ": bad vertex line");
            m.vertices.push_back(v);
        }
        else if (tag == "f") {
            std::array<int, 3> f{};
            if (!(ss >> f[0] >> f[1] >> f[2]))
                throw IoError(path + ": bad face line");
            for (int& i : f)
                --i;
            m.faces.push_back(f);
        }
    }
    return m;
}

} // namespace lpdcm
