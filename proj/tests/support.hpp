#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <string>

#include <unistd.h>

#include <lpdcm/lpdcm.hpp>

namespace lpdcm::testing {

inline ScalarField sample(const SphericalGrid& g, const std::function<double(double, double, double)>& f)
{
    ScalarField out(g, 0.0);
    for (int i = 0; i < g.n_lat(); ++i)
        for (int j = 0; j < g.n_lon(); ++j) {
            const auto x = g.point(i, j);
            out[g.index(i, j)] = f(x[0], x[1], x[2]);
        }
    return out;
}

inline ProblemSpec translated_sphere_spec()
{
    ProblemSpec s;
    s.k = 2;
    s.p = 4;
    s.q = 2;
    s.phi = ManufacturedPhi{TranslatedSphereFn{1.0, {0.3, 0.0, 0.0}}};
    return s;
}

inline AmbientFunction two_plus_x3_squared()
{
    return PolynomialFn{{Monomial{2.0, {0, 0, 0}}, Monomial{1.0, {0, 0, 2}}}};
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("lpdcm_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

} // namespace lpdcm::testing
