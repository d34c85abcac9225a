#pragma once

// Seeded randomized checks of the sigma_k identities and inequalities,
// the Newton-MacLaurin chain and the matrix-level kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "symmfunc.hpp"

namespace lpdcm {

struct PropertySettings {
    std::uint64_t seed = 20240601;
    int samples = 10000;
    int max_dim = kMaxDim;
};

struct PropertyResult {
    std::string name;
    int samples = 0;
    int failures = 0;
    double worst = 0.0; // largest error / tolerance seen; <= 1 means pass
    std::string counterexample;

    bool pass() const { return failures == 0; }
};

namespace detail {

class PropertyRng {
public:
    PropertyRng(std::uint64_t seed, int stream)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream)};
        gen_.seed(seq);
    }

    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }

    /// Point of Gamma_k in R^n: magnitudes log-uniform in [1e-2, 1e2], up to n-k of them
    /// negated, negatives halved until the vector enters the cone.
    Spectrum gamma_k(int n, int k)
    {
        std::vector<double> v(n);
        for (double& x : v)
            x = log_uniform(1e-2, 1e2);
        const int negatives = integer(0, n - k);
        for (int a = 0; a < negatives; ++a)
            v[integer(0, n - 1)] *= -1.0;
        while (!in_gamma_cone(Spectrum(v), k))
            for (double& x : v)
                if (x < 0.0)
                    x *= 0.5;
        return Spectrum(v);
    }

    /// Haar-ish orthogonal matrix from Gram-Schmidt on a Gaussian matrix, row-major.
    std::vector<double> orthogonal(int n)
    {
        std::vector<double> q(n * n);
        for (double& x : q)
            x = normal();
        for (int c = 0; c < n; ++c) {
            for (int pass = 0; pass < 2; ++pass)
                for (int b = 0; b < c; ++b) {
                    double d = 0.0;
                    for (int r = 0; r < n; ++r)
                        d += q[r * n + c] * q[r * n + b];
                    for (int r = 0; r < n; ++r)
                        q[r * n + c] -= d * q[r * n + b];
                }
            double nrm = 0.0;
            for (int r = 0; r < n; ++r)
                nrm += q[r * n + c] * q[r * n + c];
            nrm = std::sqrt(nrm);
            for (int r = 0; r < n; ++r)
                q[r * n + c] /= nrm;
        }
        return q;
    }

private:
    std::mt19937_64 gen_;
};

/// Q diag(d) Q^T, symmetrized exactly.
inline SymMatrix conjugate(const std::vector<double>& q, const std::vector<double>& d)
{
    const int n = static_cast<int>(d.size());
    SymMatrix w(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int a = 0; a < n; ++a)
                s += q[i * n + a] * d[a] * q[j * n + a];
            w.set(i, j, s);
        }
    return w;
}

inline Spectrum abs_spectrum(const Spectrum& l)
{
    std::vector<double> v(l.values().begin(), l.values().end());
    for (double& x : v)
        x = std::abs(x);
    return Spectrum(v);
}

inline std::string describe(const Spectrum& l)
{
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (int i = 0; i < l.size(); ++i)
        os << (i ? ", " : "") << l[i];
    os << ')';
    return os.str();
}

inline std::string describe(const SymMatrix& w)
{
    std::ostringstream os;
    os.precision(17);
    os << '[';
    for (int i = 0; i < w.dim(); ++i) {
        os << (i ? "; " : "");
        for (int j = 0; j < w.dim(); ++j)
            os << (j ? " " : "") << w(i, j);
    }
    os << ']';
    return os.str();
}

inline double max_abs_entry(const SymMatrix& a)
{
    double m = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j)
            m = std::max(m, std::abs(a(i, j)));
    return m;
}

/// Runs `body` `samples` times; body returns (error / tolerance, description of the sample).
inline PropertyResult run_property(const std::string& name, int samples,
                                   const std::function<std::pair<double, std::string>()>& body)
{
    PropertyResult r;
    r.name = name;
    r.samples = samples;
    for (int s = 0; s < samples; ++s) {
        auto [ratio, what] = body();
        if (!(ratio <= 1.0)) {
            if (r.failures++ == 0)
                r.counterexample = what;
        }
        if (std::isnan(ratio) || ratio > r.worst)
            r.worst = ratio;
    }
    return r;
}

/// Random symmetric matrix with spectrum uniform in [-3, 3].
inline SymMatrix random_symmetric(PropertyRng& rng, int n)
{
    std::vector<double> d(n);
    for (double& x : d)
        x = rng.uniform(-3.0, 3.0);
    return conjugate(rng.orthogonal(n), d);
}

} // namespace detail

/// The full suite. Tolerances: 1e-12 relative for the identities and for sigma_matrix
/// minors vs spectral, 1e-12 slack for the inequalities, 1e-10 (1 + |sigma|) for orthogonal
/// invariance, 1e-10 for concavity, 1e-6 relative for finite differences and degenerate spectra.
inline std::vector<PropertyResult> run_property_suite(const PropertySettings& s = {})
{
    if (s.samples < 1)
        throw ArgumentError("property suite: samples must be >= 1");
    if (s.max_dim < 2 || s.max_dim > kMaxDim)
        throw ArgumentError("property suite: max_dim must be in [2, 8]");
    using detail::PropertyRng;
    const int N = s.max_dim;
    std::vector<PropertyResult> out;
    int stream = 0;

    {   // (1) cone nesting
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("cone_nesting", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(1, n);
            const Spectrum l = rng.gamma_k(n, k);
            for (int j = 1; j <= k; ++j)
                if (!in_gamma_cone(l, j))
                    return std::pair{2.0, detail::describe(l)};
            return std::pair{0.0, std::string()};
        }));
    }
    {   // (2) sigma_{k-1}(lambda|i) > 0 on Gamma_k
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("partial_positive", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(1, n);
            const Spectrum l = rng.gamma_k(n, k);
            double ratio = 0.0;
            for (int i = 0; i < n; ++i)
                if (!(sigma_without(l, k - 1, i) > 0.0))
                    ratio = 2.0;
            return std::pair{ratio, detail::describe(l) + " k=" + std::to_string(k)};
        }));
    }
    {   // (3) sigma_k = sigma_k(l|i) + l_i sigma_{k-1}(l|i)
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("expansion_identity", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(1, n);
            const Spectrum l = rng.gamma_k(n, k);
            const double scale = sigma(detail::abs_spectrum(l), k);
            double worst = 0.0;
            for (int i = 0; i < n; ++i) {
                const double rhs = (k < n ? sigma_without(l, k, i) : 0.0) + l[i] * sigma_without(l, k - 1, i);
                worst = std::max(worst, std::abs(sigma(l, k) - rhs) / scale / 1e-12);
            }
            return std::pair{worst, detail::describe(l) + " k=" + std::to_string(k)};
        }));
    }
    {   // (4) sum_i d/dl_i (sigma_k/sigma_l)^{1/(k-l)} >= (C_n^k/C_n^l)^{1/(k-l)}
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("quotient_gradient_bound", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(1, n), l0 = rng.integer(0, k - 1);
            const Spectrum l = rng.gamma_k(n, k);
            const double sk = sigma(l, k), sl = sigma(l, l0);
            const double qv = std::pow(sk / sl, 1.0 / (k - l0));
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                const double dl = l0 > 0 ? sigma_without(l, l0 - 1, i) / sl : 0.0;
                sum += qv / (k - l0) * (sigma_without(l, k - 1, i) / sk - dl);
            }
            const double bound = std::pow(binomial(n, k) / binomial(n, l0), 1.0 / (k - l0));
            const double deficit = bound - sum;
            return std::pair{deficit / (1e-12 * std::max(1.0, bound)),
                             detail::describe(l) + " k=" + std::to_string(k) + " l=" + std::to_string(l0)};
        }));
    }
    {   // (5) concavity of (sigma_k/sigma_l)^{1/(k-l)} on Gamma_k
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("quotient_concavity", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(1, n), l0 = rng.integer(0, k - 1);
            const Spectrum a = rng.gamma_k(n, k), b = rng.gamma_k(n, k);
            const double t = rng.uniform(0.0, 1.0);
            std::vector<double> mix(n);
            for (int i = 0; i < n; ++i)
                mix[i] = t * a[i] + (1.0 - t) * b[i];
            auto Q = [&](const Spectrum& x) { return std::pow(sigma(x, k) / sigma(x, l0), 1.0 / (k - l0)); };
            const double deficit = t * Q(a) + (1.0 - t) * Q(b) - Q(Spectrum(mix));
            return std::pair{deficit / 1e-10, detail::describe(a) + " " + detail::describe(b) + " t=" +
                                                  std::to_string(t) + " k=" + std::to_string(k)};
        }));
    }
    {   // (6) ordering of sigma_{k-1}(l|i) for descending l
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("partial_ordering", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(1, n);
            const Spectrum raw = rng.gamma_k(n, k);
            std::vector<double> v(raw.values().begin(), raw.values().end());
            std::sort(v.begin(), v.end(), std::greater<>());
            const Spectrum l(v);
            const double scale = std::max(1.0, sigma(detail::abs_spectrum(l), k - 1));
            double worst = 0.0;
            for (int i = 0; i + 1 < n; ++i)
                worst = std::max(worst, (sigma_without(l, k - 1, i) - sigma_without(l, k - 1, i + 1)) / scale / 1e-12);
            return std::pair{worst, detail::describe(l) + " k=" + std::to_string(k)};
        }));
    }
    {   // (7) sum_i sigma_{k-1}(l|i) = (n-k+1) sigma_{k-1}
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("partial_sum_identity", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(1, n);
            const Spectrum l = rng.gamma_k(n, k);
            double sum = 0.0;
            for (int i = 0; i < n; ++i)
                sum += sigma_without(l, k - 1, i);
            const double scale = (n - k + 1) * sigma(detail::abs_spectrum(l), k - 1);
            return std::pair{std::abs(sum - (n - k + 1) * sigma(l, k - 1)) / scale / 1e-12,
                             detail::describe(l) + " k=" + std::to_string(k)};
        }));
    }
    {   // generalized Newton-MacLaurin chain
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("newton_maclaurin", s.samples, [&] {
            const int n = rng.integer(2, N);
            const int m = rng.integer(1, n), l0 = rng.integer(0, m - 1);
            const int r = rng.integer(1, m), s0 = rng.integer(0, std::min(l0, r - 1));
            const Spectrum l = rng.gamma_k(n, m);
            const double lhs = nm_quotient(l, m, l0), rhs = nm_quotient(l, r, s0);
            return std::pair{(lhs - rhs) / (1e-12 * std::max(1.0, rhs)),
                             detail::describe(l) + " (m,l)=(" + std::to_string(m) + "," + std::to_string(l0) +
                                 ") (r,s)=(" + std::to_string(r) + "," + std::to_string(s0) + ")"};
        }));
    }
    {   // sigma_matrix by principal minors vs by eigenvalues
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("minors_vs_spectral", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(0, n);
            const SymMatrix w = detail::random_symmetric(rng, n);
            const double scale = std::max(1e-300, sigma(detail::abs_spectrum(eigenvalues(w)), k));
            return std::pair{std::abs(sigma_matrix(w, k) - sigma_matrix_spectral(w, k)) / scale / 1e-12,
                             detail::describe(w) + " k=" + std::to_string(k)};
        }));
    }
    {   // orthogonal invariance
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("orthogonal_invariance", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(1, n);
            const Spectrum l = rng.gamma_k(n, k);
            const SymMatrix w = detail::conjugate(rng.orthogonal(n), {l.values().begin(), l.values().end()});
            const double ref = sigma(l, k);
            return std::pair{std::abs(sigma_matrix(w, k) - ref) / (1e-10 * (1.0 + std::abs(ref))),
                             detail::describe(l) + " k=" + std::to_string(k)};
        }));
    }
    {   // sigma_grad vs central differences of sigma_matrix, step 1e-6
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("sigma_grad_fd", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(1, n);
            const SymMatrix w = detail::random_symmetric(rng, n);
            const SymMatrix f = sigma_grad(w, k);
            const double h = 1e-6;
            double err = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    SymMatrix a = w, b = w;
                    a.set(i, j, w(i, j) + h);
                    b.set(i, j, w(i, j) - h);
                    // a symmetric off-diagonal perturbation moves both (i,j) and (j,i)
                    const double fd = (sigma_matrix(a, k) - sigma_matrix(b, k)) / (2 * h) / (i == j ? 1.0 : 2.0);
                    err = std::max(err, std::abs(fd - f(i, j)));
                }
            return std::pair{err / (1e-6 * std::max(1.0, detail::max_abs_entry(f))),
                             detail::describe(w) + " k=" + std::to_string(k)};
        }));
    }
    {   // sigma_grad is stable across repeated eigenvalues
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("degenerate_stability", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(1, n);
            std::vector<double> d(n);
            const int distinct = rng.integer(1, n - 1);
            std::vector<double> levels(distinct);
            for (double& x : levels)
                x = rng.uniform(-3.0, 3.0);
            for (double& x : d)
                x = levels[rng.integer(0, distinct - 1)];
            const auto q = rng.orthogonal(n);
            const SymMatrix w = detail::conjugate(q, d);
            SymMatrix v = w;
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j)
                    v.set(i, j, w(i, j) + 1e-9 * rng.uniform(-1.0, 1.0));
            const SymMatrix fw = sigma_grad(w, k), fv = sigma_grad(v, k);
            double err = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    err = std::max(err, std::abs(fw(i, j) - fv(i, j)));
            return std::pair{err / (1e-6 * std::max(1.0, detail::max_abs_entry(fw))),
                             detail::describe(w) + " k=" + std::to_string(k)};
        }));
    }
    {   // sigma_hess_diag vs difference of sigma_{k-1}(l|i) in l_j (exact: affine in l_j)
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("hess_diag_fd", s.samples, [&] {
            const int n = rng.integer(2, N), k = rng.integer(2, n);
            const Spectrum l = rng.gamma_k(n, k);
            const int i = rng.integer(0, n - 1), j = rng.integer(0, n - 1);
            std::vector<double> v(l.values().begin(), l.values().end());
            const double h = 1.0;
            v[j] += h;
            const double fd = (sigma_without(Spectrum(v), k - 1, i) - sigma_without(l, k - 1, i)) / h;
            const double scale = std::max(1.0, sigma(detail::abs_spectrum(Spectrum(v)), k - 1));
            return std::pair{std::abs(fd - sigma_hess_diag(l, k, i, j)) / scale / 1e-12,
                             detail::describe(l) + " k=" + std::to_string(k)};
        }));
    }
    {   // vectors outside Gamma_m must be rejected by nm_quotient
        PropertyRng rng(s.seed, stream++);
        out.push_back(detail::run_property("nm_domain_error", std::min(s.samples, 1000), [&] {
            const int n = rng.integer(2, N), m = rng.integer(1, n);
            std::vector<double> v(n);
            for (double& x : v)
                x = -rng.log_uniform(1e-2, 1e2);
            const Spectrum l(v); // sigma_1 < 0, outside every cone
            try {
                nm_quotient(l, m, 0);
            }
            catch (const DomainError&) {
                return std::pair{0.0, std::string()};
            }
            return std::pair{2.0, detail::describe(l) + " m=" + std::to_string(m)};
        }));
    }
    return out;
}

} // namespace lpdcm
