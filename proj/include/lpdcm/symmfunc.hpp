#pragma once

// Elementary symmetric polynomials of eigenvalue vectors and symmetric
// matrices (dimension n <= 8), their first/second derivatives and the
// Garding cone machinery.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>

#include "error.hpp"

namespace lpdcm {

inline constexpr int kMaxDim = 8;

/// Binomial coefficient C_n^k (0 outside 0 <= k <= n).
inline double binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return std::round(r);
}

/// An ordered vector of n <= 8 finite reals, the argument of sigma_k.
class Spectrum {
public:
    Spectrum() = default;

    explicit Spectrum(std::span<const double> values)
    {
        if (values.empty() || values.size() > static_cast<std::size_t>(kMaxDim))
            throw ArgumentError("Spectrum: dimension must be in [1, 8], got " +
                                std::to_string(values.size()));
        n_ = static_cast<int>(values.size());
        for (int i = 0; i < n_; ++i) {
            if (!std::isfinite(values[i]))
                throw ArgumentError("Spectrum: non-finite entry");
            data_[i] = values[i];
        }
    }

    Spectrum(std::initializer_list<double> values)
        : Spectrum(std::span<const double>(values.begin(), values.size()))
    {
    }

    int size() const noexcept { return n_; }
    double operator[](int i) const { return data_[i]; }
    std::span<const double> values() const noexcept { return {data_.data(), static_cast<std::size_t>(n_)}; }

    /// The vector with entry i removed, written (lambda|i).
    Spectrum without(int i) const
    {
        Spectrum r;
        r.n_ = n_ - 1;
        for (int a = 0, b = 0; a < n_; ++a)
            if (a != i)
                r.data_[b++] = data_[a];
        return r;
    }

    Spectrum without(int i, int j) const
    {
        Spectrum r;
        r.n_ = n_ - 2;
        for (int a = 0, b = 0; a < n_; ++a)
            if (a != i && a != j)
                r.data_[b++] = data_[a];
        return r;
    }

private:
    std::array<double, kMaxDim> data_{};
    int n_ = 0;
};

/// Dense symmetric n x n matrix, n <= 8. Symmetry is maintained by every mutator.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(int n) : n_(n)
    {
        if (n < 1 || n > kMaxDim)
            throw ArgumentError("SymMatrix: dimension must be in [1, 8], got " + std::to_string(n));
    }

    /// Builds from a row-major n x n list; rejects asymmetric or non-finite input.
    static SymMatrix from_rows(int n, std::span<const double> rows)
    {
        SymMatrix m(n);
        if (rows.size() != static_cast<std::size_t>(n * n))
            throw ArgumentError("SymMatrix: expected n*n entries");
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double v = rows[i * n + j];
                if (!std::isfinite(v))
                    throw ArgumentError("SymMatrix: non-finite entry");
                if (v != rows[j * n + i])
                    throw ArgumentError("SymMatrix: entries are not symmetric");
                m.a_[i * kMaxDim + j] = v;
            }
        return m;
    }

    static SymMatrix identity(int n)
    {
        SymMatrix m(n);
        for (int i = 0; i < n; ++i)
            m.set(i, i, 1.0);
        return m;
    }

    static SymMatrix diagonal(const Spectrum& d)
    {
        SymMatrix m(d.size());
        for (int i = 0; i < d.size(); ++i)
            m.set(i, i, d[i]);
        return m;
    }

    int dim() const noexcept { return n_; }
    double operator()(int i, int j) const { return a_[i * kMaxDim + j]; }

    void set(int i, int j, double v)
    {
        a_[i * kMaxDim + j] = v;
        a_[j * kMaxDim + i] = v;
    }

    double frobenius_norm() const
    {
        double s = 0.0;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                s += (*this)(i, j) * (*this)(i, j);
        return std::sqrt(s);
    }

private:
    std::array<double, kMaxDim * kMaxDim> a_{};
    int n_ = 0;
};

/// Eigenvalues (ascending) and matching orthonormal eigenvectors, stored as columns.
struct SymEigen {
    Spectrum values;
    std::array<double, kMaxDim * kMaxDim> vectors{};

    double vector(int component, int which) const { return vectors[component * kMaxDim + which]; }
};

/// Cyclic Jacobi eigen-decomposition. Sweeps run in fixed (p, q) order until the
/// off-diagonal Frobenius norm drops below 1e-14 * ||W||_F.
inline SymEigen jacobi_eigen(const SymMatrix& w)
{
    const int n = w.dim();
    std::array<double, kMaxDim * kMaxDim> a{};
    std::array<double, kMaxDim * kMaxDim> v{};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            a[i * kMaxDim + j] = w(i, j);
        v[i * kMaxDim + i] = 1.0;
    }
    auto A = [&](int i, int j) -> double& { return a[i * kMaxDim + j]; };
    auto V = [&](int i, int j) -> double& { return v[i * kMaxDim + j]; };

    const double threshold = 1e-14 * w.frobenius_norm();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q)
                off += 2.0 * A(p, q) * A(p, q);
        if (std::sqrt(off) <= threshold)
            break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (apq == 0.0)
                    continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int r = 0; r < n; ++r) {
                    const double arp = A(r, p);
                    const double arq = A(r, q);
                    A(r, p) = c * arp - s * arq;
                    A(r, q) = s * arp + c * arq;
                }
                for (int r = 0; r < n; ++r) {
                    const double apr = A(p, r);
                    const double aqr = A(q, r);
                    A(p, r) = c * apr - s * aqr;
                    A(q, r) = s * apr + c * aqr;
                }
                for (int r = 0; r < n; ++r) {
                    const double vrp = V(r, p);
                    const double vrq = V(r, q);
                    V(r, p) = c * vrp - s * vrq;
                    V(r, q) = s * vrp + c * vrq;
                }
            }
        }
    }

    std::array<int, kMaxDim> order{};
    for (int i = 0; i < n; ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.begin() + n, [&](int x, int y) { return A(x, x) < A(y, y); });

    std::array<double, kMaxDim> vals{};
    SymEigen out;
    for (int c = 0; c < n; ++c) {
        vals[c] = A(order[c], order[c]);
        for (int r = 0; r < n; ++r)
            out.vectors[r * kMaxDim + c] = V(r, order[c]);
    }
    out.values = Spectrum(std::span<const double>(vals.data(), n));
    return out;
}

inline Spectrum eigenvalues(const SymMatrix& w) { return jacobi_eigen(w).values; }

/// k-th elementary symmetric polynomial by the prefix recurrence
/// e_k(i) = e_k(i-1) + lambda_i e_{k-1}(i-1). sigma_0 = 1.
inline double sigma(const Spectrum& lambda, int k)
{
    const int n = lambda.size();
    if (k < 0 || k > n)
        throw ArgumentError("sigma: k = " + std::to_string(k) + " outside [0, " + std::to_string(n) + "]");
    std::array<double, kMaxDim + 1> e{};
    e[0] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int m = std::min(i + 1, k); m >= 1; --m)
            e[m] += lambda[i] * e[m - 1];
    return e[k];
}

/// sigma_k(lambda|i): sigma_k of lambda with entry i removed. Equals d sigma_{k+1} / d lambda_i.
inline double sigma_without(const Spectrum& lambda, int k, int i)
{
    if (lambda.size() == 1)
        return k == 0 ? 1.0 : 0.0;
    if (k > lambda.size() - 1)
        return 0.0;
    return sigma(lambda.without(i), k);
}

/// sigma_k(lambda|ij), i != j.
inline double sigma_without(const Spectrum& lambda, int k, int i, int j)
{
    if (lambda.size() == 2)
        return k == 0 ? 1.0 : 0.0;
    if (k > lambda.size() - 2)
        return 0.0;
    return sigma(lambda.without(i, j), k);
}

namespace detail {

// Determinant of the principal submatrix selected by `rows`, Gaussian elimination with partial pivoting.
inline double principal_minor(const SymMatrix& w, std::span<const int> rows)
{
    const int m = static_cast<int>(rows.size());
    std::array<double, kMaxDim * kMaxDim> a{};
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            a[i * kMaxDim + j] = w(rows[i], rows[j]);
    double det = 1.0;
    for (int c = 0; c < m; ++c) {
        int piv = c;
        for (int r = c + 1; r < m; ++r)
            if (std::abs(a[r * kMaxDim + c]) > std::abs(a[piv * kMaxDim + c]))
                piv = r;
        if (a[piv * kMaxDim + c] == 0.0)
            return 0.0;
        if (piv != c) {
            for (int j = 0; j < m; ++j)
                std::swap(a[c * kMaxDim + j], a[piv * kMaxDim + j]);
            det = -det;
        }
        const double d = a[c * kMaxDim + c];
        det *= d;
        for (int r = c + 1; r < m; ++r) {
            const double f = a[r * kMaxDim + c] / d;
            for (int j = c + 1; j < m; ++j)
                a[r * kMaxDim + j] -= f * a[c * kMaxDim + j];
        }
    }
    return det;
}

inline void check_order(int n, int k, int lo, const char* who)
{
    if (k < lo || k > n)
        throw ArgumentError(std::string(who) + ": k = " + std::to_string(k) + " outside [" + std::to_string(lo) +
                            ", " + std::to_string(n) + "]");
}

} // namespace detail

/// sigma_k of the eigenvalues of W, as the sum of all k x k principal minors.
inline double sigma_matrix(const SymMatrix& w, int k)
{
    const int n = w.dim();
    detail::check_order(n, k, 0, "sigma_matrix");
    if (k == 0)
        return 1.0;
    if (n == 2)
        return k == 1 ? w(0, 0) + w(1, 1) : w(0, 0) * w(1, 1) - w(0, 1) * w(1, 0);

    std::array<int, kMaxDim> idx{};
    for (int i = 0; i < k; ++i)
        idx[i] = i;
    double sum = 0.0;
    while (true) {
        sum += detail::principal_minor(w, std::span<const int>(idx.data(), k));
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == n - k + pos)
            --pos;
        if (pos < 0)
            break;
        ++idx[pos];
        for (int j = pos + 1; j < k; ++j)
            idx[j] = idx[j - 1] + 1;
    }
    return sum;
}

/// Second route for sigma_matrix: Jacobi eigenvalues followed by the vector recurrence.
inline double sigma_matrix_spectral(const SymMatrix& w, int k)
{
    detail::check_order(w.dim(), k, 0, "sigma_matrix_spectral");
    return sigma(eigenvalues(w), k);
}

/// F^{ij} = d sigma_k / d W_ij, as sum_a sigma_{k-1}(lambda|a) v_a v_a^T.
/// The convention is dsigma = sum_{i,j} F^{ij} dW_ij over all (i, j) pairs.
inline SymMatrix sigma_grad(const SymMatrix& w, int k)
{
    const int n = w.dim();
    detail::check_order(n, k, 1, "sigma_grad");
    const SymEigen eig = jacobi_eigen(w);
    std::array<double, kMaxDim> weight{};
    for (int a = 0; a < n; ++a)
        weight[a] = sigma_without(eig.values, k - 1, a);
    SymMatrix f(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int a = 0; a < n; ++a)
                s += weight[a] * eig.vector(i, a) * eig.vector(j, a);
            f.set(i, j, s);
        }
    return f;
}

/// d^2 sigma_k / dW_ii dW_jj at diagonal W = diag(lambda): sigma_{k-2}(lambda|ij) for i != j, else 0.
inline double sigma_hess_diag(const Spectrum& lambda, int k, int i, int j)
{
    const int n = lambda.size();
    detail::check_order(n, k, 2, "sigma_hess_diag");
    if (i < 0 || i >= n || j < 0 || j >= n)
        throw ArgumentError("sigma_hess_diag: index out of range");
    if (i == j)
        return 0.0;
    return sigma_without(lambda, k - 2, i, j);
}

/// lambda in Gamma_k, i.e. sigma_1..sigma_k all strictly positive.
inline bool in_gamma_cone(const Spectrum& lambda, int k)
{
    detail::check_order(lambda.size(), k, 1, "in_gamma_cone");
    std::array<double, kMaxDim + 1> e{};
    e[0] = 1.0;
    const int n = lambda.size();
    for (int i = 0; i < n; ++i)
        for (int m = std::min(i + 1, k); m >= 1; --m)
            e[m] += lambda[i] * e[m - 1];
    for (int m = 1; m <= k; ++m)
        if (!(e[m] > 0.0))
            return false;
    return true;
}

/// Normalized Newton-MacLaurin quotient [(sigma_m/C_n^m) / (sigma_l/C_n^l)]^{1/(m-l)}.
inline double nm_quotient(const Spectrum& lambda, int m, int l)
{
    const int n = lambda.size();
    if (!(0 <= l && l < m && m <= n))
        throw ArgumentError("nm_quotient: need 0 <= l < m <= n");
    if (!in_gamma_cone(lambda, m))
        throw DomainError("nm_quotient: lambda is not in Gamma_" + std::to_string(m));
    const double num = sigma(lambda, m) / binomial(n, m);
    const double den = sigma(lambda, l) / binomial(n, l);
    return std::pow(num / den, 1.0 / (m - l));
}

} // namespace lpdcm
