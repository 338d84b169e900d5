#pragma once

// Small dense linear algebra: row-major matrices, LU with partial pivoting,
// and the nonsymmetric eigenvalue problem (balance, Householder Hessenberg
// reduction, Francis double-shift QR). Dimensions in this project stay below
// a few hundred, so nothing here is blocked or vectorised.

#include "ks/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace ks {

using Vector = std::vector<double>;
using Complex = std::complex<double>;

template <class T>
class BasicMatrix {
public:
    BasicMatrix() = default;
    BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows)
        , cols_(cols)
        , data_(rows * cols, fill)
    {
    }

    static BasicMatrix identity(std::size_t n)
    {
        BasicMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    std::vector<T> column(std::size_t j) const
    {
        std::vector<T> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    void set_column(std::size_t j, std::span<const T> c) noexcept
    {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
    }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using CMatrix = BasicMatrix<Complex>;

inline double norm2(std::span<const double> x) noexcept
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline double norm_inf(std::span<const double> x) noexcept
{
    double s = 0.0;
    for (double v : x) s = std::max(s, std::abs(v));
    return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vector matvec(const Matrix& a, std::span<const double> x)
{
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        const auto r = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

inline Matrix matmul(const Matrix& a, const Matrix& b)
{
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const auto br = b.row(k);
            auto cr = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) cr[j] += aik * br[j];
        }
    return c;
}

/// LU factorisation with partial pivoting. Throws near_bifurcation when a
/// pivot is negligible relative to the matrix scale; callers treat a singular
/// Jacobian as "too close to a bifurcation to solve".
template <class T>
class BasicLU {
public:
    explicit BasicLU(BasicMatrix<T> a, double singular_tol = 1e-14)
        : lu_(std::move(a))
        , perm_(lu_.rows())
    {
        if (!lu_.square()) fail(ErrorKind::invalid_operator, "LU requires a square matrix");
        const std::size_t n = lu_.rows();
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        double scale = 0.0;
        for (const T& v : lu_.data()) scale = std::max(scale, static_cast<double>(std::abs(v)));
        if (scale == 0.0 && n > 0) fail(ErrorKind::near_bifurcation, "LU: zero matrix");
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t piv = k;
            double best = std::abs(lu_(k, k));
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > best) {
                    best = std::abs(lu_(i, k));
                    piv = i;
                }
            if (best <= singular_tol * scale)
                fail(ErrorKind::near_bifurcation, "LU: matrix is numerically singular at column " + std::to_string(k));
            if (piv != k) {
                std::swap(perm_[k], perm_[piv]);
                for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
            }
            const T inv = T{1} / lu_(k, k);
            for (std::size_t i = k + 1; i < n; ++i) {
                const T f = lu_(i, k) * inv;
                lu_(i, k) = f;
                if (f == T{}) continue;
                for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    std::vector<T> solve(std::span<const T> b) const
    {
        const std::size_t n = lu_.rows();
        std::vector<T> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
        for (std::size_t ii = n; ii-- > 0;) {
            for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= lu_(ii, j) * x[j];
            x[ii] /= lu_(ii, ii);
        }
        return x;
    }

private:
    BasicMatrix<T> lu_;
    std::vector<std::size_t> perm_;
};

using LU = BasicLU<double>;
using CLU = BasicLU<Complex>;

inline Vector solve(const Matrix& a, std::span<const double> b) { return LU(a).solve(b); }

namespace detail {

// Parlett-Reinsch balancing by powers of two; eigenvalues are unchanged.
inline void balance(Matrix& a)
{
    const std::size_t n = a.rows();
    constexpr double radix = 2.0;
    constexpr double radix2 = radix * radix;
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) {
                    c += std::abs(a(j, i));
                    r += std::abs(a(i, j));
                }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= radix2;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix2;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                g = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j) a(i, j) *= g;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

// Householder reduction to upper Hessenberg form (similarity transform).
inline void hessenberg(Matrix& a)
{
    const std::size_t n = a.rows();
    if (n < 3) return;
    Vector v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) alpha += a(i, k) * a(i, k);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (a(k + 1, k) > 0) alpha = -alpha;
        std::fill(v.begin(), v.end(), 0.0);
        v[k + 1] = a(k + 1, k) - alpha;
        for (std::size_t i = k + 2; i < n; ++i) v[i] = a(i, k);
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;
        // A <- (I - beta v v^T) A
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
            s *= beta;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
        }
        // A <- A (I - beta v v^T)
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            s *= beta;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
        }
        a(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

inline double sign_of(double magnitude, double s) noexcept { return s >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude); }

// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
inline std::vector<Complex> hessenberg_qr(Matrix& a)
{
    const int n = static_cast<int>(a.rows());
    std::vector<Complex> w(static_cast<std::size_t>(n));
    if (n == 0) return w;
    auto A = [&a](int i, int j) -> double& { return a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); };

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(A(i, j));

    int nn = n - 1;
    double shift = 0.0;
    long total_sweeps = 0;
    const long max_sweeps = 30L * n;
    while (nn >= 0) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 1; --l) {
                double s = std::abs(A(l - 1, l - 1)) + std::abs(A(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(A(l, l - 1)) + s == s) {
                    A(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = A(nn, nn);
            if (l == nn) {
                w[static_cast<std::size_t>(nn)] = x + shift;
                --nn;
            } else {
                double y = A(nn - 1, nn - 1);
                double ww = A(nn, nn - 1) * A(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + ww;
                    double z = std::sqrt(std::abs(q));
                    x += shift;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        w[static_cast<std::size_t>(nn - 1)] = w[static_cast<std::size_t>(nn)] = x + z;
                        if (z != 0.0) w[static_cast<std::size_t>(nn)] = x - ww / z;
                    } else {
                        w[static_cast<std::size_t>(nn - 1)] = Complex(x + p, z);
                        w[static_cast<std::size_t>(nn)] = Complex(x + p, -z);
                    }
                    nn -= 2;
                } else {
                    if (++total_sweeps > max_sweeps)
                        fail(ErrorKind::eigen_failure, "QR iteration did not converge after " + std::to_string(max_sweeps)
                                                           + " sweeps");
                    if (its == 10 || its == 20) {
                        // exceptional shift
                        shift += x;
                        for (int i = 0; i <= nn; ++i) A(i, i) -= x;
                        const double s = std::abs(A(nn, nn - 1)) + std::abs(A(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        ww = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
                    for (; m >= l; --m) {
                        z = A(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - ww) / A(m + 1, m) + A(m, m + 1);
                        q = A(m + 1, m + 1) - z - r - s;
                        r = A(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(A(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(A(m - 1, m - 1)) + std::abs(z) + std::abs(A(m + 1, m + 1)));
                        if (u + v == v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        A(i, i - 2) = 0.0;
                        if (i != m + 2) A(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = A(k, k - 1);
                            q = A(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1) r = A(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) A(k, k - 1) = -A(k, k - 1);
                        } else {
                            A(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = A(k, j) + q * A(k + 1, j);
                            if (k != nn - 1) {
                                p += r * A(k + 2, j);
                                A(k + 2, j) -= p * z;
                            }
                            A(k + 1, j) -= p * y;
                            A(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * A(i, k) + y * A(i, k + 1);
                            if (k != nn - 1) {
                                p += z * A(i, k + 2);
                                A(i, k + 2) -= p * r;
                            }
                            A(i, k + 1) -= p * q;
                            A(i, k) -= p;
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    return w;
}

} // namespace detail

/// Sort by descending real part; ties broken by descending imaginary part so
/// conjugate pairs come out as (a+ib, a-ib).
inline void sort_eigenvalues(std::vector<Complex>& w)
{
    std::stable_sort(w.begin(), w.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
}

/// All eigenvalues of a real square matrix, sorted by descending real part.
/// Complex eigenvalues come in exactly conjugate pairs.
inline std::vector<Complex> eigenvalues(Matrix a)
{
    if (!a.square()) fail(ErrorKind::invalid_operator, "eigenvalues: matrix is not square");
    for (double v : a.data())
        if (!std::isfinite(v)) fail(ErrorKind::eigen_failure, "eigenvalues: non-finite matrix entry");
    detail::balance(a);
    detail::hessenberg(a);
    auto w = detail::hessenberg_qr(a);
    sort_eigenvalues(w);
    return w;
}

/// Eigenvector for a known (approximate) eigenvalue by inverse iteration in
/// complex arithmetic. Normalised to unit 2-norm with the largest component
/// real and positive.
inline std::vector<Complex> eigenvector(const Matrix& a, Complex lambda, int iterations = 3)
{
    const std::size_t n = a.rows();
    double scale = 0.0;
    for (double v : a.data()) scale = std::max(scale, std::abs(v));
    const Complex shift = lambda + Complex(1e-10 * std::max(scale, 1.0), 0.0);
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = a(i, j) - (i == j ? shift : Complex{});
    const CLU lu(std::move(m), 0.0);
    std::vector<Complex> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = Complex(1.0 + 0.1 * std::sin(1.0 + static_cast<double>(i)), 0.0);
    for (int it = 0; it < iterations; ++it) {
        x = lu.solve(x);
        double nrm = 0.0;
        for (const auto& v : x) nrm += std::norm(v);
        nrm = std::sqrt(nrm);
        if (!(nrm > 0.0) || !std::isfinite(nrm)) fail(ErrorKind::eigen_failure, "inverse iteration broke down");
        for (auto& v : x) v /= nrm;
    }
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(x[i]) > std::abs(x[imax])) imax = i;
    const Complex phase = std::abs(x[imax]) > 0 ? std::conj(x[imax]) / std::abs(x[imax]) : Complex(1.0);
    for (auto& v : x) v *= phase;
    return x;
}

} // namespace ks
