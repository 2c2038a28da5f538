#pragma once

// Small dense vectors/matrices over an arbitrary scalar (double or nested
// duals). Eigen is used for the double-only rank-revealing work; this type is
// for the generic code paths that must run on dual numbers.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "routhsim/dual.hpp"
#include "routhsim/error.hpp"

namespace routhsim {

template <class T>
using Vec = std::vector<T>;

template <class T>
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0.0)) {}

    static Mat identity(std::size_t n)
    {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1.0);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    T &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T &operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Mat transpose() const
    {
        Mat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

template <class T>
Mat<T> operator*(const Mat<T> &a, const Mat<T> &b)
{
    assert(a.cols() == b.rows());
    Mat<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T &aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

template <class T>
Vec<T> operator*(const Mat<T> &a, const Vec<T> &x)
{
    assert(a.cols() == x.size());
    Vec<T> y(a.rows(), T(0.0));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

template <class T>
T dot(const Vec<T> &a, const Vec<T> &b)
{
    assert(a.size() == b.size());
    T s(0.0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

template <class T>
Vec<T> slice(const Vec<T> &x, std::size_t off, std::size_t len)
{
    return Vec<T>(x.begin() + static_cast<std::ptrdiff_t>(off), x.begin() + static_cast<std::ptrdiff_t>(off + len));
}

template <class T>
void append(Vec<T> &dst, const Vec<T> &src)
{
    dst.insert(dst.end(), src.begin(), src.end());
}

template <class To, class From>
Vec<To> lift(const Vec<From> &x)
{
    Vec<To> y;
    y.reserve(x.size());
    for (const auto &v : x) y.emplace_back(To(v));
    return y;
}

template <class To, class From>
Mat<To> lift(const Mat<From> &a)
{
    Mat<To> b(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) b(i, j) = To(a(i, j));
    return b;
}

template <class T>
Vec<double> values(const Vec<T> &x)
{
    Vec<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = value_of(x[i]);
    return y;
}

template <class T>
Mat<double> values(const Mat<T> &a)
{
    Mat<double> b(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) b(i, j) = value_of(a(i, j));
    return b;
}

inline constexpr double kPivotThreshold = 1e-12;

/// Partial-pivot LU factorization, usable on dual scalars (pivoting on values).
template <class T>
class LU {
public:
    explicit LU(Mat<T> a) : lu_(std::move(a)), perm_(lu_.rows())
    {
        const std::size_t n = lu_.rows();
        assert(lu_.cols() == n);
        for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t piv = k;
            double best = std::abs(value_of(lu_(k, k)));
            for (std::size_t i = k + 1; i < n; ++i) {
                double v = std::abs(value_of(lu_(i, k)));
                if (v > best) { best = v; piv = i; }
            }
            min_pivot_ = (k == 0) ? best : std::min(min_pivot_, best);
            if (best < kPivotThreshold) {
                singular_ = true;
                return;
            }
            if (piv != k) {
                for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
                std::swap(perm_[k], perm_[piv]);
            }
            for (std::size_t i = k + 1; i < n; ++i) {
                T f = lu_(i, k) / lu_(k, k);
                lu_(i, k) = f;
                for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    bool singular() const { return singular_; }
    double min_pivot() const { return min_pivot_; }

    T determinant() const
    {
        const std::size_t n = lu_.rows();
        T d(1.0);
        for (std::size_t i = 0; i < n; ++i) d = d * lu_(i, i);
        std::size_t swaps = 0;
        std::vector<std::size_t> p = perm_;
        for (std::size_t i = 0; i < n; ++i)
            while (p[i] != i) {
                std::swap(p[i], p[p[i]]);
                ++swaps;
            }
        return (swaps % 2) ? -d : d;
    }

    Vec<T> solve(const Vec<T> &b) const
    {
        const std::size_t n = lu_.rows();
        Vec<T> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
        for (std::size_t ii = n; ii-- > 0;) {
            for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= lu_(ii, j) * x[j];
            x[ii] = x[ii] / lu_(ii, ii);
        }
        return x;
    }

    Mat<T> inverse() const
    {
        const std::size_t n = lu_.rows();
        Mat<T> inv(n, n);
        Vec<T> e(n, T(0.0));
        for (std::size_t j = 0; j < n; ++j) {
            std::fill(e.begin(), e.end(), T(0.0));
            e[j] = T(1.0);
            Vec<T> col = solve(e);
            for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        }
        return inv;
    }

private:
    Mat<T> lu_;
    std::vector<std::size_t> perm_;
    bool singular_ = false;
    double min_pivot_ = 0.0;
};

/// Inverse of a square matrix; throws SingularFrame-kind errors via the caller.
template <class T>
Mat<T> inverse_or_throw(const Mat<T> &a, ErrorKind kind, const char *what)
{
    if (a.rows() == 0) return a;
    LU<T> lu(a);
    if (lu.singular()) throw Error(kind, std::string(what) + ": matrix singular (pivot below 1e-12)");
    return lu.inverse();
}

inline Eigen::MatrixXd to_eigen(const Mat<double> &a)
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
    return m;
}

inline Eigen::VectorXd to_eigen(const Vec<double> &x)
{
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

inline Vec<double> from_eigen(const Eigen::VectorXd &x) { return Vec<double>(x.data(), x.data() + x.size()); }

inline Mat<double> from_eigen(const Eigen::MatrixXd &m)
{
    Mat<double> a(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
    return a;
}

inline double max_abs(const Vec<double> &x)
{
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

inline double norm2(const Vec<double> &x)
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace routhsim
