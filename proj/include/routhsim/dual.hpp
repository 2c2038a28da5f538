#pragma once

// Forward-mode dual numbers. Dual<double> carries one directional first
// derivative; Dual<Dual<double>> (D2) carries mixed second derivatives.

#include <cmath>
#include <type_traits>

namespace routhsim {

template <class T>
struct Dual {
    T val{};
    T eps{};

    constexpr Dual() = default;
    constexpr Dual(double c) : val(c), eps(0.0) {}  // NOLINT: implicit constant lift
    template <class U = T, std::enable_if_t<!std::is_same_v<U, double>, int> = 0>
    constexpr Dual(const T &c) : val(c), eps(0.0) {}  // NOLINT
    constexpr Dual(const T &v, const T &e) : val(v), eps(e) {}

    Dual &operator+=(const Dual &o) { val += o.val; eps += o.eps; return *this; }
    Dual &operator-=(const Dual &o) { val -= o.val; eps -= o.eps; return *this; }
    Dual &operator*=(const Dual &o) { *this = *this * o; return *this; }
    Dual &operator/=(const Dual &o) { *this = *this / o; return *this; }
};

using D1 = Dual<double>;
using D2 = Dual<D1>;

template <class T> struct is_dual : std::false_type {};
template <class T> struct is_dual<Dual<T>> : std::true_type {};

/// Innermost real value of a possibly nested dual.
inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T> &x) { return value_of(x.val); }

template <class T> Dual<T> operator+(const Dual<T> &a, const Dual<T> &b) { return {a.val + b.val, a.eps + b.eps}; }
template <class T> Dual<T> operator-(const Dual<T> &a, const Dual<T> &b) { return {a.val - b.val, a.eps - b.eps}; }
template <class T> Dual<T> operator-(const Dual<T> &a) { return {-a.val, -a.eps}; }
template <class T> Dual<T> operator*(const Dual<T> &a, const Dual<T> &b) { return {a.val * b.val, a.eps * b.val + a.val * b.eps}; }
template <class T> Dual<T> operator/(const Dual<T> &a, const Dual<T> &b)
{
    T q = a.val / b.val;
    return {q, (a.eps - q * b.eps) / b.val};
}

// Mixed arithmetic with plain doubles (avoids ambiguous conversions at depth 2).
template <class T> Dual<T> operator+(const Dual<T> &a, double b) { return {a.val + b, a.eps}; }
template <class T> Dual<T> operator+(double a, const Dual<T> &b) { return {a + b.val, b.eps}; }
template <class T> Dual<T> operator-(const Dual<T> &a, double b) { return {a.val - b, a.eps}; }
template <class T> Dual<T> operator-(double a, const Dual<T> &b) { return {a - b.val, -b.eps}; }
template <class T> Dual<T> operator*(const Dual<T> &a, double b) { return {a.val * b, a.eps * b}; }
template <class T> Dual<T> operator*(double a, const Dual<T> &b) { return {a * b.val, a * b.eps}; }
template <class T> Dual<T> operator/(const Dual<T> &a, double b) { return {a.val / b, a.eps / b}; }
template <class T> Dual<T> operator/(double a, const Dual<T> &b) { return Dual<T>(a) / b; }

template <class T> bool operator<(const Dual<T> &a, const Dual<T> &b) { return value_of(a) < value_of(b); }
template <class T> bool operator>(const Dual<T> &a, const Dual<T> &b) { return value_of(a) > value_of(b); }
template <class T> bool operator<(const Dual<T> &a, double b) { return value_of(a) < b; }
template <class T> bool operator>(const Dual<T> &a, double b) { return value_of(a) > b; }

template <class T> Dual<T> sin(const Dual<T> &a) { using std::sin, std::cos; return {sin(a.val), a.eps * cos(a.val)}; }
template <class T> Dual<T> cos(const Dual<T> &a) { using std::sin, std::cos; return {cos(a.val), -(a.eps * sin(a.val))}; }
template <class T> Dual<T> exp(const Dual<T> &a)
{
    using std::exp;
    T e = exp(a.val);
    return {e, a.eps * e};
}
template <class T> Dual<T> log(const Dual<T> &a) { using std::log; return {log(a.val), a.eps / a.val}; }
template <class T> Dual<T> sqrt(const Dual<T> &a)
{
    using std::sqrt;
    T s = sqrt(a.val);
    return {s, a.eps / (2.0 * s)};
}
template <class T> Dual<T> abs(const Dual<T> &a) { return value_of(a) < 0.0 ? -a : a; }

/// x^n for integer n by repeated multiplication (exact derivative at x = 0).
template <class T>
T ipow(const T &x, int n)
{
    if (n < 0) return T(1.0) / ipow(x, -n);
    T r(1.0);
    T b = x;
    while (n) {
        if (n & 1) r = r * b;
        b = b * b;
        n >>= 1;
    }
    return r;
}

inline bool is_const_zero(double x) { return x == 0.0; }
template <class T>
bool is_const_zero(const Dual<T> &x) { return is_const_zero(x.val) && is_const_zero(x.eps); }
inline bool is_const(double) { return true; }
template <class T>
bool is_const(const Dual<T> &x) { return is_const_zero(x.eps) && is_const(x.val); }

/// General power x^y; falls back to ipow for integral constant exponents.
template <class T>
T pow_general(const T &x, const T &y)
{
    using std::exp, std::log;
    double yv = value_of(y);
    if constexpr (is_dual<T>::value) {
        if (is_const(y) && std::floor(yv) == yv && std::abs(yv) < 64)
            return ipow(x, static_cast<int>(yv));
    } else {
        if (std::floor(yv) == yv && std::abs(yv) < 64) return ipow(x, static_cast<int>(yv));
    }
    return exp(y * log(x));
}

/// Seed variable: value v with unit tangent.
template <class T>
Dual<T> make_var(const T &v) { return Dual<T>(v, T(1.0)); }

}  // namespace routhsim
