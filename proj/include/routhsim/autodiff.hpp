#pragma once

// Differentiation engine: type-erased functions callable at several scalar
// depths, forward-mode gradients/Jacobians, and a central-difference oracle.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "routhsim/dense.hpp"
#include "routhsim/dual.hpp"

namespace routhsim {

/// A callable stored once per scalar depth (double, D1, D2), built from one
/// generic lambda. `Sig<T>` is the function type at depth T.
template <template <class> class Sig>
class PolyFn {
public:
    PolyFn() = default;

    template <class F, class = std::enable_if_t<!std::is_same_v<std::decay_t<F>, PolyFn>>>
    PolyFn(F f)  // NOLINT: intentionally implicit from generic lambdas
        : f0_(f), f1_(f), f2_(std::move(f))
    {
    }

    explicit operator bool() const { return static_cast<bool>(f0_); }

    template <class T>
    const std::function<Sig<T>> &at() const
    {
        if constexpr (std::is_same_v<T, double>)
            return f0_;
        else if constexpr (std::is_same_v<T, D1>)
            return f1_;
        else {
            static_assert(std::is_same_v<T, D2>, "PolyFn supports double, D1 and D2 only");
            return f2_;
        }
    }

private:
    std::function<Sig<double>> f0_;
    std::function<Sig<D1>> f1_;
    std::function<Sig<D2>> f2_;
};

template <class T> using ScalarOfQV = T(const Vec<T> &q, const Vec<T> &v);
template <class T> using ScalarOfQVP = T(const Vec<T> &q, const Vec<T> &v, const Vec<T> &p);
template <class T> using MatOfQ = Mat<T>(const Vec<T> &q);
template <class T> using ScalarOfX = T(const Vec<T> &x);

using LagrangianFn = PolyFn<ScalarOfQV>;
using ConstraintFn = PolyFn<ScalarOfQVP>;
using MatrixFn = PolyFn<MatOfQ>;

/// Gradient of a scalar function by one forward sweep per coordinate.
/// `f` must accept Vec<Dual<T>>.
template <class T, class F>
Vec<T> gradient(F &&f, const Vec<T> &x)
{
    Vec<T> g(x.size());
    Vec<Dual<T>> xd = lift<Dual<T>>(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        xd[i].eps = T(1.0);
        g[i] = f(xd).eps;
        xd[i].eps = T(0.0);
    }
    return g;
}

/// Jacobian (rows = outputs) of a vector function; `f` accepts Vec<Dual<T>>.
template <class T, class F>
Mat<T> jacobian(F &&f, const Vec<T> &x)
{
    Vec<Dual<T>> xd = lift<Dual<T>>(x);
    Mat<T> J;
    for (std::size_t j = 0; j < x.size(); ++j) {
        xd[j].eps = T(1.0);
        Vec<Dual<T>> y = f(xd);
        if (j == 0) J = Mat<T>(y.size(), x.size());
        for (std::size_t i = 0; i < y.size(); ++i) J(i, j) = y[i].eps;
        xd[j].eps = T(0.0);
    }
    return J;
}

/// Partials of L(q, v) with respect to q and v at scalar depth T.
template <class T>
std::pair<Vec<T>, Vec<T>> lagrangian_partials(const LagrangianFn &L, const Vec<T> &q, const Vec<T> &v)
{
    using DT = Dual<T>;
    const auto &f = L.at<DT>();
    Vec<DT> vd = lift<DT>(v);
    Vec<T> dq = gradient<T>([&](const Vec<DT> &qd) { return f(qd, vd); }, q);
    Vec<DT> qd = lift<DT>(q);
    Vec<T> dv = gradient<T>([&](const Vec<DT> &vv) { return f(qd, vv); }, v);
    return {std::move(dq), std::move(dv)};
}

/// Central-difference step used by the oracle: cbrt(eps) * max(1, |x|).
inline double fd_step(double x)
{
    return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(x));
}

/// Central finite-difference gradient (cross-check oracle only).
template <class F>
Vec<double> fd_gradient(F &&f, const Vec<double> &x)
{
    Vec<double> g(x.size());
    Vec<double> xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double h = fd_step(x[i]);
        xp[i] = x[i] + h;
        double fp = f(xp);
        xp[i] = x[i] - h;
        double fm = f(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace routhsim
