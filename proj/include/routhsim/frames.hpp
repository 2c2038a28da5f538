#pragma once

// Anholonomic frames on a single coordinate chart.
//
// A frame is the matrix Z(q) whose column a holds the components Z^b_a of the
// frame vector field Z_a. Quasi-velocities are W v with W = Z^-1, and
// quasi-momenta are Z^T p, so the pairing p.v is preserved.

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "routhsim/autodiff.hpp"
#include "routhsim/dense.hpp"
#include "routhsim/error.hpp"

namespace routhsim {

struct Dims {
    std::size_t n = 0;     // configuration dimension
    std::size_t k = 0;     // group dimension
    std::size_t m = 0;     // shape dimension, n - k
    std::size_t k_mu = 0;  // isotropy algebra dimension

    static Dims make(std::size_t m, std::size_t k, std::size_t k_mu)
    {
        if (k_mu > k) throw Error(ErrorKind::InvalidArgument, "Dims: k_mu exceeds k");
        return Dims{m + k, k, m, k_mu};
    }
};

/// Rank-3 array indexed [alpha][beta][gamma].
template <class T>
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t a, std::size_t b, std::size_t c) : a_(a), b_(b), c_(c), data_(a * b * c, T(0.0)) {}

    T &operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * b_ + j) * c_ + k]; }
    const T &operator()(std::size_t i, std::size_t j, std::size_t k) const { return data_[(i * b_ + j) * c_ + k]; }

    std::size_t dim0() const { return a_; }
    std::size_t dim1() const { return b_; }
    std::size_t dim2() const { return c_; }

private:
    std::size_t a_ = 0, b_ = 0, c_ = 0;
    std::vector<T> data_;
};

template <class T> using TensorOfQ = Tensor3<T>(const Vec<T> &q);

class Frame {
public:
    Frame() = default;
    Frame(std::size_t n, MatrixFn z, std::optional<PolyFn<TensorOfQ>> analytic_r = std::nullopt)
        : n_(n), z_(std::move(z)), analytic_r_(std::move(analytic_r))
    {
    }

    static Frame coordinate(std::size_t n)
    {
        return Frame(n, MatrixFn([n](const auto &q) {
                         using T = typename std::decay_t<decltype(q)>::value_type;
                         return Mat<T>::identity(n);
                     }));
    }

    std::size_t dim() const { return n_; }
    const MatrixFn &z() const { return z_; }
    const std::optional<PolyFn<TensorOfQ>> &analytic_r() const { return analytic_r_; }

private:
    std::size_t n_ = 0;
    MatrixFn z_;
    std::optional<PolyFn<TensorOfQ>> analytic_r_;
};

template <class T>
struct FrameAt {
    Mat<T> Z;
    Mat<T> W;
};

inline constexpr double kFrameInverseTol = 1e-10;

/// Z(q) and W(q) = Z(q)^-1, with the inverse verified to 1e-10.
template <class T>
FrameAt<T> eval_frame(const Frame &frame, const Vec<T> &q)
{
    Mat<T> Z = frame.z().at<T>()(q);
    LU<T> lu(Z);
    if (lu.singular() || std::abs(value_of(lu.determinant())) < kPivotThreshold)
        throw Error(ErrorKind::SingularFrame, "frame matrix is singular at the evaluated point");
    Mat<T> W = lu.inverse();
    Mat<double> ZW = values(Z) * values(W);
    for (std::size_t i = 0; i < ZW.rows(); ++i)
        for (std::size_t j = 0; j < ZW.cols(); ++j)
            if (std::abs(ZW(i, j) - (i == j ? 1.0 : 0.0)) > kFrameInverseTol)
                throw Error(ErrorKind::SingularFrame, "frame inverse check Z*W = I failed");
    return {std::move(Z), std::move(W)};
}

/// dZ[tau] = dZ/dq^tau, by forward-mode differentiation of the frame.
template <class T>
std::vector<Mat<T>> frame_derivative(const Frame &frame, const Vec<T> &q)
{
    using DT = Dual<T>;
    const auto &zf = frame.z().at<DT>();
    Vec<DT> qd = lift<DT>(q);
    std::vector<Mat<T>> dZ;
    dZ.reserve(q.size());
    for (std::size_t t = 0; t < q.size(); ++t) {
        qd[t].eps = T(1.0);
        Mat<DT> Zd = zf(qd);
        Mat<T> d(Zd.rows(), Zd.cols());
        for (std::size_t i = 0; i < Zd.rows(); ++i)
            for (std::size_t j = 0; j < Zd.cols(); ++j) d(i, j) = Zd(i, j).eps;
        dZ.push_back(std::move(d));
        qd[t].eps = T(0.0);
    }
    return dZ;
}

struct AnholonomityOptions {
    bool validate = true;       // cross-check against the dW-based formula
    double tolerance = 1e-6;    // agreement tolerance for both checks
};

/// Second route to R (values only): R^a_bc = -(Z^t_b dW^a_d/dq^t Z^d_c - (b <-> c)),
/// differentiating W = Z^-1 one dual depth above T.
template <class T>
Tensor3<double> anholonomity_dw(const Frame &frame, const Vec<T> &q)
{
    const std::size_t n = q.size();
    using DT = Dual<T>;
    const auto &zf = frame.z().at<DT>();
    Vec<DT> qd = lift<DT>(q);
    std::vector<Mat<double>> dW(n);
    for (std::size_t t = 0; t < n; ++t) {
        qd[t].eps = T(1.0);
        Mat<DT> Wd = LU<DT>(zf(qd)).inverse();
        dW[t] = Mat<double>(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) dW[t](i, j) = value_of(Wd(i, j).eps);
        qd[t].eps = T(0.0);
    }
    Mat<double> Z = values(frame.z().at<T>()(q));
    Tensor3<double> R(n, n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c) {
                double s = 0.0;
                for (std::size_t t = 0; t < n; ++t)
                    for (std::size_t d = 0; d < n; ++d)
                        s += Z(t, b) * dW[t](a, d) * Z(d, c) - Z(t, c) * dW[t](a, d) * Z(d, b);
                R(a, b, c) = -s;
            }
    return R;
}

/// Object of anholonomity R^a_bc with [Z_b, Z_c] = R^a_bc Z_a.
///
/// Primary route: R = Z^t_b W^a_d dZ^d_c/dq^t - (b <-> c). The validation
/// route differentiates W directly (LU at one dual depth higher) and uses
/// R = -(Z^t_b dW^a_d/dq^t Z^d_c - (b <-> c)).
template <class T>
Tensor3<T> anholonomity(const Frame &frame, const Vec<T> &q, const AnholonomityOptions &opt = {})
{
    const std::size_t n = q.size();
    FrameAt<T> fa = eval_frame(frame, q);
    std::vector<Mat<T>> dZ = frame_derivative(frame, q);

    Tensor3<T> R(n, n, n);
    // along[b](d, c) = Z^t_b dZ^d_c/dq^t, the derivative of Z_c along Z_b
    std::vector<Mat<T>> along(n, Mat<T>(n, n));
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t t = 0; t < n; ++t) {
            const T &zt = fa.Z(t, b);
            if (value_of(zt) == 0.0 && is_const(zt)) continue;
            for (std::size_t d = 0; d < n; ++d)
                for (std::size_t c = 0; c < n; ++c) along[b](d, c) += zt * dZ[t](d, c);
        }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c) {
                if (c == b) continue;
                T s(0.0);
                for (std::size_t d = 0; d < n; ++d) s += fa.W(a, d) * (along[b](d, c) - along[c](d, b));
                R(a, b, c) = s;
            }

    if (opt.validate) {
        if constexpr (std::is_same_v<T, double> || std::is_same_v<T, D1>) {
            Tensor3<double> R2 = anholonomity_dw(frame, q);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t c = 0; c < n; ++c)
                        if (std::abs(R2(a, b, c) - value_of(R(a, b, c))) > opt.tolerance)
                            throw Error(ErrorKind::DerivativeMismatch,
                                        "anholonomity: the dZ and dW formulas disagree at component (" +
                                            std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + ")");
        }
        if (frame.analytic_r()) {
            Tensor3<T> Ra = frame.analytic_r()->template at<T>()(q);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t c = 0; c < n; ++c)
                        if (std::abs(value_of(Ra(a, b, c)) - value_of(R(a, b, c))) > opt.tolerance)
                            throw Error(ErrorKind::DerivativeMismatch, "anholonomity: analytic R disagrees with computed R");
        }
    }
    return R;
}

struct PontryaginPoint {
    Vec<double> q, v, p;
};

struct QuasiPoint {
    Vec<double> q, vq, pq;
};

template <class T>
Vec<T> quasi_velocity(const FrameAt<T> &fa, const Vec<T> &v) { return fa.W * v; }

template <class T>
Vec<T> natural_velocity(const FrameAt<T> &fa, const Vec<T> &vq) { return fa.Z * vq; }

template <class T>
Vec<T> quasi_momentum(const FrameAt<T> &fa, const Vec<T> &p) { return fa.Z.transpose() * p; }

template <class T>
Vec<T> natural_momentum(const FrameAt<T> &fa, const Vec<T> &pq) { return fa.W.transpose() * pq; }

inline QuasiPoint to_quasi(const Frame &frame, const PontryaginPoint &pt)
{
    FrameAt<double> fa = eval_frame(frame, pt.q);
    return {pt.q, quasi_velocity(fa, pt.v), quasi_momentum(fa, pt.p)};
}

inline PontryaginPoint from_quasi(const Frame &frame, const QuasiPoint &qp)
{
    FrameAt<double> fa = eval_frame(frame, qp.q);
    return {qp.q, natural_velocity(fa, qp.vq), natural_momentum(fa, qp.pq)};
}

template <class T>
struct LiftDerivatives {
    Vec<T> complete;  // Z_a^C(F)
    Vec<T> vertical;  // Z_a^V(F)
};

/// Complete and vertical lifts of the frame applied to F(q, v):
///   Z_a^V F = Z^b_a dF/dv^b
///   Z_a^C F = Z^b_a dF/dq^b + dZ^b_a/dq^c v^c dF/dv^b
template <class T>
LiftDerivatives<T> lift_derivatives(const FrameAt<T> &fa, const std::vector<Mat<T>> &dZ, const LagrangianFn &F,
                                    const Vec<T> &q, const Vec<T> &v)
{
    const std::size_t n = q.size();
    auto [dq, dv] = lagrangian_partials<T>(F, q, v);
    LiftDerivatives<T> out{Vec<T>(n, T(0.0)), Vec<T>(n, T(0.0))};
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            out.vertical[a] += fa.Z(b, a) * dv[b];
            T zc = fa.Z(b, a) * dq[b];
            for (std::size_t c = 0; c < n; ++c) zc += dZ[c](b, a) * v[c] * dv[b];
            out.complete[a] += zc;
        }
    return out;
}

template <class T>
LiftDerivatives<T> lift_derivatives(const Frame &frame, const LagrangianFn &F, const Vec<T> &q, const Vec<T> &v)
{
    return lift_derivatives(eval_frame(frame, q), frame_derivative(frame, q), F, q, v);
}

}  // namespace routhsim
