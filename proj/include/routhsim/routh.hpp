#pragma once

// Generalized Routhian R^mu = L - mu_a v~^a and the residual forms of the
// implicit Euler-Lagrange, implicit Lagrange-Routh, reduced and classical
// Routh equations.

#include <memory>
#include <utility>

#include "routhsim/system.hpp"

namespace routhsim {

struct FullQuasiState {
    Vec<double> q, v, vtilde, p, ptilde;
};

struct ReducedState {
    Vec<double> x, thetaI, v, vhat, p;
};

template <class T>
struct RouthDerivatives {
    Vec<T> XC, XV;  // X_i^C(R), X_i^V(R), length m
    Vec<T> EC, EV;  // E~_a^C(R), E~_a^V(R), length k
};

/// System plus a momentum level, with the Routhian built once.
class RouthContext {
public:
    RouthContext(const LagrangianSystem &sys, Vec<double> mu);

    const LagrangianSystem &sys() const { return *sys_; }
    const Dims &dims() const { return sys_->dims; }
    const Vec<double> &mu() const { return mu_; }
    const LagrangianFn &R() const { return R_; }

    /// q = (x, theta) with theta^I given and theta^A = 0.
    template <class T>
    Vec<T> representative(const Vec<T> &x, const Vec<T> &thetaI) const
    {
        const Dims &d = dims();
        Vec<T> q(d.n, T(0.0));
        for (std::size_t i = 0; i < d.m; ++i) q[i] = x[i];
        const auto &I = sys_->sym.split.I;
        for (std::size_t j = 0; j < I.size(); ++j) q[d.m + I[j]] = thetaI[j];
        return q;
    }

private:
    std::shared_ptr<const LagrangianSystem> sys_;
    Vec<double> mu_;
    LagrangianFn R_;
};

/// Group block of W(q) v.
template <class T>
Vec<T> group_quasi_velocity(const LagrangianSystem &sys, const Vec<T> &q, const Vec<T> &v)
{
    Mat<T> Z = sys.moving.z().at<T>()(q);
    LU<T> lu(Z);
    if (lu.singular()) throw Error(ErrorKind::SingularFrame, "moving frame singular");
    return slice(lu.solve(v), sys.dims.m, sys.dims.k);
}

template <class T>
T routhian(const LagrangianSystem &sys, const Vec<double> &mu, const Vec<T> &q, const Vec<T> &v)
{
    T r = sys.L.at<T>()(q, v);
    if (sys.dims.k == 0) return r;
    Vec<T> vt = group_quasi_velocity(sys, q, v);
    for (std::size_t a = 0; a < vt.size(); ++a) r -= mu[a] * vt[a];
    return r;
}

/// p~_a = K^b_a dL/dv^{theta^b}.
template <class T>
Vec<T> momentum_map(const LagrangianSystem &sys, const Vec<T> &q, const Vec<T> &v)
{
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    Vec<T> dv = lagrangian_partials<T>(sys.L, q, v).second;
    Mat<T> K = sys.sym.K.at<T>()(q);
    Vec<T> out(k, T(0.0));
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) out[a] += K(b, a) * dv[m + b];
    return out;
}

/// Lifts of R^mu along the moving frame at natural (q, v).
template <class T>
RouthDerivatives<T> routhian_derivatives(const RouthContext &ctx, const Vec<T> &q, const Vec<T> &v)
{
    const std::size_t m = ctx.dims().m, k = ctx.dims().k;
    LiftDerivatives<T> ld = lift_derivatives(ctx.sys().moving, ctx.R(), q, v);
    return {slice(ld.complete, 0, m), slice(ld.vertical, 0, m), slice(ld.complete, m, k), slice(ld.vertical, m, k)};
}

RouthDerivatives<double> routhian_derivatives(const LagrangianSystem &sys, const Vec<double> &mu, const Vec<double> &q,
                                              const Vec<double> &v);

/// Natural velocity Z(q) (v, vtilde).
template <class T>
Vec<T> natural_from_moving(const LagrangianSystem &sys, const Vec<T> &q, const Vec<T> &v, const Vec<T> &vt)
{
    Vec<T> vq = v;
    append(vq, vt);
    return sys.moving.z().at<T>()(q) * vq;
}

/// mu_a B^a_ij u^j.
template <class T>
Vec<T> gyroscopic(const Tensor3<T> &B, const Vec<double> &mu, const Vec<T> &u)
{
    const std::size_t k = B.dim0(), m = B.dim1();
    Vec<T> out(m, T(0.0));
    for (std::size_t a = 0; a < k; ++a) {
        if (mu[a] == 0.0) continue;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) out[i] += mu[a] * B(a, i, j) * u[j];
    }
    return out;
}

/// (dq - v, p - dL/dv, dp - dL/dq).
template <class T>
Vec<T> implicit_el_residual(const LagrangianSystem &sys, const Vec<T> &q, const Vec<T> &v, const Vec<T> &p,
                            const Vec<T> &dq, const Vec<T> &dp)
{
    const std::size_t n = sys.dims.n;
    auto [Lq, Lv] = lagrangian_partials<T>(sys.L, q, v);
    Vec<T> r(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = dq[i] - v[i];
        r[n + i] = p[i] - Lv[i];
        r[2 * n + i] = dp[i] - Lq[i];
    }
    return r;
}

Vec<double> implicit_el_residual(const LagrangianSystem &sys, const PontryaginPoint &pt, const Vec<double> &dq,
                                 const Vec<double> &dp);

/// Blocks (v~ - u~ [k], E~^V(R) [k], p~ - mu [k], v - xdot [m], X^V(R) - p [m],
/// pdot - X^C(R) + mu B v [m]).
template <class T>
Vec<T> implicit_lr_residual(const RouthContext &ctx, const Vec<T> &q, const Vec<T> &v, const Vec<T> &vt,
                            const Vec<T> &p, const Vec<T> &pt, const Vec<T> &qdot, const Vec<T> &pdot)
{
    const LagrangianSystem &sys = ctx.sys();
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    FrameAt<T> fa = eval_frame(sys.moving, q);
    std::vector<Mat<T>> dZ = frame_derivative(sys.moving, q);
    Vec<T> vn = natural_from_moving(sys, q, v, vt);
    LiftDerivatives<T> ld = lift_derivatives(fa, dZ, ctx.R(), q, vn);
    Vec<T> u = fa.W * qdot;
    Curvature<T> cv = curvature(sys.sym, sys.moving, q, false);
    Vec<T> gy = gyroscopic(cv.B, ctx.mu(), v);
    Vec<T> r;
    r.reserve(3 * k + 3 * m);
    for (std::size_t a = 0; a < k; ++a) r.push_back(vt[a] - u[m + a]);
    for (std::size_t a = 0; a < k; ++a) r.push_back(ld.vertical[m + a]);
    for (std::size_t a = 0; a < k; ++a) r.push_back(pt[a] - ctx.mu()[a]);
    for (std::size_t i = 0; i < m; ++i) r.push_back(v[i] - u[i]);
    for (std::size_t i = 0; i < m; ++i) r.push_back(ld.vertical[i] - p[i]);
    for (std::size_t i = 0; i < m; ++i) r.push_back(pdot[i] - ld.complete[i] + gy[i]);
    return r;
}

Vec<double> implicit_lr_residual(const LagrangianSystem &sys, const Vec<double> &mu, const FullQuasiState &s,
                                 const FullQuasiState &sdot);

/// Partials of R^mu in the reduced coordinates (x, theta^I, v, vhat), through
/// the body frame:
///   dRdx_h = dR/dx - Lambda^I dR/dtheta^I = X^C(R) + Bhat v hat E^V(R)
///   dRdv = X^V(R), dRdvhat = A^T E~^V(R).
template <class T>
struct ReducedPartials {
    Vec<T> dRdx_h, dRdv, dRdvhat;
    Mat<T> Lmat, Lambda, A;
    Tensor3<T> B;
};

template <class T>
ReducedPartials<T> reduced_partials(const RouthContext &ctx, const Vec<T> &q, const Vec<T> &v, const Vec<T> &vh)
{
    const LagrangianSystem &sys = ctx.sys();
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    BodyFrame<T> bf = body_frame(sys.sym, q);
    Mat<T> Lam = m > 0 && k > 0 ? sys.sym.Lambda.at<T>()(q) : Mat<T>(k, m);
    Vec<T> vt = bf.A * vh;
    Vec<T> vn = natural_from_moving(sys, q, v, vt);
    FrameAt<T> fa = eval_frame(sys.moving, q);
    std::vector<Mat<T>> dZ = frame_derivative(sys.moving, q);
    LiftDerivatives<T> ld = lift_derivatives(fa, dZ, ctx.R(), q, vn);
    Curvature<T> cv = curvature(sys.sym, sys.moving, q, false);

    ReducedPartials<T> out;
    out.dRdv = slice(ld.vertical, 0, m);
    Vec<T> EV = slice(ld.vertical, m, k);
    out.dRdvhat = bf.A.transpose() * EV;
    out.dRdx_h = slice(ld.complete, 0, m);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t kk = 0; kk < m; ++kk) out.dRdx_h[j] += cv.Bhat(a, j, kk) * v[kk] * out.dRdvhat[a];
    out.Lmat = std::move(bf.Lmat);
    out.A = std::move(bf.A);
    out.Lambda = std::move(Lam);
    out.B = std::move(cv.B);
    return out;
}

/// theta-rate v^hat^b L^c_b - v^i Lambda^c_i for every group coordinate c.
template <class T>
Vec<T> group_rate(const ReducedPartials<T> &rp, const Vec<T> &v, const Vec<T> &vh)
{
    const std::size_t k = rp.Lmat.rows(), m = v.size();
    Vec<T> out = rp.Lmat * vh;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t i = 0; i < m; ++i) out[c] -= v[i] * rp.Lambda(c, i);
    return out;
}

/// Blocks (xdot - v [m], thetaI-dot - vhat L^I + xdot Lambda^I [kI],
/// pdot - dRdx_h + mu B xdot [m], p - dR/dv [m], dR/dvhat [k]).
template <class T>
Vec<T> reduced_lr_residual(const RouthContext &ctx, const Vec<T> &x, const Vec<T> &thI, const Vec<T> &v,
                           const Vec<T> &vh, const Vec<T> &p, const Vec<T> &xdot, const Vec<T> &thIdot,
                           const Vec<T> &pdot)
{
    const Dims &d = ctx.dims();
    const auto &I = ctx.sys().sym.split.I;
    Vec<T> q = ctx.representative(x, thI);
    ReducedPartials<T> rp = reduced_partials(ctx, q, v, vh);
    Vec<T> gy = gyroscopic(rp.B, ctx.mu(), xdot);
    Vec<T> r;
    r.reserve(3 * d.m + I.size() + d.k);
    for (std::size_t i = 0; i < d.m; ++i) r.push_back(xdot[i] - v[i]);
    for (std::size_t j = 0; j < I.size(); ++j) {
        T s = thIdot[j];
        for (std::size_t b = 0; b < d.k; ++b) s -= vh[b] * rp.Lmat(I[j], b);
        for (std::size_t i = 0; i < d.m; ++i) s += xdot[i] * rp.Lambda(I[j], i);
        r.push_back(s);
    }
    for (std::size_t i = 0; i < d.m; ++i) r.push_back(pdot[i] - rp.dRdx_h[i] + gy[i]);
    for (std::size_t i = 0; i < d.m; ++i) r.push_back(p[i] - rp.dRdv[i]);
    for (std::size_t a = 0; a < d.k; ++a) r.push_back(rp.dRdvhat[a]);
    return r;
}

Vec<double> reduced_lr_residual(const LagrangianSystem &sys, const Vec<double> &mu, const ReducedState &r,
                                const ReducedState &rdot);

/// Natural Pontryagin point of a reduced state once theta^A is known.
PontryaginPoint reduced_to_natural(const RouthContext &ctx, const ReducedState &r, const Vec<double> &thetaA);

struct GRegularity {
    std::size_t rank = 0;
    Mat<double> hessian;  // E~^V_a E~^V_b (L)
};

inline constexpr double kRankRelTol = 1e-10;

GRegularity check_g_regular(const LagrangianSystem &sys, const Vec<double> &q, const Vec<double> &v);

/// Numerical rank with singular values below rel_tol * max treated as zero.
std::size_t numerical_rank(const Mat<double> &a, double rel_tol = kRankRelTol);

inline constexpr double kIotaTol = 1e-12;

/// Solves E~^V(L)(q, Z (v, v~)) = mu for v~ (the map iota_mu), from v~ = 0.
/// The Newton matrix is the value-level Hessian; dual parts converge with the
/// values.
template <class T>
Vec<T> solve_iota(const RouthContext &ctx, const Vec<T> &q, const Vec<T> &v)
{
    const LagrangianSystem &sys = ctx.sys();
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    Vec<T> vt(k, T(0.0));
    auto residual = [&](const Vec<T> &w) {
        Vec<T> vn = natural_from_moving(sys, q, v, w);
        LiftDerivatives<T> ld = lift_derivatives(sys.moving, sys.L, q, vn);
        Vec<T> r(k);
        for (std::size_t a = 0; a < k; ++a) r[a] = ld.vertical[m + a] - ctx.mu()[a];
        return r;
    };
    auto hessian = [&](const Vec<double> &w) {
        Vec<double> qd = values(q), vd = values(v);
        return jacobian<double>(
            [&](const Vec<D1> &wd) {
                Vec<D1> qq = lift<D1>(qd), vv = lift<D1>(vd);
                Vec<D1> vn = natural_from_moving(sys, qq, vv, wd);
                return slice(lift_derivatives(sys.moving, sys.L, qq, vn).vertical, m, k);
            },
            w);
    };
    Vec<T> r = residual(vt);
    double rn = max_abs(values(r));
    for (int it = 0; it < 60; ++it) {
        Mat<double> H = hessian(values(vt));
        if (numerical_rank(H) < k) throw Error(ErrorKind::NotGRegular, "group-velocity Hessian is rank deficient");
        LU<T> lu(lift<T>(H));
        if (rn < kIotaTol) {
            if constexpr (std::is_same_v<T, double>) {
                return vt;
            } else {
                // values converged; a few full steps settle the derivative parts
                for (int polish = 0; polish < 3; ++polish) {
                    Vec<T> step = lu.solve(r);
                    for (std::size_t a = 0; a < k; ++a) vt[a] -= step[a];
                    r = residual(vt);
                }
                return vt;
            }
        }
        Vec<T> step = lu.solve(r);
        double alpha = 1.0;
        while (true) {
            Vec<T> trial = vt;
            for (std::size_t a = 0; a < k; ++a) trial[a] -= alpha * step[a];
            Vec<T> rt = residual(trial);
            double tn = max_abs(values(rt));
            if (tn < rn || tn < kIotaTol) {
                vt = std::move(trial);
                r = std::move(rt);
                rn = tn;
                break;
            }
            alpha *= 0.5;
            if (alpha < 1.0 / 65536.0) {
                if (rn < kIotaTol) return vt;
                throw SolverError(ErrorKind::NewtonDiverged, "iota_mu Newton solve stalled", rn);
            }
        }
    }
    throw SolverError(ErrorKind::NewtonDiverged, "iota_mu Newton solve did not converge", rn);
}

/// Classical Routhian R-bar = R o iota_mu at (x, v), theta at the representative.
double classical_routhian(const RouthContext &ctx, const Vec<double> &x, const Vec<double> &v);

/// Partials of R-bar: dR-bar/dx and dR-bar/dv, using dR/dv~ = 0 on the image of iota.
template <class T>
std::pair<Vec<T>, Vec<T>> classical_partials(const RouthContext &ctx, const Vec<T> &x, const Vec<T> &v,
                                             Tensor3<T> *B = nullptr)
{
    const Dims &d = ctx.dims();
    Vec<T> q = ctx.representative(x, Vec<T>(ctx.sys().sym.split.I.size(), T(0.0)));
    Vec<T> vt = solve_iota(ctx, q, v);
    Mat<T> A = ctx.sys().sym.Ad.template at<T>()(group_coordinates(d, q));
    Vec<T> vh = LU<T>(A).solve(vt);
    ReducedPartials<T> rp = reduced_partials(ctx, q, v, vh);
    if (B) *B = rp.B;
    return {std::move(rp.dRdx_h), std::move(rp.dRdv)};
}

/// (xdot - v, p - dR-bar/dv, pdot - dR-bar/dx + mu B xdot). Requires k_mu = k.
template <class T>
Vec<T> classical_routh_residual(const RouthContext &ctx, const Vec<T> &x, const Vec<T> &v, const Vec<T> &p,
                                const Vec<T> &xdot, const Vec<T> &pdot)
{
    const std::size_t m = ctx.dims().m;
    Tensor3<T> B;
    auto [Rx, Rv] = classical_partials(ctx, x, v, &B);
    Vec<T> gy = gyroscopic(B, ctx.mu(), xdot);
    Vec<T> r;
    r.reserve(3 * m);
    for (std::size_t i = 0; i < m; ++i) r.push_back(xdot[i] - v[i]);
    for (std::size_t i = 0; i < m; ++i) r.push_back(p[i] - Rv[i]);
    for (std::size_t i = 0; i < m; ++i) r.push_back(pdot[i] - Rx[i] + gy[i]);
    return r;
}

}  // namespace routhsim
