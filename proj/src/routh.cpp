#include "routhsim/routh.hpp"

#include <Eigen/SVD>

namespace routhsim {

RouthContext::RouthContext(const LagrangianSystem &sys, Vec<double> mu)
    : sys_(std::make_shared<const LagrangianSystem>(sys)), mu_(std::move(mu))
{
    if (mu_.size() != sys.dims.k) throw Error(ErrorKind::InvalidArgument, "mu length must equal the group dimension");
    auto s = sys_;
    Vec<double> m = mu_;
    R_ = LagrangianFn([s, m](const auto &q, const auto &v) { return routhian(*s, m, q, v); });
}

RouthDerivatives<double> routhian_derivatives(const LagrangianSystem &sys, const Vec<double> &mu, const Vec<double> &q,
                                              const Vec<double> &v)
{
    return routhian_derivatives(RouthContext(sys, mu), q, v);
}

Vec<double> implicit_el_residual(const LagrangianSystem &sys, const PontryaginPoint &pt, const Vec<double> &dq,
                                 const Vec<double> &dp)
{
    return implicit_el_residual(sys, pt.q, pt.v, pt.p, dq, dp);
}

Vec<double> implicit_lr_residual(const LagrangianSystem &sys, const Vec<double> &mu, const FullQuasiState &s,
                                 const FullQuasiState &sdot)
{
    return implicit_lr_residual(RouthContext(sys, mu), s.q, s.v, s.vtilde, s.p, s.ptilde, sdot.q, sdot.p);
}

Vec<double> reduced_lr_residual(const LagrangianSystem &sys, const Vec<double> &mu, const ReducedState &r,
                                const ReducedState &rdot)
{
    RouthContext ctx(sys, mu);
    validate_splitting(sys.sym, mu);
    return reduced_lr_residual(ctx, r.x, r.thetaI, r.v, r.vhat, r.p, rdot.x, rdot.thetaI, rdot.p);
}

PontryaginPoint reduced_to_natural(const RouthContext &ctx, const ReducedState &r, const Vec<double> &thetaA)
{
    const LagrangianSystem &sys = ctx.sys();
    const Dims &d = sys.dims;
    Vec<double> q = ctx.representative(r.x, r.thetaI);
    for (std::size_t j = 0; j < sys.sym.split.A.size(); ++j) q[d.m + sys.sym.split.A[j]] = thetaA[j];
    Mat<double> A = sys.sym.Ad.at<double>()(group_coordinates(d, q));
    Vec<double> vt = A * r.vhat;
    FrameAt<double> fa = eval_frame(sys.moving, q);
    Vec<double> vq = r.v;
    append(vq, vt);
    Vec<double> pq = r.p;
    append(pq, ctx.mu());
    return {q, natural_velocity(fa, vq), natural_momentum(fa, pq)};
}

std::size_t numerical_rank(const Mat<double> &a, double rel_tol)
{
    if (a.rows() == 0 || a.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(a));
    const auto &s = svd.singularValues();
    double smax = s.size() ? s(0) : 0.0;
    if (smax == 0.0) return 0;
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * smax) ++r;
    return r;
}

GRegularity check_g_regular(const LagrangianSystem &sys, const Vec<double> &q, const Vec<double> &v)
{
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    Mat<double> K = sys.sym.K.at<double>()(q);
    Vec<D1> qd = lift<D1>(q);
    Mat<double> Hv = jacobian<double>([&](const Vec<D1> &vd) { return lagrangian_partials<D1>(sys.L, qd, vd).second; }, v);
    GRegularity out;
    out.hessian = Mat<double>(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            double s = 0.0;
            for (std::size_t c = 0; c < k; ++c)
                for (std::size_t e = 0; e < k; ++e) s += K(c, a) * K(e, b) * Hv(m + c, m + e);
            out.hessian(a, b) = s;
        }
    out.rank = numerical_rank(out.hessian);
    return out;
}

double classical_routhian(const RouthContext &ctx, const Vec<double> &x, const Vec<double> &v)
{
    const LagrangianSystem &sys = ctx.sys();
    Vec<double> q = ctx.representative(x, Vec<double>(sys.sym.split.I.size(), 0.0));
    Vec<double> vt = solve_iota(ctx, q, v);
    return routhian(sys, ctx.mu(), q, natural_from_moving(sys, q, v, vt));
}

}  // namespace routhsim
