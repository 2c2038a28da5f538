#include "routhsim/dirac.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace routhsim {

double generalized_energy(const LagrangianSystem &sys, const PontryaginPoint &pt)
{
    return dot(pt.p, pt.v) - sys.L.at<double>()(pt.q, pt.v);
}

Vec<double> dirac_residual_full(const LagrangianSystem &sys, const PontryaginPoint &pt, const Vec<double> &dq,
                                const Vec<double> &, const Vec<double> &dp)
{
    const std::size_t n = sys.dims.n;
    auto [Lq, Lv] = lagrangian_partials<double>(sys.L, pt.q, pt.v);
    Vec<double> r(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = -Lq[i] + dp[i];
        r[n + i] = pt.p[i] - Lv[i];
        r[2 * n + i] = pt.v[i] - dq[i];
    }
    return r;
}

namespace {

std::vector<std::string> mu_basis(const LagrangianSystem &sys)
{
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    std::vector<std::string> b;
    for (std::size_t i = 0; i < m; ++i) b.push_back("X_" + sys.coord_names[i]);
    for (std::size_t a = 0; a < k; ++a) b.push_back("E_" + sys.coord_names[m + a]);
    for (std::size_t i = 0; i < m; ++i) b.push_back("dv_" + sys.coord_names[i]);
    for (std::size_t a = 0; a < k; ++a) b.push_back("dvt_" + sys.coord_names[m + a]);
    for (std::size_t i = 0; i < m; ++i) b.push_back("dp_" + sys.coord_names[i]);
    return b;
}

void set_anti(Mat<double> &M, std::size_t i, std::size_t j, double v)
{
    M(i, j) = v;
    M(j, i) = -v;
}

}  // namespace

TwoFormAtPoint omega_mu(const LagrangianSystem &sys, const Vec<double> &mu, const Vec<double> &q)
{
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    const std::size_t oE = m, oP = 2 * m + 2 * k;
    Mat<double> M(3 * m + 2 * k, 3 * m + 2 * k);
    Curvature<double> cv = curvature(sys.sym, sys.moving, q);
    for (std::size_t i = 0; i < m; ++i) {
        set_anti(M, i, oP + i, 1.0);
        for (std::size_t j = i + 1; j < m; ++j) {
            double s = 0.0;
            for (std::size_t a = 0; a < k; ++a) s += mu[a] * cv.B(a, i, j);
            set_anti(M, i, j, s);
        }
    }
    for (std::size_t b = 0; b < k; ++b)
        for (std::size_t c = b + 1; c < k; ++c) {
            double s = 0.0;
            for (std::size_t a = 0; a < k; ++a) s += mu[a] * sys.sym.C(a, b, c);
            set_anti(M, oE + b, oE + c, -s);
        }
    return {std::move(M), "(X, E~, dv, dv~, dp)", mu_basis(sys)};
}

EnergyDifferentialAtPoint d_energy_mu(const LagrangianSystem &sys, const Vec<double> &mu, const FullQuasiState &s)
{
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    RouthContext ctx(sys, mu);
    Vec<double> vn = natural_from_moving(sys, s.q, s.v, s.vtilde);
    RouthDerivatives<double> rd = routhian_derivatives(ctx, s.q, vn);
    Curvature<double> cv = curvature(sys.sym, sys.moving, s.q, false);
    Vec<double> c;
    c.reserve(3 * m + 2 * k);
    for (std::size_t i = 0; i < m; ++i) {
        double t = rd.XC[i];
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t j = 0; j < m; ++j) t += rd.EV[a] * cv.B(a, i, j) * s.v[j];
        c.push_back(-t);
    }
    for (std::size_t b = 0; b < k; ++b) {
        double t = 0.0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t cc = 0; cc < k; ++cc) t += (mu[a] + rd.EV[a]) * sys.sym.C(a, b, cc) * s.vtilde[cc];
        c.push_back(t);
    }
    for (std::size_t i = 0; i < m; ++i) c.push_back(s.p[i] - rd.XV[i]);
    for (std::size_t a = 0; a < k; ++a) c.push_back(-rd.EV[a]);
    for (std::size_t i = 0; i < m; ++i) c.push_back(s.v[i]);
    return {std::move(c)};
}

Vec<double> membership_residual(const TwoFormAtPoint &omega, const Vec<double> &cdot, const EnergyDifferentialAtPoint &dE)
{
    const std::size_t d = omega.matrix.rows();
    Vec<double> r(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += cdot[i] * omega.matrix(i, j);
        r[j] = s - dE.components[j];
    }
    return r;
}

Vec<double> tangent_mu(const LagrangianSystem &sys, const FullQuasiState &s, const FullQuasiState &sdot)
{
    FrameAt<double> fa = eval_frame(sys.moving, s.q);
    Vec<double> c = fa.W * sdot.q;  // (xdot, u~)
    append(c, sdot.v);
    append(c, sdot.vtilde);
    append(c, sdot.p);
    return c;
}

Vec<double> restricted_dirac_residual(const RouthContext &ctx, const FullQuasiState &s, const FullQuasiState &sdot)
{
    const LagrangianSystem &sys = ctx.sys();
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    const Vec<double> &mu = ctx.mu();
    FrameAt<double> fa = eval_frame(sys.moving, s.q);
    std::vector<Mat<double>> dZ = frame_derivative(sys.moving, s.q);
    Vec<double> vn = natural_from_moving(sys, s.q, s.v, s.vtilde);
    LiftDerivatives<double> ld = lift_derivatives(fa, dZ, ctx.R(), s.q, vn);
    Vec<double> u = fa.W * sdot.q;
    Curvature<double> cv = curvature(sys.sym, sys.moving, s.q, false);
    Vec<double> gy = gyroscopic(cv.B, mu, s.v);
    Vec<double> r;
    r.reserve(2 * k + 3 * m);
    for (std::size_t b = 0; b < k; ++b) {
        double t = 0.0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t c = 0; c < k; ++c) t += mu[a] * sys.sym.C(a, b, c) * (s.vtilde[c] - u[m + c]);
        r.push_back(t);
    }
    for (std::size_t a = 0; a < k; ++a) r.push_back(ld.vertical[m + a]);
    for (std::size_t i = 0; i < m; ++i) r.push_back(s.v[i] - u[i]);
    for (std::size_t i = 0; i < m; ++i) r.push_back(ld.vertical[i] - s.p[i]);
    for (std::size_t i = 0; i < m; ++i) r.push_back(sdot.p[i] - ld.complete[i] + gy[i]);
    return r;
}

Vec<double> restricted_dirac_residual(const LagrangianSystem &sys, const Vec<double> &mu, const FullQuasiState &s,
                                      const FullQuasiState &sdot)
{
    return restricted_dirac_residual(RouthContext(sys, mu), s, sdot);
}

Vec<double> reduced_dirac_residual(const RouthContext &ctx, const ReducedState &r, const ReducedState &rdot)
{
    const LagrangianSystem &sys = ctx.sys();
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    const auto &I_idx = sys.sym.split.I;
    const Vec<double> &mu = ctx.mu();
    Vec<double> q = ctx.representative(r.x, r.thetaI);
    ReducedPartials<double> rp = reduced_partials(ctx, q, r.v, r.vhat);
    Vec<double> gy = gyroscopic(rp.B, mu, rdot.x);

    Vec<double> out;
    out.reserve(3 * m + I_idx.size() + k);
    for (std::size_t i = 0; i < m; ++i) out.push_back(rdot.p[i] - rp.dRdx_h[i] + gy[i]);
    if (!I_idx.empty()) {
        Vec<double> thdot = group_rate(rp, r.v, r.vhat);
        for (std::size_t j = 0; j < I_idx.size(); ++j) thdot[I_idx[j]] = rdot.thetaI[j];
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t i = 0; i < m; ++i) thdot[c] += rp.Lambda(c, i) * rdot.x[i];
        Mat<double> K = sys.sym.K.at<double>()(q);
        Vec<double> ut = LU<double>(K).solve(thdot);
        Vec<double> vt = rp.A * r.vhat;
        for (std::size_t KK : I_idx) {
            double t = 0.0;
            for (std::size_t a = 0; a < k; ++a) {
                if (mu[a] == 0.0) continue;
                for (std::size_t b = 0; b < k; ++b)
                    for (std::size_t c = 0; c < k; ++c) t += mu[a] * sys.sym.C(a, b, c) * rp.A(b, KK) * (vt[c] - ut[c]);
            }
            out.push_back(t);
        }
    }
    for (std::size_t i = 0; i < m; ++i) out.push_back(r.p[i] - rp.dRdv[i]);
    for (std::size_t a = 0; a < k; ++a) out.push_back(rp.dRdvhat[a]);
    for (std::size_t i = 0; i < m; ++i) out.push_back(rdot.x[i] - r.v[i]);
    return out;
}

Vec<double> reduced_dirac_residual(const LagrangianSystem &sys, const Vec<double> &mu, const ReducedState &r,
                                   const ReducedState &rdot)
{
    validate_splitting(sys.sym, mu);
    return reduced_dirac_residual(RouthContext(sys, mu), r, rdot);
}

TwoFormAtPoint omega_reduced(const RouthContext &ctx, const Vec<double> &x, const Vec<double> &thetaI)
{
    const LagrangianSystem &sys = ctx.sys();
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    const auto &I_idx = sys.sym.split.I;
    const std::size_t kI = I_idx.size();
    const std::size_t oE = m, oP = 2 * m + kI + k;
    const Vec<double> &mu = ctx.mu();
    Vec<double> q = ctx.representative(x, thetaI);
    Curvature<double> cv = curvature(sys.sym, sys.moving, q);
    Mat<double> A = sys.sym.Ad.at<double>()(group_coordinates(sys.dims, q));
    const std::size_t d = 3 * m + kI + k;
    Mat<double> M(d, d);
    for (std::size_t i = 0; i < m; ++i) {
        set_anti(M, i, oP + i, 1.0);
        for (std::size_t j = i + 1; j < m; ++j) {
            double s = 0.0;
            for (std::size_t a = 0; a < k; ++a) s += mu[a] * cv.B(a, i, j);
            set_anti(M, i, j, s);
        }
    }
    for (std::size_t K1 = 0; K1 < kI; ++K1)
        for (std::size_t K2 = K1 + 1; K2 < kI; ++K2) {
            double s = 0.0;
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t b = 0; b < k; ++b)
                    for (std::size_t c = 0; c < k; ++c) s += mu[a] * sys.sym.C(a, b, c) * A(b, I_idx[K1]) * A(c, I_idx[K2]);
            set_anti(M, oE + K1, oE + K2, -s);
        }
    std::vector<std::string> basis;
    for (std::size_t i = 0; i < m; ++i) basis.push_back("X_" + sys.coord_names[i]);
    for (std::size_t K1 : I_idx) basis.push_back("Ehat_" + sys.coord_names[m + K1]);
    for (std::size_t i = 0; i < m; ++i) basis.push_back("dv_" + sys.coord_names[i]);
    for (std::size_t a = 0; a < k; ++a) basis.push_back("dvhat_" + sys.coord_names[m + a]);
    for (std::size_t i = 0; i < m; ++i) basis.push_back("dp_" + sys.coord_names[i]);
    return {std::move(M), "(X, Ehat_I, dv, dvhat, dp)", std::move(basis)};
}

Mat<double> omega_quasi(const Frame &frame, const Vec<double> &q, const Vec<double> &P)
{
    const std::size_t n = q.size();
    FrameAt<double> fa = eval_frame(frame, q);
    Tensor3<double> R = anholonomity(frame, q);
    Mat<double> M(2 * n, 2 * n);
    for (std::size_t mu = 0; mu < n; ++mu)
        for (std::size_t nu = 0; nu < n; ++nu) {
            double s = 0.0;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t c = 0; c < n; ++c) s += R(a, b, c) * P[a] * fa.W(b, mu) * fa.W(c, nu);
            M(mu, nu) = s;
        }
    for (std::size_t mu = 0; mu < n; ++mu)
        for (std::size_t a = 0; a < n; ++a) set_anti(M, mu, n + a, fa.W(a, mu));
    return M;
}

std::vector<Vec<double>> kernel_basis(const Mat<double> &m, double rel_tol)
{
    std::vector<Vec<double>> out;
    const std::size_t cols = m.cols();
    if (cols == 0) return out;
    if (m.rows() == 0) {
        for (std::size_t j = 0; j < cols; ++j) {
            Vec<double> e(cols, 0.0);
            e[j] = 1.0;
            out.push_back(e);
        }
        return out;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m), Eigen::ComputeFullV);
    const auto &s = svd.singularValues();
    double smax = s.size() ? s(0) : 0.0;
    const Eigen::MatrixXd &V = svd.matrixV();
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(cols); ++j) {
        bool null = j >= s.size() || smax == 0.0 || s(j) <= rel_tol * smax;
        if (null) out.push_back(from_eigen(Eigen::VectorXd(V.col(j))));
    }
    return out;
}

std::vector<Vec<double>> kernel_basis(const TwoFormAtPoint &form, double rel_tol)
{
    return kernel_basis(form.matrix, rel_tol);
}

std::vector<Vec<double>> restricted_kernel(const TwoFormAtPoint &form, const std::vector<std::size_t> &slots,
                                           double rel_tol)
{
    const std::size_t d = form.matrix.rows();
    Mat<double> sub(d, slots.size());
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < slots.size(); ++j) sub(i, j) = form.matrix(i, slots[j]);
    std::vector<Vec<double>> out;
    for (const auto &w : kernel_basis(sub, rel_tol)) {
        Vec<double> e(d, 0.0);
        for (std::size_t j = 0; j < slots.size(); ++j) e[slots[j]] = w[j];
        out.push_back(std::move(e));
    }
    return out;
}

namespace {

Eigen::MatrixXd orthonormal(const std::vector<Vec<double>> &U)
{
    const Eigen::Index d = static_cast<Eigen::Index>(U[0].size());
    Eigen::MatrixXd M(d, static_cast<Eigen::Index>(U.size()));
    for (std::size_t j = 0; j < U.size(); ++j) M.col(static_cast<Eigen::Index>(j)) = to_eigen(U[j]);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    return qr.householderQ() * Eigen::MatrixXd::Identity(d, M.cols());
}

}  // namespace

double max_principal_angle(const std::vector<Vec<double>> &U, const std::vector<Vec<double>> &V)
{
    if (U.size() != V.size()) return std::numbers::pi / 2;
    if (U.empty()) return 0.0;
    Eigen::MatrixXd Qu = orthonormal(U), Qv = orthonormal(V);
    // sine of the largest angle is the spectral norm of (I - Qv Qv^T) Qu
    Eigen::MatrixXd E = Qu - Qv * (Qv.transpose() * Qu);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(E);
    double s = svd.singularValues()(0);
    return std::asin(std::min(1.0, s));
}

}  // namespace routhsim
