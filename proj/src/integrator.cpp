#include "routhsim/integrator.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace routhsim {

std::string to_string(Mode m)
{
    switch (m) {
    case Mode::full: return "full";
    case Mode::m_mu: return "m_mu";
    case Mode::reduced: return "reduced";
    case Mode::classical: return "classical";
    }
    return "?";
}

Mode parse_mode(const std::string &s)
{
    if (s == "full") return Mode::full;
    if (s == "m_mu") return Mode::m_mu;
    if (s == "reduced") return Mode::reduced;
    if (s == "classical") return Mode::classical;
    throw Error(ErrorKind::InvalidArgument, "unknown mode '" + s + "'");
}

std::vector<std::size_t> Formulation::algebraic_variables() const
{
    std::vector<bool> is_diff(size(), false);
    for (std::size_t i : diff_) is_diff[i] = true;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i)
        if (!is_diff[i]) out.push_back(i);
    return out;
}

double Formulation::momentum_drift(const Vec<double> &s) const
{
    if (sys().dims.k == 0) return 0.0;
    PontryaginPoint pt = natural(s);
    Vec<double> J = momentum_map(sys(), pt.q, pt.v);
    double d = 0.0;
    for (std::size_t a = 0; a < J.size(); ++a) d = std::max(d, std::abs(J[a] - ctx_.mu()[a]));
    return d;
}

double Formulation::energy(const Vec<double> &s) const { return generalized_energy(sys(), natural(s)); }

namespace {

template <class D>
class FormT : public Formulation {
public:
    Vec<double> rates(const Vec<double> &s) const override { return self().template rates_t<double>(s); }
    Vec<D1> rates(const Vec<D1> &s) const override { return self().template rates_t<D1>(s); }
    Vec<double> algebraic(const Vec<double> &s) const override { return self().template alg_t<double>(s); }
    Vec<D1> algebraic(const Vec<D1> &s) const override { return self().template alg_t<D1>(s); }
    Vec<double> init_rows(const Vec<double> &s) const override { return self().template init_t<double>(s); }
    Vec<D1> init_rows(const Vec<D1> &s) const override { return self().template init_t<D1>(s); }

protected:
    using Formulation::Formulation;

    template <class T>
    Vec<T> init_t(const Vec<T> &) const
    {
        return {};
    }

    const D &self() const { return static_cast<const D &>(*this); }

    template <class T>
    void push_constraints(Vec<T> &r, const Vec<T> &q, const Vec<T> &v, const Vec<T> &p) const
    {
        for (const auto &c : sys().extra_constraints) r.push_back(c.g.template at<T>()(q, v, p));
    }

    void add_constraint_labels()
    {
        for (const auto &c : sys().extra_constraints) alg_labels_.push_back(c.label);
    }

    void range(std::vector<std::size_t> &dst, std::size_t from, std::size_t len)
    {
        for (std::size_t i = 0; i < len; ++i) dst.push_back(from + i);
    }

    std::string pair_label(std::size_t i) const
    {
        const std::string &c = sys().coord_names[i];
        return "(" + c + ",p_" + c + ")";
    }
};

Vec<double> theta_or_zero(const Vec<double> &thetaA, std::size_t kA)
{
    return thetaA.empty() ? Vec<double>(kA, 0.0) : thetaA;
}

// (q, v, p)
class FullForm : public FormT<FullForm> {
public:
    explicit FullForm(RouthContext c) : FormT(std::move(c))
    {
        const std::size_t n = sys().dims.n;
        for (const auto &s : sys().coord_names) names_.push_back(s);
        for (const auto &s : sys().coord_names) names_.push_back("v_" + s);
        for (const auto &s : sys().coord_names) names_.push_back("p_" + s);
        range(diff_, 0, n);
        range(diff_, 2 * n, n);
        range(frozen_, 0, n);
        for (std::size_t i = 0; i < n; ++i) alg_labels_.push_back(pair_label(i));
        add_constraint_labels();
    }

    Mode mode() const override { return Mode::full; }

    template <class T>
    Vec<T> rates_t(const Vec<T> &s) const
    {
        const std::size_t n = sys().dims.n;
        Vec<T> q = slice(s, 0, n), v = slice(s, n, n);
        auto [Lq, Lv] = lagrangian_partials<T>(sys().L, q, v);
        append(v, Lq);
        return v;
    }

    template <class T>
    Vec<T> alg_t(const Vec<T> &s) const
    {
        const std::size_t n = sys().dims.n;
        Vec<T> q = slice(s, 0, n), v = slice(s, n, n), p = slice(s, 2 * n, n);
        Vec<T> Lv = lagrangian_partials<T>(sys().L, q, v).second;
        Vec<T> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = p[i] - Lv[i];
        push_constraints(r, q, v, p);
        return r;
    }

    template <class T>
    Vec<T> init_t(const Vec<T> &s) const
    {
        const Dims &d = sys().dims;
        if (d.k == 0) return {};
        Vec<T> q = slice(s, 0, d.n);
        Mat<T> K = sys().sym.K.at<T>()(q);
        Vec<T> r(d.k, T(0.0));
        for (std::size_t a = 0; a < d.k; ++a) {
            for (std::size_t b = 0; b < d.k; ++b) r[a] += K(b, a) * s[2 * d.n + d.m + b];
            r[a] -= ctx_.mu()[a];
        }
        return r;
    }

    PontryaginPoint natural(const Vec<double> &s, const Vec<double> &) const override
    {
        const std::size_t n = sys().dims.n;
        return {slice(s, 0, n), slice(s, n, n), slice(s, 2 * n, n)};
    }

    Vec<double> pack(const PontryaginPoint &pt) const override
    {
        Vec<double> s = pt.q;
        append(s, pt.v);
        append(s, pt.p);
        return s;
    }

    Vec<double> dirac_residual(const Vec<double> &s0, const Vec<double> &s1, double h) const override
    {
        const std::size_t n = sys().dims.n;
        Vec<double> mid(s0.size()), rate(s0.size());
        for (std::size_t i = 0; i < s0.size(); ++i) {
            mid[i] = 0.5 * (s0[i] + s1[i]);
            rate[i] = (s1[i] - s0[i]) / h;
        }
        Vec<double> r = dirac_residual_full(sys(), natural(mid, {}), slice(rate, 0, n), slice(rate, n, n),
                                            slice(rate, 2 * n, n));
        Vec<double> a = alg_t<double>(s1);
        for (std::size_t i = 0; i < n; ++i) r[n + i] = a[i];
        return r;
    }
};

// (q [n], v [m], v~ [k], p [m])
class MmuForm : public FormT<MmuForm> {
public:
    explicit MmuForm(RouthContext c) : FormT(std::move(c))
    {
        const Dims &d = sys().dims;
        const auto &cn = sys().coord_names;
        for (const auto &s : cn) names_.push_back(s);
        for (std::size_t i = 0; i < d.m; ++i) names_.push_back("v_" + cn[i]);
        for (std::size_t a = 0; a < d.k; ++a) names_.push_back("vt_" + cn[d.m + a]);
        for (std::size_t i = 0; i < d.m; ++i) names_.push_back("p_" + cn[i]);
        range(diff_, 0, d.n);
        range(diff_, d.n + d.m + d.k, d.m);
        range(frozen_, 0, d.n);
        for (std::size_t a = 0; a < d.k; ++a) alg_labels_.push_back("vt_" + cn[d.m + a]);
        for (std::size_t i = 0; i < d.m; ++i) alg_labels_.push_back(pair_label(i));
        add_constraint_labels();
    }

    Mode mode() const override { return Mode::m_mu; }

    template <class T>
    struct Parts {
        Vec<T> q, v, vt, p, vn;
        FrameAt<T> fa;
        LiftDerivatives<T> ld;
    };

    template <class T>
    Parts<T> parts(const Vec<T> &s) const
    {
        const Dims &d = sys().dims;
        Parts<T> P;
        P.q = slice(s, 0, d.n);
        P.v = slice(s, d.n, d.m);
        P.vt = slice(s, d.n + d.m, d.k);
        P.p = slice(s, d.n + d.m + d.k, d.m);
        P.fa = eval_frame(sys().moving, P.q);
        Vec<T> vq = P.v;
        append(vq, P.vt);
        P.vn = P.fa.Z * vq;
        P.ld = lift_derivatives(P.fa, frame_derivative(sys().moving, P.q), ctx_.R(), P.q, P.vn);
        return P;
    }

    template <class T>
    Vec<T> rates_t(const Vec<T> &s) const
    {
        const Dims &d = sys().dims;
        Parts<T> P = parts(s);
        Vec<T> r = P.vn;
        Vec<T> gy(d.m, T(0.0));
        if (d.k > 0 && d.m > 0) gy = gyroscopic(curvature(sys().sym, sys().moving, P.q, false).B, ctx_.mu(), P.v);
        for (std::size_t i = 0; i < d.m; ++i) r.push_back(P.ld.complete[i] - gy[i]);
        return r;
    }

    template <class T>
    Vec<T> alg_t(const Vec<T> &s) const
    {
        const Dims &d = sys().dims;
        Parts<T> P = parts(s);
        Vec<T> r;
        for (std::size_t a = 0; a < d.k; ++a) r.push_back(P.ld.vertical[d.m + a]);
        for (std::size_t i = 0; i < d.m; ++i) r.push_back(P.ld.vertical[i] - P.p[i]);
        if (!sys().extra_constraints.empty()) {
            Vec<T> pq = P.p;
            append(pq, lift<T>(ctx_.mu()));
            push_constraints(r, P.q, P.vn, P.fa.W.transpose() * pq);
        }
        return r;
    }

    PontryaginPoint natural(const Vec<double> &s, const Vec<double> &) const override
    {
        const Dims &d = sys().dims;
        Parts<double> P = parts(s);
        Vec<double> pq = P.p;
        append(pq, ctx_.mu());
        (void)d;
        return {P.q, P.vn, P.fa.W.transpose() * pq};
    }

    Vec<double> pack(const PontryaginPoint &pt) const override
    {
        const Dims &d = sys().dims;
        FrameAt<double> fa = eval_frame(sys().moving, pt.q);
        Vec<double> s = pt.q;
        append(s, fa.W * pt.v);
        append(s, slice(fa.Z.transpose() * pt.p, 0, d.m));
        return s;
    }

    FullQuasiState quasi(const Vec<double> &s) const
    {
        const Dims &d = sys().dims;
        return {slice(s, 0, d.n), slice(s, d.n, d.m), slice(s, d.n + d.m, d.k), slice(s, d.n + d.m + d.k, d.m),
                ctx_.mu()};
    }

    Vec<double> dirac_residual(const Vec<double> &s0, const Vec<double> &s1, double h) const override
    {
        const Dims &d = sys().dims;
        Vec<double> mid(s0.size()), rate(s0.size());
        for (std::size_t i = 0; i < s0.size(); ++i) {
            mid[i] = 0.5 * (s0[i] + s1[i]);
            rate[i] = (s1[i] - s0[i]) / h;
        }
        FullQuasiState sdot = quasi(rate);
        Vec<double> rm = restricted_dirac_residual(ctx_, quasi(mid), sdot);
        Vec<double> r1 = restricted_dirac_residual(ctx_, quasi(s1), sdot);
        for (std::size_t i = d.k; i < 2 * d.k; ++i) rm[i] = r1[i];
        for (std::size_t i = 2 * d.k + d.m; i < 2 * d.k + 2 * d.m; ++i) rm[i] = r1[i];
        return rm;
    }
};

// (x [m], thetaI [kI], v [m], vhat [k], p [m])
class ReducedForm : public FormT<ReducedForm> {
public:
    explicit ReducedForm(RouthContext c) : FormT(std::move(c))
    {
        validate_splitting(sys().sym, ctx_.mu());
        const Dims &d = sys().dims;
        const auto &cn = sys().coord_names;
        const auto &I = sys().sym.split.I;
        kI_ = I.size();
        for (std::size_t i = 0; i < d.m; ++i) names_.push_back(cn[i]);
        for (std::size_t j : I) names_.push_back(cn[d.m + j]);
        for (std::size_t i = 0; i < d.m; ++i) names_.push_back("v_" + cn[i]);
        for (std::size_t a = 0; a < d.k; ++a) names_.push_back("vhat_" + cn[d.m + a]);
        for (std::size_t i = 0; i < d.m; ++i) names_.push_back("p_" + cn[i]);
        range(diff_, 0, d.m + kI_);
        range(diff_, 2 * d.m + kI_ + d.k, d.m);
        range(frozen_, 0, d.m + kI_);
        for (std::size_t i = 0; i < d.m; ++i) alg_labels_.push_back(pair_label(i));
        for (std::size_t a = 0; a < d.k; ++a) alg_labels_.push_back("vhat_" + cn[d.m + a]);
        add_constraint_labels();
    }

    Mode mode() const override { return Mode::reduced; }

    template <class T>
    void split(const Vec<T> &s, Vec<T> &x, Vec<T> &thI, Vec<T> &v, Vec<T> &vh, Vec<T> &p) const
    {
        const Dims &d = sys().dims;
        x = slice(s, 0, d.m);
        thI = slice(s, d.m, kI_);
        v = slice(s, d.m + kI_, d.m);
        vh = slice(s, 2 * d.m + kI_, d.k);
        p = slice(s, 2 * d.m + kI_ + d.k, d.m);
    }

    template <class T>
    Vec<T> rates_t(const Vec<T> &s) const
    {
        const Dims &d = sys().dims;
        Vec<T> x, thI, v, vh, p;
        split(s, x, thI, v, vh, p);
        ReducedPartials<T> rp = reduced_partials(ctx_, ctx_.representative(x, thI), v, vh);
        Vec<T> r = v;
        if (kI_ > 0) {
            Vec<T> gr = group_rate(rp, v, vh);
            for (std::size_t j : sys().sym.split.I) r.push_back(gr[j]);
        }
        Vec<T> gy = gyroscopic(rp.B, ctx_.mu(), v);
        for (std::size_t i = 0; i < d.m; ++i) r.push_back(rp.dRdx_h[i] - gy[i]);
        return r;
    }

    template <class T>
    Vec<T> alg_t(const Vec<T> &s) const
    {
        const Dims &d = sys().dims;
        Vec<T> x, thI, v, vh, p;
        split(s, x, thI, v, vh, p);
        Vec<T> q = ctx_.representative(x, thI);
        ReducedPartials<T> rp = reduced_partials(ctx_, q, v, vh);
        Vec<T> r;
        for (std::size_t i = 0; i < d.m; ++i) r.push_back(p[i] - rp.dRdv[i]);
        append(r, rp.dRdvhat);
        if (!sys().extra_constraints.empty()) {
            FrameAt<T> fa = eval_frame(sys().moving, q);
            Vec<T> vq = v;
            append(vq, rp.A * vh);
            Vec<T> pq = p;
            append(pq, lift<T>(ctx_.mu()));
            push_constraints(r, q, fa.Z * vq, fa.W.transpose() * pq);
        }
        return r;
    }

    ReducedState reduced(const Vec<double> &s) const
    {
        ReducedState r;
        split(s, r.x, r.thetaI, r.v, r.vhat, r.p);
        return r;
    }

    PontryaginPoint natural(const Vec<double> &s, const Vec<double> &thetaA) const override
    {
        return reduced_to_natural(ctx_, reduced(s), theta_or_zero(thetaA, sys().sym.split.A.size()));
    }

    Vec<double> pack(const PontryaginPoint &pt) const override
    {
        const Dims &d = sys().dims;
        FrameAt<double> fa = eval_frame(sys().moving, pt.q);
        Vec<double> vq = fa.W * pt.v;
        Mat<double> A = sys().sym.Ad.at<double>()(group_coordinates(d, pt.q));
        Vec<double> s = slice(pt.q, 0, d.m);
        for (std::size_t j : sys().sym.split.I) s.push_back(pt.q[d.m + j]);
        append(s, slice(vq, 0, d.m));
        append(s, LU<double>(A).solve(slice(vq, d.m, d.k)));
        append(s, slice(fa.Z.transpose() * pt.p, 0, d.m));
        return s;
    }

    Vec<double> dirac_residual(const Vec<double> &s0, const Vec<double> &s1, double h) const override
    {
        const Dims &d = sys().dims;
        Vec<double> mid(s0.size()), rate(s0.size());
        for (std::size_t i = 0; i < s0.size(); ++i) {
            mid[i] = 0.5 * (s0[i] + s1[i]);
            rate[i] = (s1[i] - s0[i]) / h;
        }
        ReducedState rdot = reduced(rate);
        Vec<double> rm = reduced_dirac_residual(ctx_, reduced(mid), rdot);
        Vec<double> r1 = reduced_dirac_residual(ctx_, reduced(s1), rdot);
        for (std::size_t i = d.m + kI_; i < 2 * d.m + kI_ + d.k; ++i) rm[i] = r1[i];
        return rm;
    }

    /// theta^A rate at the given reduced state and group coordinates.
    template <class T>
    Vec<T> theta_a_rate(const Vec<double> &s, const Vec<T> &thetaA) const
    {
        const Dims &d = sys().dims;
        Vec<double> x, thI, v, vh, p;
        split(s, x, thI, v, vh, p);
        Vec<T> q = ctx_.representative(lift<T>(x), lift<T>(thI));
        const auto &A = sys().sym.split.A;
        for (std::size_t j = 0; j < A.size(); ++j) q[d.m + A[j]] = thetaA[j];
        BodyFrame<T> bf = body_frame(sys().sym, q);
        Vec<T> rate = bf.Lmat * lift<T>(vh);
        if (d.m > 0) {
            Mat<T> Lam = sys().sym.Lambda.at<T>()(q);
            Vec<T> lv = Lam * lift<T>(v);
            for (std::size_t c = 0; c < d.k; ++c) rate[c] -= lv[c];
        }
        Vec<T> out;
        for (std::size_t j : A) out.push_back(rate[j]);
        return out;
    }

private:
    std::size_t kI_ = 0;
};

// (x [m], v [m], p [m]) with v~ eliminated through iota_mu
class ClassicalForm : public FormT<ClassicalForm> {
public:
    explicit ClassicalForm(RouthContext c) : FormT(std::move(c))
    {
        const Dims &d = sys().dims;
        if (d.k_mu != d.k)
            throw Error(ErrorKind::InvalidArgument, "classical mode needs the full group to fix mu (k_mu = k)");
        const auto &cn = sys().coord_names;
        for (std::size_t i = 0; i < d.m; ++i) names_.push_back(cn[i]);
        for (std::size_t i = 0; i < d.m; ++i) names_.push_back("v_" + cn[i]);
        for (std::size_t i = 0; i < d.m; ++i) names_.push_back("p_" + cn[i]);
        range(diff_, 0, d.m);
        range(diff_, 2 * d.m, d.m);
        range(frozen_, 0, d.m);
        for (std::size_t i = 0; i < d.m; ++i) alg_labels_.push_back(pair_label(i));
    }

    Mode mode() const override { return Mode::classical; }

    template <class T>
    Vec<T> rates_t(const Vec<T> &s) const
    {
        const std::size_t m = sys().dims.m;
        Vec<T> x = slice(s, 0, m), v = slice(s, m, m);
        Tensor3<T> B;
        auto [Rx, Rv] = classical_partials(ctx_, x, v, &B);
        Vec<T> gy = gyroscopic(B, ctx_.mu(), v);
        Vec<T> r = v;
        for (std::size_t i = 0; i < m; ++i) r.push_back(Rx[i] - gy[i]);
        return r;
    }

    template <class T>
    Vec<T> alg_t(const Vec<T> &s) const
    {
        const std::size_t m = sys().dims.m;
        Vec<T> x = slice(s, 0, m), v = slice(s, m, m), p = slice(s, 2 * m, m);
        Vec<T> Rv = classical_partials(ctx_, x, v).second;
        Vec<T> r(m);
        for (std::size_t i = 0; i < m; ++i) r[i] = p[i] - Rv[i];
        return r;
    }

    PontryaginPoint natural(const Vec<double> &s, const Vec<double> &thetaA) const override
    {
        const Dims &d = sys().dims;
        Vec<double> x = slice(s, 0, d.m), v = slice(s, d.m, d.m), p = slice(s, 2 * d.m, d.m);
        Vec<double> q = ctx_.representative(x, Vec<double>{});
        Vec<double> th = theta_or_zero(thetaA, d.k);
        for (std::size_t j = 0; j < d.k; ++j) q[d.m + sys().sym.split.A[j]] = th[j];
        Vec<double> vt = solve_iota(ctx_, q, v);
        FrameAt<double> fa = eval_frame(sys().moving, q);
        Vec<double> vq = v;
        append(vq, vt);
        append(p, ctx_.mu());
        return {q, fa.Z * vq, fa.W.transpose() * p};
    }

    Vec<double> pack(const PontryaginPoint &pt) const override
    {
        const Dims &d = sys().dims;
        FrameAt<double> fa = eval_frame(sys().moving, pt.q);
        Vec<double> s = slice(pt.q, 0, d.m);
        append(s, slice(fa.W * pt.v, 0, d.m));
        append(s, slice(fa.Z.transpose() * pt.p, 0, d.m));
        return s;
    }

    Vec<double> dirac_residual(const Vec<double> &s0, const Vec<double> &s1, double h) const override
    {
        const std::size_t m = sys().dims.m;
        Vec<double> mid(s0.size()), rate(s0.size());
        for (std::size_t i = 0; i < s0.size(); ++i) {
            mid[i] = 0.5 * (s0[i] + s1[i]);
            rate[i] = (s1[i] - s0[i]) / h;
        }
        Vec<double> rm = classical_routh_residual(ctx_, slice(mid, 0, m), slice(mid, m, m), slice(mid, 2 * m, m),
                                                  slice(rate, 0, m), slice(rate, 2 * m, m));
        Vec<double> a = alg_t<double>(s1);
        for (std::size_t i = 0; i < m; ++i) rm[m + i] = a[i];
        return rm;
    }
};

// Jacobian of F over the listed state indices, one dual sweep per column.
template <class F>
Mat<double> jacobian_over(F &&fn, const Vec<double> &s, const std::vector<std::size_t> &vars)
{
    Vec<D1> sd = lift<D1>(s);
    Mat<double> J;
    for (std::size_t j = 0; j < vars.size(); ++j) {
        sd[vars[j]].eps = 1.0;
        Vec<D1> r = fn(sd);
        sd[vars[j]].eps = 0.0;
        if (j == 0) J = Mat<double>(r.size(), vars.size());
        for (std::size_t i = 0; i < r.size(); ++i) J(i, j) = r[i].eps;
    }
    return J;
}

struct MinNorm {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    std::size_t cols = 0;

    explicit MinNorm(const Mat<double> &J) : cod(to_eigen(J)), cols(J.cols())
    {
        cod.setThreshold(kRankRelTol);
        cod.compute(to_eigen(J));
    }

    std::size_t defect() const { return cols - static_cast<std::size_t>(cod.rank()); }
    Vec<double> solve(const Vec<double> &r) const { return from_eigen(Eigen::VectorXd(cod.solve(to_eigen(r)))); }
};

std::vector<std::size_t> all_indices(std::size_t n)
{
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

template <class RowsD, class RowsD1>
bool gauss_newton(RowsD &&rows, RowsD1 &&rows1, Vec<double> &s, const std::vector<std::size_t> &vars, double tol,
                  double &res, int max_iters = 50)
{
    Vec<double> r = rows(s);
    res = max_abs(r);
    for (int it = 0; it < max_iters && res >= tol; ++it) {
        if (vars.empty()) return false;
        MinNorm mn(jacobian_over(rows1, s, vars));
        Vec<double> dx = mn.solve(r);
        bool accepted = false;
        for (double alpha = 1.0; alpha >= 1.0 / 65536.0; alpha *= 0.5) {
            Vec<double> trial = s;
            for (std::size_t j = 0; j < vars.size(); ++j) trial[vars[j]] -= alpha * dx[j];
            Vec<double> rt;
            try {
                rt = rows(trial);
            } catch (const Error &) {
                continue;
            }
            double tn = max_abs(rt);
            if (tn < res) {
                s = std::move(trial);
                r = std::move(rt);
                res = tn;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    return res < tol;
}

}  // namespace

std::unique_ptr<Formulation> make_formulation(const LagrangianSystem &sys, const Vec<double> &mu, Mode mode)
{
    if (mu.size() != sys.dims.k)
        throw Error(ErrorKind::InvalidArgument, "mu has " + std::to_string(mu.size()) + " components, system has k=" +
                                                    std::to_string(sys.dims.k));
    RouthContext ctx(sys, mu);
    switch (mode) {
    case Mode::full: return std::make_unique<FullForm>(std::move(ctx));
    case Mode::m_mu: return std::make_unique<MmuForm>(std::move(ctx));
    case Mode::reduced: return std::make_unique<ReducedForm>(std::move(ctx));
    case Mode::classical: return std::make_unique<ClassicalForm>(std::move(ctx));
    }
    throw Error(ErrorKind::InvalidArgument, "unknown mode");
}

StepResult step(const Formulation &f, const Vec<double> &s0, const StepConfig &cfg, const Vec<double> *prev)
{
    const std::size_t N = f.size();
    const double h = cfg.h;
    auto F = [&](const Vec<double> &s) { return step_residual<double>(f, s0, s, h); };
    auto F1 = [&](const Vec<D1> &s) { return step_residual<D1>(f, s0, s, h); };
    const std::vector<std::size_t> vars = all_indices(N);

    StepResult out;
    Vec<double> s = s0;
    if (prev)
        for (std::size_t i = 0; i < N; ++i) s[i] = 2.0 * s0[i] - (*prev)[i];
    Vec<double> r;
    try {
        r = F(s);
    } catch (const Error &) {
        s = s0;
        r = F(s);
    }
    double rn = max_abs(r);
    std::unique_ptr<MinNorm> mn;
    bool fresh = false;
    while (rn >= cfg.newton_tol) {
        if (out.newton_iters >= cfg.max_iters)
            throw SolverError(ErrorKind::NewtonDiverged, "Newton did not converge in " + std::to_string(cfg.max_iters) +
                                                             " iterations", rn);
        if (!mn) {
            mn = std::make_unique<MinNorm>(jacobian_over(F1, s, vars));
            out.rank_defect = mn->defect();
            fresh = true;
        }
        Vec<double> dx = mn->solve(r);
        bool accepted = false;
        std::optional<Error> last_error;
        for (double alpha = 1.0; alpha >= cfg.damping_min; alpha *= 0.5) {
            Vec<double> trial = s;
            for (std::size_t i = 0; i < N; ++i) trial[i] -= alpha * dx[i];
            Vec<double> rt;
            try {
                rt = F(trial);
            } catch (const Error &e) {
                last_error = e;
                continue;
            }
            double tn = max_abs(rt);
            if (tn < rn) {
                // slow contraction: refresh the chord Jacobian next time
                if (tn > 0.25 * rn) mn.reset();
                s = std::move(trial);
                r = std::move(rt);
                rn = tn;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!fresh) {
                mn.reset();
                continue;
            }
            if (last_error && (last_error->kind() == ErrorKind::CollisionSingularity ||
                               last_error->kind() == ErrorKind::DomainError))
                throw *last_error;
            if (out.rank_defect > 0)
                throw SolverError(ErrorKind::SingularJacobian,
                                  "Jacobian rank defect " + std::to_string(out.rank_defect) +
                                      " and no damped step reduces the residual",
                                  rn);
            throw SolverError(ErrorKind::NewtonDiverged, "line search failed at the damping floor", rn);
        }
        fresh = false;
        ++out.newton_iters;
    }
    if (!mn && out.newton_iters == 0) out.rank_defect = MinNorm(jacobian_over(F1, s, vars)).defect();
    out.state = std::move(s);
    out.residual = rn;
    return out;
}

Vec<double> step(const LagrangianSystem &sys, const Vec<double> &mu, const Vec<double> &s0, const StepConfig &cfg)
{
    return step(*make_formulation(sys, mu, cfg.mode), s0, cfg).state;
}

InitReport consistent_init_report(const Formulation &f, const Vec<double> &guess, double tol, bool pin_momentum)
{
    InitReport rep;
    if (guess.size() != f.size())
        throw Error(ErrorKind::InvalidArgument, "initial state has " + std::to_string(guess.size()) +
                                                    " entries, layout needs " + std::to_string(f.size()));
    for (double g : guess)
        if (!std::isfinite(g)) throw Error(ErrorKind::InvalidArgument, "initial guess is not finite");

    auto rows = [&](const Vec<double> &s) {
        Vec<double> r = f.algebraic(s);
        if (pin_momentum) append(r, f.init_rows(s));
        return r;
    };
    auto rows1 = [&](const Vec<D1> &s) {
        Vec<D1> r = f.algebraic(s);
        if (pin_momentum) append(r, f.init_rows(s));
        return r;
    };

    Vec<double> s = guess;
    std::vector<bool> frozen(f.size(), false);
    for (std::size_t i : f.frozen()) frozen[i] = true;
    std::vector<std::size_t> free_vars;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!frozen[i]) free_vars.push_back(i);

    double res = 0.0;
    if (!gauss_newton(rows, rows1, s, free_vars, tol, res)) {
        Vec<double> s2 = guess;
        double res2 = 0.0;
        if (gauss_newton(rows, rows1, s2, all_indices(f.size()), tol, res2)) {
            s = s2;
            res = res2;
        }
    }
    rep.state = s;
    rep.residual = res;
    if (res >= tol) {
        Vec<double> r = rows(s);
        std::vector<std::string> labels = f.algebraic_labels();
        for (std::size_t i = labels.size(); i < r.size(); ++i) labels.push_back("momentum_" + std::to_string(i - f.algebraic_labels().size()));
        for (std::size_t i = 0; i < r.size(); ++i)
            if (std::abs(r[i]) >= tol) rep.offending_rows.push_back(labels[i]);
        rep.message = "algebraic rows cannot reach tolerance (residual " + std::to_string(res) + ")";
        return rep;
    }

    // Hidden rows: a(s) = 0 must persist along the flow.
    const std::vector<std::size_t> D = f.differential();
    const std::vector<std::size_t> A = f.algebraic_variables();
    auto alg1 = [&](const Vec<D1> &x) { return f.algebraic(x); };
    auto rates1 = [&](const Vec<D1> &x) { return f.rates(x); };
    const std::size_t na = f.algebraic(s).size();

    auto projector = [&](const Mat<double> &Ca) {
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(na));
        if (Ca.cols() == 0) return Eigen::MatrixXd(Eigen::MatrixXd::Identity(na, na));
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(Ca), Eigen::ComputeFullU);
        const auto &sv = svd.singularValues();
        double smax = sv.size() ? sv(0) : 0.0;
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(na); ++j) {
            bool null = j >= sv.size() || smax == 0.0 || sv(j) <= kRankRelTol * smax;
            if (null) P += svd.matrixU().col(j) * svd.matrixU().col(j).transpose();
        }
        return P;
    };
    auto hidden = [&](const Vec<double> &x, const Eigen::MatrixXd &P) {
        // directional derivative of a along the differential rates
        Vec<double> rate = f.rates(x);
        Vec<D1> xd = lift<D1>(x);
        for (std::size_t j = 0; j < D.size(); ++j) xd[D[j]].eps = rate[j];
        Vec<D1> a = f.algebraic(xd);
        Eigen::VectorXd cdf(static_cast<Eigen::Index>(na));
        for (std::size_t i = 0; i < na; ++i) cdf(static_cast<Eigen::Index>(i)) = a[i].eps;
        return from_eigen(Eigen::VectorXd(P * cdf));
    };
    auto hidden_jac = [&](const Vec<double> &x, const Eigen::MatrixXd &P) {
        Eigen::MatrixXd Cd = to_eigen(jacobian_over(alg1, x, D));
        Eigen::MatrixXd FA = to_eigen(jacobian_over(rates1, x, A));
        if (D.empty() || A.empty()) return Eigen::MatrixXd(Eigen::MatrixXd::Zero(na, A.size()));
        return Eigen::MatrixXd(P * Cd * FA);
    };

    Mat<double> Ca = A.empty() ? Mat<double>(na, 0) : jacobian_over(alg1, s, A);
    Eigen::MatrixXd P = projector(Ca);
    Vec<double> rho = hidden(s, P);
    double hres = max_abs(rho);
    if (hres > kHiddenTol && !A.empty()) {
        for (int it = 0; it < 30 && hres > kHiddenTol; ++it) {
            Vec<double> G = rows(s);
            append(G, rho);
            Mat<double> Jr = jacobian_over(rows1, s, A);
            Eigen::MatrixXd H = hidden_jac(s, P);
            Eigen::MatrixXd J(Jr.rows() + H.rows(), static_cast<Eigen::Index>(A.size()));
            J << to_eigen(Jr), H;
            MinNorm mn(from_eigen(J));
            Vec<double> dx = mn.solve(G);
            double gn = max_abs(G);
            bool accepted = false;
            for (double alpha = 1.0; alpha >= 1.0 / 65536.0; alpha *= 0.5) {
                Vec<double> trial = s;
                for (std::size_t j = 0; j < A.size(); ++j) trial[A[j]] -= alpha * dx[j];
                Vec<double> Gt = rows(trial);
                Vec<double> rt = hidden(trial, P);
                append(Gt, rt);
                if (max_abs(Gt) < gn) {
                    s = std::move(trial);
                    rho = std::move(rt);
                    hres = max_abs(rho);
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
        }
        res = max_abs(rows(s));
    }
    rep.state = s;
    rep.residual = res;
    rep.hidden_residual = hres;

    // rank of the velocity-level constraint Jacobian
    if (!A.empty()) {
        Mat<double> Jr = jacobian_over(rows1, s, A);
        Eigen::MatrixXd H = hidden_jac(s, P);
        Eigen::MatrixXd J(Jr.rows() + H.rows(), static_cast<Eigen::Index>(A.size()));
        J << to_eigen(Jr), H;
        rep.null_basis = kernel_basis(from_eigen(J));
        rep.rank_defect = rep.null_basis.size();
        for (std::size_t i : A) rep.null_basis_vars.push_back(f.names()[i]);
    }

    if (hres > kHiddenTol || res >= tol) {
        for (std::size_t i = 0; i < na; ++i)
            if (std::abs(rho[i]) > kHiddenTol) rep.offending_rows.push_back(f.algebraic_labels()[i]);
        std::string list;
        for (const auto &l : rep.offending_rows) list += (list.empty() ? "" : ", ") + l;
        rep.message = "hidden constraints from rows " + list + " fail (residual " + std::to_string(hres) +
                      "); secondary constraints must be declared";
        return rep;
    }
    rep.ok = true;
    return rep;
}

Vec<double> consistent_init(const Formulation &f, const Vec<double> &guess, double tol)
{
    InitReport rep = consistent_init_report(f, guess, tol);
    if (!rep.ok) {
        std::string rows;
        for (const auto &l : rep.offending_rows) rows += (rows.empty() ? "" : ", ") + l;
        throw SolverError(ErrorKind::Inconsistent, rep.message + (rows.empty() ? "" : " [rows: " + rows + "]"),
                          std::max(rep.residual, rep.hidden_residual));
    }
    return rep.state;
}

Vec<double> consistent_init(const LagrangianSystem &sys, const Vec<double> &mu, const Vec<double> &guess, Mode mode)
{
    return consistent_init(*make_formulation(sys, mu, mode), guess);
}

Vec<double> momentum_level(const LagrangianSystem &sys, const PontryaginPoint &guess)
{
    auto f = make_formulation(sys, Vec<double>(sys.dims.k, 0.0), Mode::full);
    InitReport rep = consistent_init_report(*f, f->pack(guess), 1e-12, false);
    const std::size_t n = sys.dims.n;
    Vec<double> q = slice(rep.state, 0, n), p = slice(rep.state, 2 * n, n);
    Mat<double> K = sys.sym.K.at<double>()(q);
    Vec<double> mu(sys.dims.k, 0.0);
    for (std::size_t a = 0; a < sys.dims.k; ++a)
        for (std::size_t b = 0; b < sys.dims.k; ++b) mu[a] += K(b, a) * p[sys.dims.m + b];
    return mu;
}

void Trajectory::throw_if_failed() const
{
    if (failure)
        throw SolverError(failure->kind, failure->message + " (t=" + std::to_string(failure->time) + ")", 0.0,
                          failure->time);
}

Trajectory integrate(const Formulation &f, const Vec<double> &s0, const StepConfig &cfg, double T)
{
    if (!(cfg.h > 0.0) || !(cfg.newton_tol > 0.0) || !(T >= 0.0))
        throw Error(ErrorKind::InvalidArgument, "step size, tolerance and horizon must be positive");
    Trajectory tr;
    tr.mode = f.mode();
    tr.names = f.names();
    const double E0 = f.energy(s0);
    tr.times.push_back(0.0);
    tr.states.push_back(s0);
    tr.diagnostics.push_back({f.momentum_drift(s0), 0.0, 0.0, 0, 0});
    const long steps = std::lround(T / cfg.h);
    const Vec<double> *prev = nullptr;
    for (long n = 0; n < steps; ++n) {
        const double t1 = static_cast<double>(n + 1) * cfg.h;
        try {
            const Vec<double> &s = tr.states.back();
            StepResult sr = step(f, s, cfg, prev);
            StepDiagnostics dg;
            dg.momentum_drift = f.momentum_drift(sr.state);
            dg.energy_drift = std::abs(f.energy(sr.state) - E0);
            dg.dirac_residual = max_abs(f.dirac_residual(s, sr.state, cfg.h));
            dg.newton_iters = sr.newton_iters;
            dg.rank_defect = sr.rank_defect;
            tr.times.push_back(t1);
            tr.states.push_back(std::move(sr.state));
            tr.diagnostics.push_back(dg);
            prev = &tr.states[tr.states.size() - 2];
        } catch (const Error &e) {
            tr.failure = Failure{e.kind(), e.what(), t1};
            break;
        }
    }
    return tr;
}

Trajectory integrate(const LagrangianSystem &sys, const Vec<double> &mu, const Vec<double> &s0, const StepConfig &cfg,
                     double T)
{
    return integrate(*make_formulation(sys, mu, cfg.mode), s0, cfg, T);
}

Vec<double> group_a_coordinates(const LagrangianSystem &sys, const Vec<double> &q)
{
    Vec<double> out;
    for (std::size_t j : sys.sym.split.A) out.push_back(q[sys.dims.m + j]);
    return out;
}

Trajectory reconstruct(const Formulation &f, const Trajectory &traj, const Vec<double> &thetaA0)
{
    const auto *rf = dynamic_cast<const ReducedForm *>(&f);
    if (!rf) throw Error(ErrorKind::InvalidArgument, "reconstruct needs a reduced formulation");
    const LagrangianSystem &sys = f.sys();
    const std::size_t kA = sys.sym.split.A.size();
    if (thetaA0.size() != kA) throw Error(ErrorKind::InvalidArgument, "thetaA0 length must equal k_mu");

    Trajectory out;
    out.mode = Mode::full;
    for (const auto &s : sys.coord_names) out.names.push_back(s);
    for (const auto &s : sys.coord_names) out.names.push_back("v_" + s);
    for (const auto &s : sys.coord_names) out.names.push_back("p_" + s);
    out.failure = traj.failure;

    Vec<double> th = thetaA0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (i > 0) {
            const double h = traj.times[i] - traj.times[i - 1];
            Vec<double> mid(traj.states[i].size());
            for (std::size_t j = 0; j < mid.size(); ++j) mid[j] = 0.5 * (traj.states[i][j] + traj.states[i - 1][j]);
            const Vec<double> th0 = th;
            auto G = [&](const auto &t1) {
                using T = typename std::decay_t<decltype(t1)>::value_type;
                Vec<T> tm(kA);
                for (std::size_t a = 0; a < kA; ++a) tm[a] = (t1[a] + th0[a]) * 0.5;
                Vec<T> rate = rf->theta_a_rate(mid, tm);
                Vec<T> r(kA);
                for (std::size_t a = 0; a < kA; ++a) r[a] = (t1[a] - th0[a]) / h - rate[a];
                return r;
            };
            Vec<double> rate0 = rf->theta_a_rate(mid, th0);
            for (std::size_t a = 0; a < kA; ++a) th[a] = th0[a] + h * rate0[a];
            for (int it = 0; it < 30; ++it) {
                Vec<double> r = G(th);
                if (max_abs(r) < 1e-13) break;
                Mat<double> J = jacobian<double>(G, th);
                Vec<double> dx = LU<double>(J).solve(r);
                for (std::size_t a = 0; a < kA; ++a) th[a] -= dx[a];
                if (max_abs(dx) < 1e-15 * (1.0 + max_abs(th))) break;
            }
        }
        PontryaginPoint pt = f.natural(traj.states[i], th);
        Vec<double> s = pt.q;
        append(s, pt.v);
        append(s, pt.p);
        out.times.push_back(traj.times[i]);
        out.states.push_back(std::move(s));
        StepDiagnostics dg = i < traj.diagnostics.size() ? traj.diagnostics[i] : StepDiagnostics{};
        out.diagnostics.push_back(dg);
    }
    return out;
}

Trajectory reconstruct(const LagrangianSystem &sys, const Vec<double> &mu, const Trajectory &traj,
                       const Vec<double> &thetaA0)
{
    return reconstruct(*make_formulation(sys, mu, Mode::reduced), traj, thetaA0);
}

double full_reduced_gap(const LagrangianSystem &sys, const Trajectory &full, const Trajectory &recon)
{
    const std::size_t n = sys.dims.n, m = sys.dims.m;
    const std::size_t N = std::min(full.size(), recon.size());
    double gap = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const Vec<double> &a = full.states[i], &b = recon.states[i];
        for (std::size_t j = 0; j < n; ++j) gap = std::max(gap, std::abs(a[j] - b[j]));
        for (std::size_t j = 0; j < m; ++j) gap = std::max(gap, std::abs(a[n + j] - b[n + j]));
        for (std::size_t j = 0; j < n; ++j) gap = std::max(gap, std::abs(a[2 * n + j] - b[2 * n + j]));
    }
    return gap;
}

}  // namespace routhsim
