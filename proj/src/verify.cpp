#include "routhsim/verify.hpp"

#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "routhsim/systems.hpp"

namespace routhsim {

bool SuiteReport::ok() const
{
    for (const auto &r : results)
        if (!r.pass) return false;
    return true;
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t i)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) >> 32)};
    return std::mt19937_64(seq);
}

PontryaginPoint sample_point(const LagrangianSystem &sys, std::mt19937_64 &rng)
{
    PontryaginPoint pt;
    sys.sampler(rng, pt.q, pt.v);
    pt.p.resize(sys.dims.n);
    for (auto &x : pt.p) x = uniform(rng, -1.0, 1.0);
    return pt;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Per-sample vectors of violations, reduced by componentwise max. Any throw
// or NaN counts as an infinite violation.
template <class F>
Vec<double> max_over(std::size_t width, std::size_t samples, std::uint64_t seed, Exec ex, F &&f)
{
    std::vector<Vec<double>> per(samples);
    auto one = [&](std::size_t i) {
        std::mt19937_64 rng = sample_rng(seed, i);
        Vec<double> v;
        try {
            v = f(rng);
        } catch (...) {
            v.assign(width, kInf);
        }
        for (auto &x : v)
            if (std::isnan(x)) x = kInf;
        per[i] = std::move(v);
    };
    const long N = static_cast<long>(samples);
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (long i = 0; i < N; ++i) one(static_cast<std::size_t>(i));
    } else {
        for (long i = 0; i < N; ++i) one(static_cast<std::size_t>(i));
    }
    Vec<double> worst(width, 0.0);
    for (const auto &v : per)
        for (std::size_t j = 0; j < width; ++j) worst[j] = std::max(worst[j], v[j]);
    return worst;
}

PropertyResult make_result(std::string name, double worst, double tol, std::size_t samples)
{
    return {std::move(name), worst, tol, samples, worst <= tol};
}

Frame body_frame_of(const LagrangianSystem &sys)
{
    auto sym = std::make_shared<const SymmetrySetup>(sys.sym);
    return Frame(sys.dims.n, MatrixFn([sym](const auto &q) { return body_frame_matrix(*sym, q); }));
}

double max_abs_diff(const Vec<double> &a, const Vec<double> &b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

std::vector<PropertyResult> rder_identities(const LagrangianSystem &sys, const Vec<double> &mu, std::uint64_t seed,
                                            std::size_t samples, Exec ex, double tol)
{
    const RouthContext ctx(sys, mu);
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    Vec<double> w = max_over(4, samples, seed, ex, [&](std::mt19937_64 &rng) {
        PontryaginPoint pt = sample_point(sys, rng);
        FrameAt<double> fa = eval_frame(sys.moving, pt.q);
        std::vector<Mat<double>> dZ = frame_derivative(sys.moving, pt.q);
        LiftDerivatives<double> lL = lift_derivatives(fa, dZ, sys.L, pt.q, pt.v);
        LiftDerivatives<double> lR = lift_derivatives(fa, dZ, ctx.R(), pt.q, pt.v);
        Vec<double> vq = fa.W * pt.v;
        Curvature<double> cv = curvature(sys.sym, sys.moving, pt.q, false);
        Vec<double> out(4, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double expect = lL.complete[i];
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t j = 0; j < m; ++j) expect += mu[a] * cv.B(a, i, j) * vq[j];
            out[0] = std::max(out[0], std::abs(lR.complete[i] - expect));
            out[1] = std::max(out[1], std::abs(lR.vertical[i] - lL.vertical[i]));
        }
        for (std::size_t a = 0; a < k; ++a) {
            double expect = 0.0;
            for (std::size_t c = 0; c < k; ++c)
                for (std::size_t b = 0; b < k; ++b) expect -= mu[c] * sys.sym.C(c, a, b) * vq[m + b];
            out[2] = std::max(out[2], std::abs(lR.complete[m + a] - expect));
            out[3] = std::max(out[3], std::abs(lR.vertical[m + a] - (lL.vertical[m + a] - mu[a])));
        }
        return out;
    });
    return {make_result("routh.rder.X_complete", w[0], tol, samples),
            make_result("routh.rder.X_vertical", w[1], tol, samples),
            make_result("routh.rder.E_complete", w[2], tol, samples),
            make_result("routh.rder.E_vertical", w[3], tol, samples)};
}

PropertyResult dual_vs_fd(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples, Exec ex, double tol)
{
    const std::size_t n = sys.dims.n;
    Vec<double> w = max_over(1, samples, seed, ex, [&](std::mt19937_64 &rng) {
        PontryaginPoint pt = sample_point(sys, rng);
        auto [dq, dv] = lagrangian_partials<double>(sys.L, pt.q, pt.v);
        Vec<double> x = pt.q;
        append(x, pt.v);
        Vec<double> fd = fd_gradient(
            [&](const Vec<double> &y) { return sys.L.at<double>()(slice(y, 0, n), slice(y, n, n)); }, x);
        append(dq, dv);
        double scale = std::max(1.0, max_abs(dq));
        return Vec<double>{max_abs_diff(dq, fd) / scale};
    });
    return make_result("frames.dual_vs_fd", w[0], tol, samples);
}

PropertyResult anholonomity_antisymmetry(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples,
                                         Exec ex)
{
    const Frame body = body_frame_of(sys);
    const std::size_t n = sys.dims.n;
    Vec<double> w = max_over(1, samples, seed, ex, [&](std::mt19937_64 &rng) {
        PontryaginPoint pt = sample_point(sys, rng);
        double worst = 0.0;
        for (const Frame *f : {&sys.moving, &body}) {
            Tensor3<double> R = anholonomity(*f, pt.q, AnholonomityOptions{false, 0.0});
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t c = 0; c < n; ++c) worst = std::max(worst, std::abs(R(a, b, c) + R(a, c, b)));
        }
        return Vec<double>{worst};
    });
    return make_result("frames.anholonomity_antisymmetry", w[0], 0.0, samples);
}

PropertyResult anholonomity_two_formula(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples, Exec ex,
                                        double tol)
{
    const Frame body = body_frame_of(sys);
    const std::size_t n = sys.dims.n;
    Vec<double> w = max_over(1, samples, seed, ex, [&](std::mt19937_64 &rng) {
        PontryaginPoint pt = sample_point(sys, rng);
        double worst = 0.0;
        for (const Frame *f : {&sys.moving, &body}) {
            Tensor3<double> R = anholonomity(*f, pt.q, AnholonomityOptions{false, 0.0});
            Tensor3<double> R2 = anholonomity_dw(*f, pt.q);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t c = 0; c < n; ++c) worst = std::max(worst, std::abs(R(a, b, c) - R2(a, b, c)));
        }
        return Vec<double>{worst};
    });
    return make_result("frames.anholonomity_two_formula", w[0], tol, samples);
}

PropertyResult pairing_invariance(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples, Exec ex,
                                  double tol)
{
    const Frame body = body_frame_of(sys);
    Vec<double> w = max_over(1, samples, seed, ex, [&](std::mt19937_64 &rng) {
        PontryaginPoint pt = sample_point(sys, rng);
        double worst = 0.0;
        for (const Frame *f : {&sys.moving, &body}) {
            QuasiPoint qp = to_quasi(*f, pt);
            double pv = dot(pt.p, pt.v);
            worst = std::max(worst, std::abs(dot(qp.pq, qp.vq) - pv) / std::max(1.0, std::abs(pv)));
            PontryaginPoint back = from_quasi(*f, qp);
            worst = std::max({worst, max_abs_diff(back.v, pt.v), max_abs_diff(back.p, pt.p)});
        }
        return Vec<double>{worst};
    });
    return make_result("frames.pairing_invariance", w[0], tol, samples);
}

PropertyResult bracket_table(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples, Exec ex, double tol)
{
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    Vec<double> w = max_over(1, samples, seed, ex, [&](std::mt19937_64 &rng) {
        PontryaginPoint pt = sample_point(sys, rng);
        Tensor3<double> R = anholonomity(sys.moving, pt.q, AnholonomityOptions{false, 0.0});
        double worst = 0.0;
        // [X_i, X_j] is vertical
        for (std::size_t l = 0; l < m; ++l)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(R(l, i, j)));
        if (sys.sym.analytic_B) {
            Tensor3<double> B = sys.sym.analytic_B->at<double>()(pt.q);
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(R(m + a, i, j) - B(a, i, j)));
        }
        // [X_i, E~_a] = 0
        for (std::size_t al = 0; al < m + k; ++al)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t a = 0; a < k; ++a) worst = std::max(worst, std::abs(R(al, i, m + a)));
        // [E~_a, E~_b] = -C^c_ab E~_c
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
                for (std::size_t l = 0; l < m; ++l) worst = std::max(worst, std::abs(R(l, m + a, m + b)));
                for (std::size_t c = 0; c < k; ++c)
                    worst = std::max(worst, std::abs(R(m + c, m + a, m + b) + sys.sym.C(c, a, b)));
            }
        return Vec<double>{worst};
    });
    return make_result("symmetry.bracket_table", w[0], tol, samples);
}

PropertyResult lagrangian_invariance(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples, Exec ex,
                                     double tol)
{
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    Vec<double> w = max_over(1, samples, seed, ex, [&](std::mt19937_64 &rng) {
        PontryaginPoint pt = sample_point(sys, rng);
        LiftDerivatives<double> ld = lift_derivatives(sys.moving, sys.L, pt.q, pt.v);
        double worst = 0.0;
        for (std::size_t a = 0; a < k; ++a) worst = std::max(worst, std::abs(ld.complete[m + a]));
        return Vec<double>{worst};
    });
    return make_result("symmetry.lagrangian_invariance", w[0], tol, samples);
}

PropertyResult dirac_full_vs_el(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples, Exec ex,
                                double tol)
{
    const std::size_t n = sys.dims.n;
    Vec<double> w = max_over(1, samples, seed, ex, [&](std::mt19937_64 &rng) {
        PontryaginPoint pt = sample_point(sys, rng);
        Vec<double> dq(n), dv(n), dp(n);
        for (std::size_t i = 0; i < n; ++i) {
            dq[i] = uniform(rng, -1, 1);
            dv[i] = uniform(rng, -1, 1);
            dp[i] = uniform(rng, -1, 1);
        }
        Vec<double> d = dirac_residual_full(sys, pt, dq, dv, dp);
        Vec<double> e = implicit_el_residual(sys, pt, dq, dp);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            worst = std::max(worst, std::abs(d[i] - e[2 * n + i]));
            worst = std::max(worst, std::abs(d[n + i] - e[n + i]));
            worst = std::max(worst, std::abs(d[2 * n + i] + e[i]));
        }
        return Vec<double>{worst};
    });
    return make_result("dirac.full_vs_implicit_el", w[0], tol, samples);
}

PropertyResult omega_quasi_identity(const Frame &frame, const Sampler &sampler, std::uint64_t seed,
                                    std::size_t samples, Exec ex, double tol)
{
    const std::size_t n = frame.dim();
    Vec<double> w = max_over(1, samples, seed, ex, [&](std::mt19937_64 &rng) {
        Vec<double> q, v;
        sampler(rng, q, v);
        Vec<double> p(n);
        for (auto &x : p) x = uniform(rng, -1, 1);
        Vec<double> P = eval_frame(frame, q).Z.transpose() * p;
        Vec<double> qp = q;
        append(qp, p);
        Mat<double> Phi = jacobian<double>(
            [&](const Vec<D1> &y) {
                Vec<D1> qq = slice(y, 0, n), pp = slice(y, n, n);
                Vec<D1> out = qq;
                append(out, frame.z().at<D1>()(qq).transpose() * pp);
                return out;
            },
            qp);
        Eigen::MatrixXd Pi = to_eigen(Phi).inverse();
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            J(i, n + i) = 1.0;
            J(n + i, i) = -1.0;
        }
        Eigen::MatrixXd expect = Pi.transpose() * J * Pi;
        Eigen::MatrixXd got = to_eigen(omega_quasi(frame, q, P));
        return Vec<double>{(expect - got).cwiseAbs().maxCoeff()};
    });
    return make_result("dirac.omega_quasi_identity", w[0], tol, samples);
}

PropertyResult omega_quasi_identity(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples, Exec ex,
                                    double tol)
{
    PropertyResult a = omega_quasi_identity(sys.moving, sys.sampler, seed, samples, ex, tol);
    PropertyResult b = omega_quasi_identity(body_frame_of(sys), sys.sampler, seed, samples, ex, tol);
    a.max_violation = std::max(a.max_violation, b.max_violation);
    a.pass = a.pass && b.pass;
    return a;
}

PropertyResult omega_antisymmetry(const LagrangianSystem &sys, const Vec<double> &mu, std::uint64_t seed,
                                  std::size_t samples, Exec ex, double tol)
{
    Vec<double> w = max_over(1, samples, seed, ex, [&](std::mt19937_64 &rng) {
        PontryaginPoint pt = sample_point(sys, rng);
        Mat<double> M = omega_mu(sys, mu, pt.q).matrix;
        double worst = 0.0;
        for (std::size_t i = 0; i < M.rows(); ++i)
            for (std::size_t j = 0; j < M.cols(); ++j) worst = std::max(worst, std::abs(M(i, j) + M(j, i)));
        return Vec<double>{worst};
    });
    return make_result("dirac.omega_mu_antisymmetry", w[0], tol, samples);
}

namespace {

PropertyResult split_property(const LagrangianSystem &sys, const Vec<double> &mu)
{
    SplitReport rep = splitting_report(sys.sym, mu);
    double worst = 0.0;
    for (const auto &v : rep.identities) worst = std::max(worst, v.max_violation);
    return {"symmetry.split_identities", worst, kSplitTol, 1, rep.ok};
}

PropertyResult adjoint_identity(const LagrangianSystem &sys)
{
    const std::size_t k = sys.dims.k;
    double worst = 0.0;
    if (k > 0) {
        Mat<double> A = sys.sym.Ad.at<double>()(Vec<double>(k, 0.0));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) worst = std::max(worst, std::abs(A(i, j) - (i == j ? 1.0 : 0.0)));
    }
    return {"symmetry.adjoint_at_identity", worst, 0.0, 1, worst == 0.0};
}

PropertyResult short_run_momentum(const LagrangianSystem &sys)
{
    PropertyResult r{"integrator.momentum_drift_T1", kInf, 1e-8, 1, false};
    try {
        PontryaginPoint guess = default_initial(sys);
        Vec<double> mu = momentum_level(sys, guess);
        auto f = make_formulation(sys, mu, Mode::full);
        Vec<double> s0 = consistent_init(*f, f->pack(guess));
        StepConfig cfg;
        Trajectory tr = integrate(*f, s0, cfg, 1.0);
        if (tr.failure) return r;
        double worst = 0.0;
        for (const auto &d : tr.diagnostics) worst = std::max(worst, d.momentum_drift);
        r.max_violation = worst;
        r.pass = worst <= r.tolerance;
        r.samples = tr.size();
    } catch (const Error &) {
    }
    return r;
}

}  // namespace

SuiteReport run_checks(const LagrangianSystem &sys, const Vec<double> &mu, std::uint64_t seed, std::size_t samples,
                       Exec ex)
{
    SuiteReport rep;
    rep.system = sys.label;
    auto &R = rep.results;
    R.push_back(dual_vs_fd(sys, seed, samples, ex));
    R.push_back(anholonomity_antisymmetry(sys, seed, samples, ex));
    R.push_back(anholonomity_two_formula(sys, seed, samples, ex));
    R.push_back(pairing_invariance(sys, seed, samples, ex));
    R.push_back(bracket_table(sys, seed, samples, ex));
    R.push_back(lagrangian_invariance(sys, seed, samples, ex));
    R.push_back(adjoint_identity(sys));
    R.push_back(split_property(sys, mu));
    for (auto &r : rder_identities(sys, mu, seed, samples, ex)) R.push_back(std::move(r));
    R.push_back(dirac_full_vs_el(sys, seed, samples, ex));
    R.push_back(omega_quasi_identity(sys, seed, samples, ex));
    R.push_back(omega_antisymmetry(sys, mu, seed, samples, ex));
    R.push_back(short_run_momentum(sys));
    return rep;
}

}  // namespace routhsim
