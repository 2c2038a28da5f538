#include "routhsim/systems.hpp"

#include <cmath>
#include <numbers>

namespace routhsim {

namespace {

template <class T>
using V = Vec<T>;

Sampler box_sampler(std::vector<std::pair<double, double>> qbox, std::vector<std::pair<double, double>> vbox)
{
    return [qbox, vbox](std::mt19937_64 &rng, Vec<double> &q, Vec<double> &v) {
        q.resize(qbox.size());
        v.resize(vbox.size());
        for (std::size_t i = 0; i < qbox.size(); ++i) q[i] = uniform(rng, qbox[i].first, qbox[i].second);
        for (std::size_t i = 0; i < vbox.size(); ++i) v[i] = uniform(rng, vbox[i].first, vbox[i].second);
    };
}

// Coefficients of the SO(3) exponential map as functions of s = |theta|^2.
template <class T>
struct ExpCoeffs {
    T A;  // sin t / t
    T B;  // (1 - cos t) / t^2
    T C;  // (t - sin t) / t^3
    T D;  // 1/t^2 - (1 + cos t) / (2 t sin t)
};

template <class T>
ExpCoeffs<T> exp_coeffs(const Vec<T> &th)
{
    using std::cos, std::sin, std::sqrt;
    T s = th[0] * th[0] + th[1] * th[1] + th[2] * th[2];
    if (value_of(s) < 1e-3) {
        T s2 = s * s, s3 = s2 * s;
        return {1.0 - s / 6.0 + s2 / 120.0 - s3 / 5040.0, 0.5 - s / 24.0 + s2 / 720.0 - s3 / 40320.0,
                1.0 / 6.0 - s / 120.0 + s2 / 5040.0 - s3 / 362880.0, 1.0 / 12.0 + s / 720.0 + s2 / 30240.0 + s3 / 1209600.0};
    }
    T t = sqrt(s);
    T st = sin(t), ct = cos(t);
    return {st / t, (1.0 - ct) / s, (t - st) / (s * t), 1.0 / s - (1.0 + ct) / (2.0 * t * st)};
}

template <class T>
Mat<T> hat(const Vec<T> &w)
{
    Mat<T> S(3, 3);
    S(0, 1) = -w[2];
    S(0, 2) = w[1];
    S(1, 0) = w[2];
    S(1, 2) = -w[0];
    S(2, 0) = -w[1];
    S(2, 1) = w[0];
    return S;
}

// I + a S + b S^2
template <class T>
Mat<T> quadratic_in_hat(const Vec<T> &th, const T &a, const T &b)
{
    Mat<T> S = hat(th);
    Mat<T> S2 = S * S;
    Mat<T> M = Mat<T>::identity(3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) M(i, j) += a * S(i, j) + b * S2(i, j);
    return M;
}

}  // namespace

Tensor3<double> so3_constants()
{
    Tensor3<double> C(3, 3, 3);
    for (std::size_t a = 0; a < 3; ++a) {
        std::size_t b = (a + 1) % 3, c = (a + 2) % 3;
        C(c, a, b) = 1.0;
        C(c, b, a) = -1.0;
    }
    return C;
}

LagrangianSystem make_cyclic_linear(const PotentialExpr &V)
{
    for (const auto &name : V.variables())
        if (name != "x") throw Error(ErrorKind::InvalidArgument, "cyclic-linear potential must depend on x only");
    LagrangianSystem s;
    s.label = "cyclic-linear";
    s.dims = Dims::make(1, 1, 1);
    s.coord_names = {"x", "y"};
    auto Vb = std::make_shared<PotentialExpr::Bound>(V.bind({"x"}));
    s.L = LagrangianFn([Vb](const auto &q, const auto &v) {
        using T = typename std::decay_t<decltype(q)>::value_type;
        return v[0] * v[0] + v[0] * v[1] - Vb->eval(Vec<T>{q[0]});
    });
    s.sym = cyclic_symmetry(1, 1, {1.0});
    s.sampler = box_sampler({{-2, 2}, {-2, 2}}, {{-2, 2}, {-2, 2}});
    finalize(s);
    return s;
}

LagrangianSystem make_central_force(double mass, const PotentialExpr &V)
{
    if (!(mass > 0.0)) throw Error(ErrorKind::InvalidArgument, "central-force mass must be positive");
    for (const auto &name : V.variables())
        if (name != "r") throw Error(ErrorKind::InvalidArgument, "central-force potential must depend on r only");
    LagrangianSystem s;
    s.label = "central-force";
    s.dims = Dims::make(1, 1, 1);
    s.coord_names = {"r", "theta"};
    auto Vb = std::make_shared<PotentialExpr::Bound>(V.bind({"r"}));
    s.L = LagrangianFn([Vb, mass](const auto &q, const auto &v) {
        using T = typename std::decay_t<decltype(q)>::value_type;
        if (!(value_of(q[0]) > 0.0)) throw Error(ErrorKind::DomainError, "central-force: r must be positive");
        return 0.5 * mass * (v[0] * v[0] + q[0] * q[0] * v[1] * v[1]) - Vb->eval(Vec<T>{q[0]});
    });
    s.sym = cyclic_symmetry(1, 1, {1.0});
    s.sampler = box_sampler({{0.5, 2.0}, {-3, 3}}, {{-2, 2}, {-2, 2}});
    finalize(s);
    return s;
}

LagrangianSystem make_scalar_fields(double m2, double m3, bool declare_constraints)
{
    if (!(m2 > 0.0 && m3 > 0.0)) throw Error(ErrorKind::InvalidArgument, "scalar-fields masses must be positive");
    LagrangianSystem s;
    s.label = "scalar-fields";
    s.dims = Dims::make(4, 2, 2);
    s.coord_names = {"x1", "y1", "r", "rho", "theta", "phi"};
    s.L = LagrangianFn([m2, m3](const auto &q, const auto &v) {
        const auto &x1 = q[0], &y1 = q[1], &r = q[2], &rho = q[3];
        const auto &vr = v[2], &vrho = v[3], &vth = v[4], &vph = v[5];
        return m2 * (vr * vr + r * r * vth * vth) + m3 * (vrho * vrho + rho * rho * vph * vph) + r * r * vth +
               rho * rho * vph - r * r - rho * rho - (x1 * x1 + y1 * y1);
    });
    s.sym = cyclic_symmetry(4, 2, {2.0, 2.0});
    if (declare_constraints) {
        s.extra_constraints.push_back(constraint_from_expr(s.coord_names, "x1"));
        s.extra_constraints.push_back(constraint_from_expr(s.coord_names, "y1"));
    }
    s.sampler = box_sampler({{-1, 1}, {-1, 1}, {0.5, 1.5}, {0.5, 1.5}, {-3, 3}, {-3, 3}},
                            {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}});
    finalize(s);
    return s;
}

LagrangianSystem make_point_vortices(const std::vector<double> &gamma)
{
    const std::size_t N = gamma.size();
    if (N < 2) throw Error(ErrorKind::InvalidArgument, "vortices: need at least two vortices");
    for (double g : gamma)
        if (g == 0.0) throw Error(ErrorKind::InvalidArgument, "vortices: circulations must be nonzero");
    LagrangianSystem s;
    s.label = "vortices";
    s.dims = Dims::make(2 * N - 1, 1, 1);
    for (std::size_t k = 1; k <= N; ++k) s.coord_names.push_back("rho" + std::to_string(k));
    for (std::size_t k = 2; k <= N; ++k) s.coord_names.push_back("phi" + std::to_string(k));
    s.coord_names.push_back("phi1");
    s.L = LagrangianFn([gamma, N](const auto &q, const auto &v) {
        using T = typename std::decay_t<decltype(q)>::value_type;
        using std::cos, std::log;
        // absolute angles theta_k and their rates
        Vec<T> th(N), thd(N);
        th[0] = q[2 * N - 1];
        thd[0] = v[2 * N - 1];
        for (std::size_t k = 1; k < N; ++k) {
            th[k] = q[N + k - 1] + q[2 * N - 1];
            thd[k] = v[N + k - 1] + v[2 * N - 1];
        }
        T L(0.0);
        for (std::size_t k = 0; k < N; ++k) L += gamma[k] * q[k] * q[k] * thd[k];
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t k = n + 1; k < N; ++k) {
                T d2 = q[n] * q[n] + q[k] * q[k] - 2.0 * q[n] * q[k] * cos(th[n] - th[k]);
                if (!(value_of(d2) >= kCollisionTol * kCollisionTol))
                    throw Error(ErrorKind::CollisionSingularity,
                                "vortices " + std::to_string(n + 1) + " and " + std::to_string(k + 1) + " collide");
                L -= gamma[n] * gamma[k] * 0.5 * log(d2);
            }
        return L;
    });
    double I = 0.0;
    for (double g : gamma) I += g;
    s.sym = cyclic_symmetry(2 * N - 1, 1, {I});
    s.sampler = [N](std::mt19937_64 &rng, Vec<double> &q, Vec<double> &v) {
        q.assign(2 * N, 0.0);
        v.assign(2 * N, 0.0);
        // well separated positions: distinct radii bands
        for (std::size_t k = 0; k < N; ++k) q[k] = 0.5 + static_cast<double>(k) + uniform(rng, 0.1, 0.6);
        for (std::size_t i = N; i < 2 * N; ++i) q[i] = uniform(rng, -3, 3);
        for (auto &x : v) x = uniform(rng, -1, 1);
    };
    finalize(s);
    return s;
}

LagrangianSystem make_rigid_body(const std::vector<double> &inertia, const std::vector<double> &mu)
{
    if (inertia.size() != 3 || mu.size() != 3) throw Error(ErrorKind::InvalidArgument, "rigid body: need 3 inertias");
    LagrangianSystem s;
    s.label = "rigid-body";
    s.dims = Dims::make(0, 3, 1);
    s.coord_names = {"th1", "th2", "th3"};
    SymmetrySetup &sym = s.sym;
    sym.dims = s.dims;
    sym.C = so3_constants();
    // generators of left multiplication: K = J_l^-1
    sym.K = MatrixFn([](const auto &q) {
        auto c = exp_coeffs(q);
        using T = typename std::decay_t<decltype(q)>::value_type;
        return quadratic_in_hat(q, T(-0.5), c.D);
    });
    sym.Ad = MatrixFn([](const auto &th) {
        auto c = exp_coeffs(th);
        return quadratic_in_hat(th, c.A, c.B);
    });
    sym.Lambda = MatrixFn([](const auto &q) {
        using T = typename std::decay_t<decltype(q)>::value_type;
        return Mat<T>(3, 0);
    });
    sym.mu = mu;
    sym.split.A = {2};
    sym.split.I = {0, 1};
    s.L = LagrangianFn([inertia](const auto &q, const auto &v) {
        using T = typename std::decay_t<decltype(q)>::value_type;
        auto c = exp_coeffs(q);
        Vec<T> w = quadratic_in_hat(q, -c.B, c.C) * v;  // J_r(theta) thetadot
        T L(0.0);
        for (std::size_t a = 0; a < 3; ++a) L += 0.5 * inertia[a] * w[a] * w[a];
        return L;
    });
    s.sampler = [](std::mt19937_64 &rng, Vec<double> &q, Vec<double> &v) {
        q.resize(3);
        v.resize(3);
        double scale = uniform(rng, 0.0, 2.0);
        Vec<double> dir{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
        double nrm = std::max(1e-3, norm2(dir));
        for (std::size_t i = 0; i < 3; ++i) q[i] = scale * dir[i] / nrm;
        for (auto &x : v) x = uniform(rng, -1, 1);
    };
    finalize(s);
    return s;
}

SymmetrySetup affine_symmetry()
{
    SymmetrySetup sym;
    sym.dims = Dims::make(0, 2, 2);
    sym.C = Tensor3<double>(2, 2, 2);
    sym.C(1, 0, 1) = 1.0;  // [E1, E2] = E2
    sym.C(1, 1, 0) = -1.0;
    sym.K = MatrixFn([](const auto &q) {
        using T = typename std::decay_t<decltype(q)>::value_type;
        Mat<T> K(2, 2);
        K(0, 0) = q[0];
        K(1, 0) = q[1];
        K(1, 1) = T(1.0);
        return K;
    });
    sym.Ad = MatrixFn([](const auto &g) {
        using T = typename std::decay_t<decltype(g)>::value_type;
        Mat<T> A(2, 2);
        A(0, 0) = T(1.0);
        A(1, 0) = -g[1];
        A(1, 1) = g[0];
        return A;
    });
    sym.Lambda = MatrixFn([](const auto &q) {
        using T = typename std::decay_t<decltype(q)>::value_type;
        return Mat<T>(2, 0);
    });
    sym.mu = {0.0, 0.0};
    sym.split.A = {0, 1};
    return sym;
}

NamedConstraint constraint_from_expr(const std::vector<std::string> &coord_names, const std::string &text)
{
    PotentialExpr e = PotentialExpr::parse(text);
    std::vector<std::string> slots = coord_names;
    for (const auto &c : coord_names) slots.push_back("v_" + c);
    for (const auto &c : coord_names) slots.push_back("p_" + c);
    auto b = std::make_shared<PotentialExpr::Bound>(e.bind(slots));
    ConstraintFn g([b](const auto &q, const auto &v, const auto &p) {
        auto x = q;
        x.insert(x.end(), v.begin(), v.end());
        x.insert(x.end(), p.begin(), p.end());
        return b->eval(x);
    });
    return {text, std::move(g)};
}

std::vector<std::string> builtin_names() { return {"cyclic-linear", "central-force", "scalar-fields", "vortices", "rigid-body"}; }

PontryaginPoint default_initial(const LagrangianSystem &sys)
{
    const std::size_t n = sys.dims.n;
    PontryaginPoint pt{Vec<double>(n, 0.0), Vec<double>(n, 0.0), Vec<double>(n, 0.0)};
    if (sys.label == "cyclic-linear") {
        pt.v = {1.0, 0.0};
    } else if (sys.label == "central-force") {
        pt.q = {1.1, 0.0};
        pt.v = {0.0, 1.0 / (1.1 * 1.1)};
    } else if (sys.label == "scalar-fields") {
        pt.q = {0.0, 0.0, 1.0, 1.0, 0.0, 0.0};
        pt.v = {0.0, 0.0, 0.1, -0.1, 0.5, 0.5};
    } else if (sys.label == "vortices") {
        const std::size_t N = (n + 1) / 2;
        for (std::size_t k = 0; k < N; ++k) pt.q[k] = 1.0 + 0.1 * static_cast<double>(k);
        for (std::size_t k = 2; k <= N; ++k)
            pt.q[N + k - 2] = 2.0 * std::numbers::pi * static_cast<double>(k - 1) / static_cast<double>(N);
    } else if (sys.label == "rigid-body") {
        pt.q = {0.1, -0.2, 0.3};
        pt.v = {0.1, 0.2, 0.3};
    }
    pt.p = lagrangian_partials<double>(sys.L, pt.q, pt.v).second;
    return pt;
}

}  // namespace routhsim
