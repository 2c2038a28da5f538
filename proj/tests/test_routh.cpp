#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fixtures.hpp"

using namespace routhsim;
using routhsim::testing::make_magnetic;

namespace {

// Closed-form cyclic-linear motion (V = x^2/2, mu = 1).
struct CyclicExact {
    double t;
    double x() const { return t; }
    double y() const { return -t * t * t / 6; }
    double vy() const { return -t * t / 2; }
    double px() const { return 2 - t * t / 2; }
};

double fd(const std::function<double(double)> &f, double x, double h = 1e-6)
{
    return (f(x + h) - f(x - h)) / (2 * h);
}

}  // namespace

TEST_CASE("Routhian values")
{
    LagrangianSystem cl = make_cyclic_linear();
    Vec<double> q{0.7, 3.0}, v{1.2, -0.4};
    CHECK(routhian<double>(cl, {0.0}, q, v) == cl.L.at<double>()(q, v));
    const double mu = 1.5;
    CHECK(routhian<double>(cl, {mu}, q, v) ==
          doctest::Approx(v[0] * v[0] + v[0] * v[1] - mu * v[1] - q[0] * q[0] / 2).epsilon(1e-15));

    LagrangianSystem cf = make_central_force();
    Vec<double> qc{1.3, 0.2}, vc{0.4, 0.9};
    CHECK(routhian<double>(cf, {mu}, qc, vc) ==
          doctest::Approx(0.5 * (vc[0] * vc[0] + qc[0] * qc[0] * vc[1] * vc[1]) - qc[0] * qc[0] / 2 - mu * vc[1]));
}

TEST_CASE("derivative identities on a curved bundle, against finite differences")
{
    LagrangianSystem mg = make_magnetic();
    const Vec<double> mu{0.8};
    RouthContext ctx(mg, mu);
    std::mt19937_64 rng(21);
    for (int s = 0; s < 10; ++s) {
        Vec<double> q, v;
        mg.sampler(rng, q, v);
        // X_1 = d1 + x2 dtheta, X_2 = d2, E~ = dtheta; w = W v, B^1_12 = -1
        const double w1 = v[0], w2 = v[1];
        auto R = [&](Vec<double> qq, Vec<double> vv) { return routhian<double>(mg, mu, qq, vv); };
        auto Lf = [&](Vec<double> qq, Vec<double> vv) { return mg.L.at<double>()(qq, vv); };
        auto partial = [&](auto F, int which, std::size_t i) {
            return fd(
                [&](double e) {
                    Vec<double> qq = q, vv = v;
                    (which == 0 ? qq : vv)[i] += e;
                    return F(qq, vv);
                },
                0.0);
        };
        auto lifts = [&](auto F) {
            // complete lifts: X1^C = d/dx1 + x2 d/dtheta + v2 d/dv_theta (from dZ/dx2), X2^C = d/dx2
            double X1C = partial(F, 0, 0) + q[1] * partial(F, 0, 2) + v[1] * partial(F, 1, 2);
            double X2C = partial(F, 0, 1);
            double X1V = partial(F, 1, 0) + q[1] * partial(F, 1, 2);
            double X2V = partial(F, 1, 1);
            double EV = partial(F, 1, 2);
            return std::array<double, 5>{X1C, X2C, X1V, X2V, EV};
        };
        auto lr = lifts(R);
        auto ll = lifts(Lf);
        // XC(R) = XC(L) + mu B^1_ij w^j with B^1_12 = -1
        CHECK(lr[0] == doctest::Approx(ll[0] + mu[0] * (-1.0) * w2).epsilon(1e-7));
        CHECK(lr[1] == doctest::Approx(ll[1] + mu[0] * (1.0) * w1).epsilon(1e-7));
        CHECK(lr[2] == doctest::Approx(ll[2]).epsilon(1e-7));
        CHECK(lr[3] == doctest::Approx(ll[3]).epsilon(1e-7));
        CHECK(lr[4] == doctest::Approx(ll[4] - mu[0]).epsilon(1e-7));

        RouthDerivatives<double> rd = routhian_derivatives(ctx, q, v);
        CHECK(rd.XC[0] == doctest::Approx(lr[0]).epsilon(1e-7));
        CHECK(rd.XC[1] == doctest::Approx(lr[1]).epsilon(1e-7));
        CHECK(rd.XV[0] == doctest::Approx(lr[2]).epsilon(1e-7));
        CHECK(rd.EV[0] == doctest::Approx(lr[4]).epsilon(1e-7));
        CHECK(rd.EC[0] == 0.0);
    }
}

TEST_CASE("momentum map values")
{
    LagrangianSystem cl = make_cyclic_linear();
    CHECK(momentum_map<double>(cl, {0.0, 0.0}, {0.37, 5.0})[0] == 0.37);
    LagrangianSystem sf = make_scalar_fields();
    CHECK(momentum_map<double>(sf, {0, 0, 1.0, 1.0, 0, 0}, {0, 0, 0, 0, 0.5, 0})[0] == 2.0);
}

TEST_CASE("G-regularity")
{
    CHECK(check_g_regular(make_cyclic_linear(), {0.0, 0.0}, {1.0, 0.0}).rank == 0);
    CHECK(check_g_regular(make_central_force(), {1.2, 0.0}, {0.0, 1.0}).rank == 1);
    CHECK(check_g_regular(make_point_vortices({1.0, 1.0}), {1.0, 2.0, 0.5, 0.1}, {0.1, 0.2, 0.3, 0.4}).rank == 0);
    CHECK(check_g_regular(make_rigid_body(), {0.1, 0.2, 0.3}, {0.1, 0.0, 0.0}).rank == 3);
}

TEST_CASE("classical Routhian of the central force")
{
    const double mass = 1.7, mu = 0.9;
    LagrangianSystem cf = make_central_force(mass);
    RouthContext ctx(cf, {mu});
    for (double r : {0.6, 1.0, 1.9})
        for (double vr : {-0.3, 0.5}) {
            double expect = 0.5 * mass * vr * vr - r * r / 2 - mu * mu / (2 * mass * r * r);
            CHECK(classical_routhian(ctx, {r}, {vr}) == doctest::Approx(expect).epsilon(1e-12));
        }
    // circular orbit r = 1 for mass = 1, mu = 1, V = r^2/2
    RouthContext c1(make_central_force(), {1.0});
    Vec<double> res = classical_routh_residual<double>(c1, {1.0}, {0.0}, {0.0}, {0.0}, {0.0});
    CHECK(max_abs(res) < 1e-12);

    RouthContext bad(make_cyclic_linear(), {1.0});
    try {
        classical_routhian(bad, {0.0}, {1.0});
        FAIL("expected NotGRegular");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::NotGRegular);
    }
}

TEST_CASE("implicit Euler-Lagrange residual")
{
    LagrangianSystem cl = make_cyclic_linear();
    CyclicExact e{1.0};
    PontryaginPoint pt{{e.x(), e.y()}, {1.0, e.vy()}, {e.px(), 1.0}};
    Vec<double> dq{1.0, -e.t * e.t / 2}, dp{-e.x(), 0.0};
    CHECK(max_abs(implicit_el_residual(cl, pt, dq, dp)) < 1e-12);
    pt.p[1] += 1e-3;
    Vec<double> r = implicit_el_residual(cl, pt, dq, dp);
    CHECK(r[3] == doctest::Approx(1e-3).epsilon(1e-9));
    CHECK(std::abs(r[2]) + std::abs(r[4]) + std::abs(r[5]) == 0.0);
}

TEST_CASE("implicit Lagrange-Routh residual")
{
    LagrangianSystem cl = make_cyclic_linear();
    const Vec<double> mu{1.0};
    CyclicExact e{0.6};
    FullQuasiState s{{e.x(), e.y()}, {1.0}, {e.vy()}, {e.px()}, {1.0}};
    FullQuasiState sd{{1.0, e.vy()}, {}, {}, {-e.x()}, {}};
    CHECK(max_abs(implicit_lr_residual(cl, mu, s, sd)) < 1e-14);

    // blocks: v~ - u~, E~^V(R), p~ - mu, v - xdot, X^V(R) - p, pdot - X^C(R) + mu B v
    FullQuasiState bad = s;
    bad.ptilde[0] += 0.25;
    Vec<double> r = implicit_lr_residual(cl, mu, bad, sd);
    CHECK(r[2] == doctest::Approx(0.25));
    CHECK(std::abs(r[0]) + std::abs(r[1]) + std::abs(r[3]) + std::abs(r[4]) + std::abs(r[5]) == 0.0);

    FullQuasiState off = s;
    off.v[0] = mu[0] + 0.1;
    CHECK(implicit_lr_residual(cl, mu, off, sd)[1] == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("reduced Lagrange-Routh residual")
{
    LagrangianSystem cl = make_cyclic_linear();
    CyclicExact e{0.8};
    ReducedState r{{e.x()}, {}, {1.0}, {e.vy()}, {e.px()}};
    ReducedState rd{{1.0}, {}, {}, {}, {-e.x()}};
    CHECK(max_abs(reduced_lr_residual(cl, {1.0}, r, rd)) < 1e-14);

    // scalar fields: rows p_x1 = 0, pdot_x1 = -2 x1, 2 r^2 v_theta + r^2 = mu_theta (m2 = 1)
    LagrangianSystem sf = make_scalar_fields(1.0, 1.0);
    const Vec<double> mu{1.5, 2.5};
    ReducedState s{{0.3, -0.2, 1.1, 0.9}, {}, {0.0, 0.0, 0.1, 0.2}, {0.4, 0.7}, {0.05, 0.0, 0.2, 0.36}};
    ReducedState sd{{0.0, 0.0, 0.1, 0.2}, {}, {}, {}, {0.01, 0.02, 0.0, 0.0}};
    Vec<double> res = reduced_lr_residual(sf, mu, s, sd);
    const std::size_t m = 4;
    CHECK(res[m + 0] == doctest::Approx(0.01 + 2 * 0.3).epsilon(1e-14));
    CHECK(res[m + 1] == doctest::Approx(0.02 - 2 * 0.2).epsilon(1e-14));
    CHECK(res[2 * m + 0] == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(res[2 * m + 1] == 0.0);
    const double r2 = 1.1 * 1.1, rho2 = 0.9 * 0.9;
    CHECK(res[3 * m + 0] == doctest::Approx(2 * r2 * 0.4 + r2 - mu[0]).epsilon(1e-14));
    CHECK(res[3 * m + 1] == doctest::Approx(2 * rho2 * 0.7 + rho2 - mu[1]).epsilon(1e-14));
}

TEST_CASE("circular orbit solves the reduced equations")
{
    LagrangianSystem cf = make_central_force();
    ReducedState r{{1.0}, {}, {0.0}, {1.0}, {0.0}};
    ReducedState rd{{0.0}, {}, {}, {}, {0.0}};
    CHECK(max_abs(reduced_lr_residual(cf, {1.0}, r, rd)) < 1e-14);
}
