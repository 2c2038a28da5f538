#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "fixtures.hpp"
#include "routhsim/dirac.hpp"

using namespace routhsim;
using routhsim::testing::make_magnetic;

namespace {

Vec<double> unit(std::size_t n, std::size_t i)
{
    Vec<double> e(n, 0.0);
    e[i] = 1.0;
    return e;
}

double max_abs_mat(const Mat<double> &a)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s = std::max(s, std::abs(a(i, j)));
    return s;
}

}  // namespace

TEST_CASE("generalized energy")
{
    LagrangianSystem cl = make_cyclic_linear();
    CHECK(generalized_energy(cl, {{0.0, 0.0}, {1.0, 0.0}, {2.0, 1.0}}) == 1.0);
    LagrangianSystem zero = cl;
    zero.L = LagrangianFn([](const auto &q, const auto &) { return q[0] * 0.0; });
    CHECK(generalized_energy(zero, {{0.3, 0.1}, {1.5, -2.0}, {2.0, 0.25}}) == 2.5);
}

TEST_CASE("full Dirac residual")
{
    LagrangianSystem cl = make_cyclic_linear();
    const double t = 1.0;
    PontryaginPoint pt{{t, -t * t * t / 6}, {1.0, -t * t / 2}, {2 - t * t / 2, 1.0}};
    Vec<double> dq{1.0, -t * t / 2}, dp{-t, 0.0};
    CHECK(max_abs(dirac_residual_full(cl, pt, dq, {0.0, 0.0}, dp)) < 1e-12);

    LagrangianSystem rb = make_rigid_body();
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i) {
        PontryaginPoint p;
        rb.sampler(rng, p.q, p.v);
        auto [Lq, Lv] = lagrangian_partials<double>(rb.L, p.q, p.v);
        p.p = Lv;
        CHECK(max_abs(dirac_residual_full(rb, p, p.v, {0, 0, 0}, Lq)) == 0.0);
    }
}

TEST_CASE("Omega on M_mu")
{
    SUBCASE("mu = 0 leaves the canonical block")
    {
        LagrangianSystem mg = make_magnetic();
        TwoFormAtPoint w = omega_mu(mg, {0.0}, {0.1, 0.2, 0.3});
        const std::size_t m = 2, oP = 2 * m + 2;
        Mat<double> expect(w.matrix.rows(), w.matrix.cols());
        for (std::size_t i = 0; i < m; ++i) {
            expect(i, oP + i) = 1.0;
            expect(oP + i, i) = -1.0;
        }
        for (std::size_t i = 0; i < expect.rows(); ++i)
            for (std::size_t j = 0; j < expect.cols(); ++j) CHECK(w.matrix(i, j) == expect(i, j));
        CHECK(w.basis.size() == 8);
    }
    SUBCASE("Abelian curvature term")
    {
        LagrangianSystem mg = make_magnetic();
        TwoFormAtPoint w = omega_mu(mg, {0.8}, {0.1, 0.2, 0.3});
        CHECK(w.matrix(0, 1) == doctest::Approx(-0.8).epsilon(1e-14));
        CHECK(w.matrix(1, 0) == doctest::Approx(0.8).epsilon(1e-14));
        CHECK(w.matrix(2, 2) == 0.0);
    }
    SUBCASE("so(3) term")
    {
        LagrangianSystem rb = make_rigid_body();
        TwoFormAtPoint w = omega_mu(rb, {0.0, 0.0, 1.0}, {0.1, 0.2, 0.3});
        // -mu_a C^a_bc with C = eps
        CHECK(w.matrix(0, 1) == -1.0);
        CHECK(w.matrix(1, 0) == 1.0);
        CHECK(w.matrix(0, 2) == 0.0);
        CHECK(w.matrix(1, 2) == 0.0);
    }
}

TEST_CASE("membership residual vanishes along the cyclic-linear solution")
{
    LagrangianSystem cl = make_cyclic_linear();
    const Vec<double> mu{1.0};
    for (double t : {0.0, 0.4, 1.0}) {
        FullQuasiState s{{t, -t * t * t / 6}, {1.0}, {-t * t / 2}, {2 - t * t / 2}, {1.0}};
        FullQuasiState sd{{1.0, -t * t / 2}, {0.0}, {-t}, {-t}, {0.0}};
        TwoFormAtPoint w = omega_mu(cl, mu, s.q);
        Vec<double> r = membership_residual(w, tangent_mu(cl, s, sd), d_energy_mu(cl, mu, s));
        CHECK(max_abs(r) < 1e-12);
        CHECK(max_abs(restricted_dirac_residual(cl, mu, s, sd)) < 1e-12);
    }
}

TEST_CASE("restricted residual on a non-Abelian jet")
{
    LagrangianSystem rb = make_rigid_body();
    const Vec<double> mu{0.0, 0.0, 1.0};
    const Vec<double> q{0.1, -0.2, 0.3}, qdot{0.3, 0.1, -0.2};
    FrameAt<double> fa = eval_frame(rb.moving, q);
    Vec<double> u = fa.W * qdot;
    FullQuasiState sd{qdot, {}, {0, 0, 0}, {}, {}};

    FullQuasiState sA{q, {}, u, {}, {}};
    sA.vtilde[2] += 0.5;
    CHECK(max_abs(slice(restricted_dirac_residual(rb, mu, sA, sd), 0, 3)) == 0.0);

    FullQuasiState sI{q, {}, u, {}, {}};
    sI.vtilde[0] += 0.5;
    Vec<double> r = slice(restricted_dirac_residual(rb, mu, sI, sd), 0, 3);
    CHECK(r[1] == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(max_abs(r) > 0.1);
}

TEST_CASE("reduced Routh-Dirac residual")
{
    LagrangianSystem cl = make_cyclic_linear();
    for (double t : {0.0, 0.5, 1.0}) {
        ReducedState r{{t}, {}, {1.0}, {-t * t / 2}, {2 - t * t / 2}};
        ReducedState rd{{1.0}, {}, {}, {}, {-t}};
        CHECK(max_abs(reduced_dirac_residual(cl, {1.0}, r, rd)) < 1e-10);
    }
    LagrangianSystem cf = make_central_force();
    ReducedState r{{1.0}, {}, {0.0}, {1.0}, {0.0}};
    ReducedState rd{{0.0}, {}, {}, {}, {0.0}};
    CHECK(max_abs(reduced_dirac_residual(cf, {1.0}, r, rd)) < 1e-14);
}

TEST_CASE("kernels and principal angles")
{
    Mat<double> J(2, 2);
    J(0, 1) = 1.0;
    J(1, 0) = -1.0;
    CHECK(kernel_basis(J).empty());

    // Abelian: kernel = E~, dv, dv~ directions
    LagrangianSystem cl = make_cyclic_linear();
    TwoFormAtPoint w = omega_mu(cl, {1.0}, {0.3, 0.0});
    std::vector<Vec<double>> K = kernel_basis(w);
    CHECK(K.size() == 3);
    CHECK(max_principal_angle(K, {unit(5, 1), unit(5, 2), unit(5, 3)}) < 1e-12);

    // so(3), mu = E3: group-direction kernel is E3
    LagrangianSystem rb = make_rigid_body();
    TwoFormAtPoint wr = omega_mu(rb, {0.0, 0.0, 1.0}, {0.1, 0.2, 0.3});
    std::vector<Vec<double>> Kg = restricted_kernel(wr, {0, 1, 2});
    CHECK(Kg.size() == 1);
    CHECK(max_principal_angle(Kg, {unit(wr.matrix.rows(), 2)}) < 1e-8);

    const double s = std::sqrt(0.5);
    CHECK(max_principal_angle({unit(2, 0)}, {{s, s}}) == doctest::Approx(std::numbers::pi / 4));
    CHECK(max_principal_angle({unit(3, 0)}, {unit(3, 0), unit(3, 1)}) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("quasi-coordinate form equals the conjugated canonical form")
{
    // Z1 = d/dx, Z2 = x d/dy; Phi = d(q, Z^T p)/d(q, p) by central differences
    Frame f(2, MatrixFn([](const auto &q) {
                using T = typename std::decay_t<decltype(q)>::value_type;
                Mat<T> Z(2, 2);
                Z(0, 0) = T(1.0);
                Z(0, 1) = q[1];
                Z(1, 1) = q[0];
                return Z;
            }));
    const Vec<double> q{1.7, -0.4}, p{0.3, 0.9};
    auto phi = [&](const Eigen::Vector4d &y) {
        Eigen::Vector4d out;
        Mat<double> Z = f.z().at<double>()(Vec<double>{y[0], y[1]});
        out << y[0], y[1], Z(0, 0) * y[2] + Z(1, 0) * y[3], Z(0, 1) * y[2] + Z(1, 1) * y[3];
        return out;
    };
    Eigen::Vector4d y0(q[0], q[1], p[0], p[1]);
    Eigen::Matrix4d Phi;
    for (int j = 0; j < 4; ++j) {
        Eigen::Vector4d e = Eigen::Vector4d::Zero();
        e[j] = 1e-6;
        Phi.col(j) = (phi(y0 + e) - phi(y0 - e)) / 2e-6;
    }
    Eigen::Matrix4d Jc = Eigen::Matrix4d::Zero();
    Jc(0, 2) = Jc(1, 3) = 1.0;
    Jc(2, 0) = Jc(3, 1) = -1.0;
    Eigen::Matrix4d Pi = Phi.inverse();
    Eigen::Matrix4d expect = Pi.transpose() * Jc * Pi;
    Eigen::Vector4d P = phi(y0);
    Mat<double> got = omega_quasi(f, q, {P[2], P[3]});
    double gap = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) gap = std::max(gap, std::abs(got(i, j) - expect(i, j)));
    CHECK(gap < 1e-8);
    CHECK(max_abs_mat(got) > 0.1);
}
