#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "routhsim/systems.hpp"

using namespace routhsim;

namespace {

Frame planar_frame()
{
    // Z1 = d/dx, Z2 = x d/dy
    return Frame(2, MatrixFn([](const auto &q) {
                     using T = typename std::decay_t<decltype(q)>::value_type;
                     Mat<T> Z(2, 2);
                     Z(0, 0) = T(1.0);
                     Z(1, 1) = q[0];
                     return Z;
                 }));
}

// [Z_b, Z_c] by central differences of the column fields, expressed in the frame.
Tensor3<double> fd_bracket(const Frame &f, const Vec<double> &q)
{
    const std::size_t n = q.size();
    auto Z = [&](const Vec<double> &x) { return f.z().at<double>()(x); };
    std::vector<Mat<double>> dZ(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double h = 1e-6 * std::max(1.0, std::abs(q[t]));
        Vec<double> a = q, b = q;
        a[t] += h;
        b[t] -= h;
        Mat<double> za = Z(a), zb = Z(b);
        dZ[t] = Mat<double>(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) dZ[t](i, j) = (za(i, j) - zb(i, j)) / (2 * h);
    }
    Eigen::MatrixXd Z0 = to_eigen(Z(q));
    Eigen::MatrixXd W = Z0.inverse();
    Tensor3<double> R(n, n, n);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c) {
            Eigen::VectorXd br = Eigen::VectorXd::Zero(n);
            for (std::size_t mu = 0; mu < n; ++mu)
                for (std::size_t nu = 0; nu < n; ++nu)
                    br[mu] += Z0(nu, b) * dZ[nu](mu, c) - Z0(nu, c) * dZ[nu](mu, b);
            Eigen::VectorXd coef = W * br;
            for (std::size_t a = 0; a < n; ++a) R(a, b, c) = coef[a];
        }
    return R;
}

double tensor_gap(const Tensor3<double> &a, const Tensor3<double> &b)
{
    double g = 0.0;
    for (std::size_t i = 0; i < a.dim0(); ++i)
        for (std::size_t j = 0; j < a.dim1(); ++j)
            for (std::size_t k = 0; k < a.dim2(); ++k) g = std::max(g, std::abs(a(i, j, k) - b(i, j, k)));
    return g;
}

}  // namespace

TEST_CASE("coordinate frame is the identity with zero anholonomity")
{
    Frame f = Frame::coordinate(3);
    Vec<double> q{0.3, -1.0, 2.0};
    FrameAt<double> fa = eval_frame(f, q);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(fa.Z(i, j) == (i == j ? 1.0 : 0.0));
            CHECK(fa.W(i, j) == (i == j ? 1.0 : 0.0));
        }
    Tensor3<double> R = anholonomity(f, q);
    CHECK(tensor_gap(R, Tensor3<double>(3, 3, 3)) == 0.0);
}

TEST_CASE("planar frame matrices and anholonomity")
{
    Frame f = planar_frame();
    FrameAt<double> fa = eval_frame(f, Vec<double>{2.0, 0.0});
    CHECK(fa.Z(1, 1) == 2.0);
    CHECK(fa.W(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(fa.W(0, 1) == 0.0);

    Vec<double> q{2.0, 0.0};
    Tensor3<double> R = anholonomity(f, q);
    CHECK(R(1, 0, 1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(R(1, 1, 0) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(std::abs(R(0, 0, 1)) + std::abs(R(0, 1, 0)) == 0.0);
    CHECK(tensor_gap(R, fd_bracket(f, q)) < 1e-8);
}

TEST_CASE("singular frame is rejected")
{
    CHECK_THROWS_AS(eval_frame(planar_frame(), Vec<double>{0.0, 1.0}), Error);
    try {
        eval_frame(planar_frame(), Vec<double>{0.0, 1.0});
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::SingularFrame);
    }
}

TEST_CASE("analytic anholonomity mismatch is reported")
{
    Frame bad(2, planar_frame().z(), PolyFn<TensorOfQ>([](const auto &q) {
                  using T = typename std::decay_t<decltype(q)>::value_type;
                  return Tensor3<T>(2, 2, 2);
              }));
    try {
        anholonomity(bad, Vec<double>{2.0, 0.0});
        FAIL("expected DerivativeMismatch");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::DerivativeMismatch);
    }
}

TEST_CASE("anholonomity matches finite-difference brackets on curved frames")
{
    LagrangianSystem rb = make_rigid_body();
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        Vec<double> q, v;
        rb.sampler(rng, q, v);
        CHECK(tensor_gap(anholonomity(rb.moving, q), fd_bracket(rb.moving, q)) < 1e-7);
    }
}

TEST_CASE("quasi velocities and momenta")
{
    Frame f = planar_frame();
    QuasiPoint qp = to_quasi(f, PontryaginPoint{{2.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}});
    CHECK(qp.vq[0] == 0.0);
    CHECK(qp.vq[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(qp.pq[1] == 2.0);
    CHECK(dot(qp.pq, qp.vq) == doctest::Approx(1.0).epsilon(1e-15));

    QuasiPoint id = to_quasi(Frame::coordinate(2), PontryaginPoint{{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}});
    CHECK(id.vq == Vec<double>{3.0, 4.0});
    CHECK(id.pq == Vec<double>{5.0, 6.0});

    LagrangianSystem rb = make_rigid_body();
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        PontryaginPoint pt;
        rb.sampler(rng, pt.q, pt.v);
        pt.p = {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
        PontryaginPoint back = from_quasi(rb.moving, to_quasi(rb.moving, pt));
        for (std::size_t j = 0; j < 3; ++j)
            worst = std::max({worst, std::abs(back.v[j] - pt.v[j]), std::abs(back.p[j] - pt.p[j])});
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("lifted derivatives of the cyclic-linear Lagrangian")
{
    LagrangianSystem s = make_cyclic_linear();
    LiftDerivatives<double> ld = lift_derivatives(Frame::coordinate(2), s.L, Vec<double>{0.0, 0.0}, Vec<double>{1.0, 0.0});
    CHECK(ld.vertical[0] == 2.0);
    CHECK(ld.vertical[1] == 1.0);
    // coordinate frame: complete lift is dL/dq
    LiftDerivatives<double> l2 =
        lift_derivatives(Frame::coordinate(2), s.L, Vec<double>{0.7, 0.0}, Vec<double>{1.0, 0.0});
    CHECK(l2.complete[0] == doctest::Approx(-0.7).epsilon(1e-15));
    CHECK(l2.complete[1] == 0.0);
}

TEST_CASE("dual-number gradients agree with central differences")
{
    for (const LagrangianSystem &s :
         {make_cyclic_linear(), make_central_force(), make_scalar_fields(), make_point_vortices({1.0, 1.0}),
          make_rigid_body()}) {
        std::mt19937_64 rng(5);
        const std::size_t n = s.dims.n;
        for (int i = 0; i < 20; ++i) {
            Vec<double> q, v;
            s.sampler(rng, q, v);
            auto [dq, dv] = lagrangian_partials<double>(s.L, q, v);
            Vec<double> x = q;
            append(x, v);
            Vec<double> fd = fd_gradient(
                [&](const Vec<double> &y) { return s.L.at<double>()(slice(y, 0, n), slice(y, n, n)); }, x);
            append(dq, dv);
            for (std::size_t j = 0; j < 2 * n; ++j)
                CHECK(std::abs(dq[j] - fd[j]) <= 1e-6 * std::max(1.0, std::abs(dq[j])));
        }
    }
}
