#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "routhsim/integrator.hpp"
#include "routhsim/systems.hpp"

using namespace routhsim;

namespace {

// cyclic-linear, V = x^2/2, mu = 1, x(0) = y(0) = 0
PontryaginPoint exact(double t)
{
    return {{t, -t * t * t / 6}, {1.0, -t * t / 2}, {2 - t * t / 2, 1.0}};
}

double gap(const Vec<double> &a, const Vec<double> &b)
{
    double g = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) g = std::max(g, std::abs(a[i] - b[i]));
    return g;
}

StepConfig cfg_of(Mode m, double h = 1e-3)
{
    StepConfig c;
    c.mode = m;
    c.h = h;
    return c;
}

}  // namespace

TEST_CASE("mode names")
{
    for (Mode m : {Mode::full, Mode::m_mu, Mode::reduced, Mode::classical}) CHECK(parse_mode(to_string(m)) == m);
    CHECK_THROWS_AS(parse_mode("both"), Error);
}

TEST_CASE("state layouts")
{
    LagrangianSystem cl = make_cyclic_linear();
    CHECK(make_formulation(cl, {1.0}, Mode::full)->names() ==
          std::vector<std::string>{"x", "y", "v_x", "v_y", "p_x", "p_y"});
    CHECK(make_formulation(cl, {1.0}, Mode::m_mu)->names() == std::vector<std::string>{"x", "y", "v_x", "vt_y", "p_x"});
    CHECK(make_formulation(cl, {1.0}, Mode::reduced)->names() == std::vector<std::string>{"x", "v_x", "vhat_y", "p_x"});
}

TEST_CASE("consistent initialisation")
{
    LagrangianSystem cl = make_cyclic_linear();
    auto f = make_formulation(cl, {1.0}, Mode::full);
    Vec<double> s = consistent_init(*f, {0.0, 0.0, 0.0, 0.3, 0.0, 0.0});
    CHECK(s[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s[4] == doctest::Approx(2 * s[2] + s[3]).epsilon(1e-12));
    CHECK(s[5] == doctest::Approx(s[2]).epsilon(1e-12));
    CHECK(f->momentum_drift(s) < 1e-12);

    LagrangianSystem cf = make_central_force();
    auto g = make_formulation(cf, {1.0}, Mode::full);
    Vec<double> c = consistent_init(*g, {1.0, 0.0, 0.3, 0.5, 0.0, 0.0});
    CHECK(c[4] == doctest::Approx(c[2]).epsilon(1e-12));
    CHECK(c[5] == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(momentum_level(cl, {{0.0, 0.0}, {0.7, 0.0}, {1.4, 0.7}})[0] == doctest::Approx(0.7).epsilon(1e-12));
    // p is projected together with v
    double j = momentum_level(cl, {{0.0, 0.0}, {0.7, 0.0}, {0.0, 0.0}})[0];
    CHECK(j > 0.0);
    CHECK(j < 0.7);
}

TEST_CASE("undeclared hidden constraints are reported by row")
{
    LagrangianSystem sf = make_scalar_fields(1.0, 1.0, false);
    auto f = make_formulation(sf, {1.0, 1.0}, Mode::full);
    PontryaginPoint guess = default_initial(sf);
    guess.q[0] = 0.3;
    guess.q[1] = -0.2;
    InitReport rep = consistent_init_report(*f, f->pack(guess));
    CHECK_FALSE(rep.ok);
    CHECK(rep.rank_defect >= 2);
    CHECK(!rep.offending_rows.empty());
    CHECK(!rep.null_basis_vars.empty());
    try {
        consistent_init(*f, f->pack(guess));
        FAIL("expected Inconsistent");
    } catch (const SolverError &e) {
        CHECK(e.kind() == ErrorKind::Inconsistent);
        CHECK(std::string(e.what()).find("rows:") != std::string::npos);
    }

    // declared constraints make it consistent
    LagrangianSystem sd = make_scalar_fields();
    auto fd = make_formulation(sd, {1.0, 1.0}, Mode::full);
    Vec<double> s = consistent_init(*fd, fd->pack(default_initial(sd)));
    CHECK(std::abs(s[0]) + std::abs(s[1]) < 1e-12);
}

TEST_CASE("one step against the closed form")
{
    LagrangianSystem cl = make_cyclic_linear();
    for (Mode m : {Mode::full, Mode::m_mu, Mode::reduced}) {
        auto f = make_formulation(cl, {1.0}, m);
        const double h = 1e-3;
        Vec<double> s0 = f->pack(exact(0.0));
        StepResult r = step(*f, s0, cfg_of(m, h));
        CHECK_MESSAGE(gap(r.state, f->pack(exact(h))) < 1e-9, to_string(m));
        CHECK(r.newton_iters <= 3);
    }
}

TEST_CASE("discrete Dirac residual is second order on the exact solution")
{
    LagrangianSystem cl = make_cyclic_linear();
    const double t0 = 0.3, h = 1e-2;
    auto res = [&](const Formulation &f, double hh) {
        return max_abs(f.dirac_residual(f.pack(exact(t0)), f.pack(exact(t0 + hh)), hh));
    };
    auto f = make_formulation(cl, {1.0}, Mode::full);
    CHECK(res(*f, h) / res(*f, h / 2) == doctest::Approx(4.0).epsilon(0.05));
    // the remaining rate rows are linear in t here, so midpoint differences are exact
    for (Mode m : {Mode::m_mu, Mode::reduced}) {
        auto g = make_formulation(cl, {1.0}, m);
        CHECK(res(*g, h) < 1e-13);
        CHECK(res(*g, h / 2) < 1e-13);
    }
}

TEST_CASE("endpoint accuracy")
{
    LagrangianSystem cl = make_cyclic_linear();
    for (Mode m : {Mode::full, Mode::m_mu, Mode::reduced}) {
        auto f = make_formulation(cl, {1.0}, m);
        Trajectory tr = integrate(*f, f->pack(exact(0.0)), cfg_of(m), 1.0);
        CHECK(!tr.failure);
        CHECK(tr.times.back() == doctest::Approx(1.0));
        CHECK_MESSAGE(gap(tr.states.back(), f->pack(exact(1.0))) < 1e-7, to_string(m));
    }

    // circular orbit r = 1
    LagrangianSystem cf = make_central_force();
    for (Mode m : {Mode::full, Mode::reduced, Mode::classical}) {
        auto f = make_formulation(cf, {1.0}, m);
        Vec<double> s0 = consistent_init(*f, f->pack({{1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}}));
        Trajectory tr = integrate(*f, s0, cfg_of(m), 10.0);
        CHECK(!tr.failure);
        CHECK_MESSAGE(std::abs(tr.states.back()[0] - 1.0) < 1e-7, to_string(m));
        if (m == Mode::full) CHECK(tr.states.back()[1] == doctest::Approx(10.0).epsilon(1e-9));
    }
}

TEST_CASE("momentum conservation")
{
    LagrangianSystem sf = make_scalar_fields();
    auto f = make_formulation(sf, {1.0, 1.0}, Mode::full);
    Vec<double> s0 = consistent_init(*f, f->pack(default_initial(sf)));
    Vec<double> mu = momentum_level(sf, f->natural(s0));
    auto g = make_formulation(sf, mu, Mode::full);
    Trajectory tr = integrate(*g, s0, cfg_of(Mode::full), 5.0);
    CHECK(!tr.failure);
    double drift = 0.0;
    for (const auto &d : tr.diagnostics) drift = std::max(drift, d.momentum_drift);
    CHECK(drift < 1e-8);

    // two vortices: moment of circulation over one step
    LagrangianSystem pv = make_point_vortices({1.0, 2.0});
    PontryaginPoint guess = default_initial(pv);
    Vec<double> mv = momentum_level(pv, guess);
    auto fv = make_formulation(pv, mv, Mode::full);
    Vec<double> v0 = consistent_init(*fv, fv->pack(guess));
    StepResult r = step(*fv, v0, cfg_of(Mode::full));
    const Vec<double> &q = r.state;
    CHECK(std::abs(q[0] * q[0] + 2.0 * q[1] * q[1] - mv[0]) < 1e-12);
}

TEST_CASE("reconstruction of the cyclic coordinate")
{
    LagrangianSystem cl = make_cyclic_linear();
    auto f = make_formulation(cl, {1.0}, Mode::reduced);
    {
        // trapezoidal error h^2/12 on y'' = -t
        Trajectory tr = integrate(*f, f->pack(exact(0.0)), cfg_of(Mode::reduced, 1e-4), 1.0);
        Trajectory rec = reconstruct(*f, tr, {0.0});
        CHECK(rec.names[1] == "y");
        CHECK(std::abs(rec.states.back()[1] + 1.0 / 6) < 1e-8);
    }
    Trajectory tr = integrate(*f, f->pack(exact(0.0)), cfg_of(Mode::reduced), 1.0);
    Trajectory rec = reconstruct(*f, tr, {0.0});
    CHECK(std::abs(rec.states.back()[1] + 1.0 / 6) < 1e-6);

    // reconstructed samples satisfy the implicit Euler-Lagrange equations
    const double h = 1e-3;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < rec.size(); ++i) {
        const Vec<double> &a = rec.states[i - 1], &b = rec.states[i + 1], &s = rec.states[i];
        PontryaginPoint pt{slice(s, 0, 2), slice(s, 2, 2), slice(s, 4, 2)};
        Vec<double> dq{(b[0] - a[0]) / (2 * h), (b[1] - a[1]) / (2 * h)};
        Vec<double> dp{(b[4] - a[4]) / (2 * h), (b[5] - a[5]) / (2 * h)};
        worst = std::max(worst, max_abs(implicit_el_residual(cl, pt, dq, dp)));
    }
    CHECK(worst < 1e-6);

    auto full = make_formulation(cl, {1.0}, Mode::full);
    Trajectory tf = integrate(*full, full->pack(exact(0.0)), cfg_of(Mode::full), 1.0);
    CHECK(full_reduced_gap(cl, tf, rec) < 1e-10);
    CHECK_THROWS_AS(reconstruct(*full, tf, {0.0}), Error);
    CHECK_THROWS_AS(reconstruct(*f, tr, {}), Error);
}

TEST_CASE("errors")
{
    LagrangianSystem cl = make_cyclic_linear();
    auto c = make_formulation(cl, {1.0}, Mode::classical);
    ErrorKind kind = ErrorKind::InvalidArgument;
    try {
        Trajectory t = integrate(*c, {0.0, 1.0, 2.0}, cfg_of(Mode::classical), 0.01);
        REQUIRE(t.failure);
        kind = t.failure->kind;
    } catch (const Error &e) {
        kind = e.kind();
    }
    CHECK(kind == ErrorKind::NotGRegular);
    try {
        make_formulation(cl, {1.0, 2.0}, Mode::full);
        FAIL("expected InvalidArgument");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::InvalidArgument);
    }
    auto f = make_formulation(cl, {1.0}, Mode::full);
    StepConfig bad = cfg_of(Mode::full, -1.0);
    CHECK_THROWS_AS(integrate(*f, f->pack(exact(0.0)), bad, 1.0), Error);

    // V = -ln(1 - x) pushes x to the boundary of its domain
    LagrangianSystem ln = make_cyclic_linear(PotentialExpr::parse("-ln(1-x)"));
    auto g = make_formulation(ln, {1.0}, Mode::full);
    Vec<double> s0 = consistent_init(*g, g->pack(exact(0.0)));
    Trajectory tr = integrate(*g, s0, cfg_of(Mode::full, 1e-2), 3.0);
    REQUIRE(tr.failure);
    CHECK(tr.failure->time > 0.0);
    CHECK(tr.failure->time < 1.5);
    CHECK(tr.times.back() < tr.failure->time);
    CHECK_THROWS_AS(tr.throw_if_failed(), SolverError);
}
