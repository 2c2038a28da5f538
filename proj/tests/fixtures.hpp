#pragma once

// Test-only systems.

#include "routhsim/systems.hpp"

namespace routhsim::testing {

// Charged particle in the plane with a unit magnetic field, lifted to
// (x1, x2, theta): L = 1/2 |v|^2 + 1/2 (v_theta - x2 v1)^2 - 1/2 |x|^2.
// Connection Lambda^1_1 = -x2, so [X_1, X_2] = -E~ and B^1_12 = -1.
inline LagrangianSystem make_magnetic()
{
    LagrangianSystem s;
    s.label = "magnetic";
    s.dims = Dims::make(2, 1, 1);
    s.coord_names = {"x1", "x2", "theta"};
    s.L = LagrangianFn([](const auto &q, const auto &v) {
        auto w = v[2] - q[1] * v[0];
        return 0.5 * (v[0] * v[0] + v[1] * v[1]) + 0.5 * w * w - 0.5 * (q[0] * q[0] + q[1] * q[1]);
    });
    s.sym = cyclic_symmetry(2, 1, {1.0});
    s.sym.Lambda = MatrixFn([](const auto &q) {
        using T = typename std::decay_t<decltype(q)>::value_type;
        Mat<T> L(1, 2);
        L(0, 0) = -q[1];
        return L;
    });
    s.sampler = [](std::mt19937_64 &rng, Vec<double> &q, Vec<double> &v) {
        q = {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -3, 3)};
        v = {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    };
    finalize(s);
    return s;
}

// so(3) constants with trivial bundle data, for split and kernel checks.
inline SymmetrySetup so3_setup(std::vector<std::size_t> A, std::vector<std::size_t> I)
{
    SymmetrySetup sym = cyclic_symmetry(0, 3, {0.0, 0.0, 1.0});
    sym.dims = Dims::make(0, 3, A.size());
    sym.C = so3_constants();
    sym.split.A = std::move(A);
    sym.split.I = std::move(I);
    return sym;
}

}  // namespace routhsim::testing
