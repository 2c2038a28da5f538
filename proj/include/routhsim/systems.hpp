#pragma once

#include <string>
#include <vector>

#include "routhsim/expr.hpp"
#include "routhsim/routh.hpp"

namespace routhsim {

inline constexpr double kCollisionTol = 1e-8;

/// L = vx^2 + vx vy - V(x) on (x, y); R acting on y.
LagrangianSystem make_cyclic_linear(const PotentialExpr &V = PotentialExpr::parse("x^2/2"));

/// L = 1/2 mass (vr^2 + r^2 vtheta^2) - V(r) on (r, theta); S^1 acting on theta.
LagrangianSystem make_central_force(double mass = 1.0, const PotentialExpr &V = PotentialExpr::parse("r^2/2"));

/// Two polar scalar fields plus a massless field (x1, y1); T^2 acting on (theta, phi).
/// Coordinates (x1, y1, r, rho, theta, phi).
LagrangianSystem make_scalar_fields(double m2 = 1.0, double m3 = 1.0, bool declare_constraints = true);

/// Point vortices in polar / relative-angle coordinates
/// (rho_1..rho_N, phi_2..phi_N, phi_1); S^1 acting on phi_1.
LagrangianSystem make_point_vortices(const std::vector<double> &gamma);

/// Free rigid body on SO(3) in exponential coordinates, L = 1/2 w^T I w with w
/// the body angular velocity. so(3) structure constants C^c_ab = eps_abc.
LagrangianSystem make_rigid_body(const std::vector<double> &inertia = {1.0, 2.0, 3.0},
                                 const std::vector<double> &mu = {0.0, 0.0, 1.0});

/// Affine group x -> a x + b in coordinates (a, b), basis (E1 dilation, E2 translation).
SymmetrySetup affine_symmetry();

/// so(3) constants eps_abc.
Tensor3<double> so3_constants();

/// Constraint g(q, v, p) from an expression over coordinate names, v_<name>, p_<name>.
NamedConstraint constraint_from_expr(const std::vector<std::string> &coord_names, const std::string &text);

/// Names of the builtin systems accepted by make_builtin.
std::vector<std::string> builtin_names();

/// Default initial guess for a builtin with p = dL/dv; consistent_init finishes it.
PontryaginPoint default_initial(const LagrangianSystem &sys);

}  // namespace routhsim
