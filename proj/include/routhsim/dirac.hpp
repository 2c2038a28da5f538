#pragma once

// Presymplectic forms, energy differentials and Dirac-membership residuals on
// the Pontryagin bundle, on M_mu, and on the reduced space M_mu/G_mu.
// Membership of (cdot, dE) in the graph of Omega is dE(w) = Omega(cdot, w).

#include <string>
#include <vector>

#include "routhsim/routh.hpp"

namespace routhsim {

struct TwoFormAtPoint {
    Mat<double> matrix;
    std::string basis_label;
    std::vector<std::string> basis;
};

struct EnergyDifferentialAtPoint {
    Vec<double> components;
};

/// E_L = <p, v> - L(q, v).
double generalized_energy(const LagrangianSystem &sys, const PontryaginPoint &pt);

/// With dE_L = (alpha, beta, gamma) = (-dL/dq, p - dL/dv, v) in the (q, v, p)
/// basis, returns (alpha + dp, beta, gamma - dq).
Vec<double> dirac_residual_full(const LagrangianSystem &sys, const PontryaginPoint &pt, const Vec<double> &dq,
                                const Vec<double> &dv, const Vec<double> &dp);

/// Omega_{M_mu} in the basis (X_i [m], E~_a [k], dv [m], dv~ [k], dp [m]).
TwoFormAtPoint omega_mu(const LagrangianSystem &sys, const Vec<double> &mu, const Vec<double> &q);

/// dE_mu in the same basis, E_mu = p_i v^i - R^mu(q, v, v~).
EnergyDifferentialAtPoint d_energy_mu(const LagrangianSystem &sys, const Vec<double> &mu, const FullQuasiState &s);

/// Omega(cdot, .) - dE, componentwise over the basis.
Vec<double> membership_residual(const TwoFormAtPoint &omega, const Vec<double> &cdot,
                                const EnergyDifferentialAtPoint &dE);

/// Tangent cdot in the omega_mu basis from natural rates (qdot, vdot, vtdot, pdot).
Vec<double> tangent_mu(const LagrangianSystem &sys, const FullQuasiState &s, const FullQuasiState &sdot);

/// Blocks (mu_a C^a_bc (v~^c - u~^c) [k], E~^V(R) [k], v - xdot [m],
/// X^V(R) - p [m], pdot - X^C(R) + mu_a B^a_ij v^j [m]).
Vec<double> restricted_dirac_residual(const LagrangianSystem &sys, const Vec<double> &mu, const FullQuasiState &s,
                                      const FullQuasiState &sdot);
Vec<double> restricted_dirac_residual(const RouthContext &ctx, const FullQuasiState &s, const FullQuasiState &sdot);

/// Reduced Routh-Dirac residual in hat coordinates, blocks
/// (pdot - dR/dx_h + mu B xdot [m], mu_a C^a_bc A^b_K (v~^c - u~^c) for K in I [kI],
///  p - dR/dv [m], dR/dvhat [k], xdot - v [m]).
/// u~ is built from thetaI-dot of the jet, with the A-rates taken from the
/// reconstruction equation, since those directions are quotiented out.
Vec<double> reduced_dirac_residual(const RouthContext &ctx, const ReducedState &r, const ReducedState &rdot);
Vec<double> reduced_dirac_residual(const LagrangianSystem &sys, const Vec<double> &mu, const ReducedState &r,
                                   const ReducedState &rdot);

/// Omega_{M_mu/G_mu} in the basis (X_i [m], hat E_K for K in I [kI], dv [m], dvhat [k], dp [m]).
TwoFormAtPoint omega_reduced(const RouthContext &ctx, const Vec<double> &x, const Vec<double> &thetaI);

/// Quasi-coordinate canonical form in the (dq, dP) basis of (q, P = Z^T p):
/// entries (q_mu, P_a) = W^a_mu and (q_mu, q_nu) = R^a_bc P_a W^b_mu W^c_nu.
Mat<double> omega_quasi(const Frame &frame, const Vec<double> &q, const Vec<double> &P);

/// Orthonormal basis of the numerical null space (singular values < rel_tol * max).
std::vector<Vec<double>> kernel_basis(const Mat<double> &m, double rel_tol = 1e-10);
std::vector<Vec<double>> kernel_basis(const TwoFormAtPoint &form, double rel_tol = 1e-10);

/// Vectors w supported on the listed basis slots with Omega w = 0, embedded back
/// into the full basis.
std::vector<Vec<double>> restricted_kernel(const TwoFormAtPoint &form, const std::vector<std::size_t> &slots,
                                           double rel_tol = 1e-10);

/// Largest principal angle between two subspaces (radians); pi/2 if dimensions differ.
double max_principal_angle(const std::vector<Vec<double>> &U, const std::vector<Vec<double>> &V);

}  // namespace routhsim
