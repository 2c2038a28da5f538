#pragma once

// Seeded random-point property suites. Each property has an OpenMP kernel and
// a serial reference; both visit the same per-sample seeds, so results agree.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "routhsim/integrator.hpp"

namespace routhsim {

enum class Exec { serial, parallel };

struct PropertyResult {
    std::string name;
    double max_violation = 0.0;
    double tolerance = 0.0;
    std::size_t samples = 0;
    bool pass = false;
};

struct SuiteReport {
    std::string system;
    std::vector<PropertyResult> results;
    bool ok() const;
};

/// Generator for sample i of a run seeded with `seed`.
std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t i);

/// Random (q, v, p) from the system sampler, p uniform in [-1, 1].
PontryaginPoint sample_point(const LagrangianSystem &sys, std::mt19937_64 &rng);

/// The four derivative identities of the generalized Routhian (one result each).
std::vector<PropertyResult> rder_identities(const LagrangianSystem &sys, const Vec<double> &mu, std::uint64_t seed,
                                            std::size_t samples, Exec ex = Exec::parallel, double tol = 1e-8);

/// Dual-number vs central finite-difference gradient of L, relative to max(1, |grad|).
PropertyResult dual_vs_fd(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples,
                          Exec ex = Exec::parallel, double tol = 1e-6);

/// R^a_bc + R^a_cb over the moving and body frames (exact zero expected).
PropertyResult anholonomity_antisymmetry(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples,
                                         Exec ex = Exec::parallel);

/// Agreement of the dZ and dW anholonomity formulas.
PropertyResult anholonomity_two_formula(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples,
                                        Exec ex = Exec::parallel, double tol = 1e-6);

/// |pq.vq - p.v| / max(1, |p.v|) and the to/from quasi round trip.
PropertyResult pairing_invariance(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples,
                                  Exec ex = Exec::parallel, double tol = 1e-12);

/// Moving-frame brackets: horizontal = B, mixed = 0, vertical = -C.
PropertyResult bracket_table(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples,
                             Exec ex = Exec::parallel, double tol = 1e-8);

/// max |E~_a^C(L)|.
PropertyResult lagrangian_invariance(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples,
                                     Exec ex = Exec::parallel, double tol = 1e-8);

/// dirac_residual_full against implicit_el_residual after block reordering.
PropertyResult dirac_full_vs_el(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples,
                                Exec ex = Exec::parallel, double tol = 1e-14);

/// omega_quasi against Phi^-T J Phi^-1, Phi = d(q, Z^T p)/d(q, p), for the moving and body frames.
PropertyResult omega_quasi_identity(const LagrangianSystem &sys, std::uint64_t seed, std::size_t samples,
                                    Exec ex = Exec::parallel, double tol = 1e-10);
PropertyResult omega_quasi_identity(const Frame &frame, const Sampler &sampler, std::uint64_t seed,
                                    std::size_t samples, Exec ex = Exec::parallel, double tol = 1e-10);

/// Antisymmetry of omega_mu at random q.
PropertyResult omega_antisymmetry(const LagrangianSystem &sys, const Vec<double> &mu, std::uint64_t seed,
                                  std::size_t samples, Exec ex = Exec::parallel, double tol = 1e-12);

/// Every module's invariant suite on one system.
SuiteReport run_checks(const LagrangianSystem &sys, const Vec<double> &mu, std::uint64_t seed,
                       std::size_t samples = 200, Exec ex = Exec::parallel);

}  // namespace routhsim
