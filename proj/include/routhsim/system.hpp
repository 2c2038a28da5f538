#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "routhsim/symmetry.hpp"

namespace routhsim {

struct NamedConstraint {
    std::string label;
    ConstraintFn g;  // g(q, v, p) = 0, natural coordinates
};

/// Draws a random (q, v) inside the system's working domain.
using Sampler = std::function<void(std::mt19937_64 &rng, Vec<double> &q, Vec<double> &v)>;

struct LagrangianSystem {
    std::string label;
    Dims dims;
    LagrangianFn L;
    SymmetrySetup sym;
    std::vector<NamedConstraint> extra_constraints;
    std::vector<std::string> coord_names;  // shape coordinates first, then group
    Sampler sampler;
    Frame moving;  // moving frame {X_i, E~_a}; filled by finalize()

    Vec<double> sample_q(std::mt19937_64 &rng) const;
};

inline constexpr double kInvarianceTol = 1e-8;
inline constexpr int kInvarianceSamples = 100;

/// Builds the moving frame and checks E~_a^C(L) = 0 at random points.
/// Throws InvarianceViolation with the worst component.
void finalize(LagrangianSystem &sys, std::uint64_t seed = 12345, int samples = kInvarianceSamples);

/// Max |E~_a^C(L)| over `samples` random points.
double invariance_violation(const LagrangianSystem &sys, std::mt19937_64 &rng, int samples);

/// Uniform helper for samplers.
inline double uniform(std::mt19937_64 &rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace routhsim
