#include "routhsim/system.hpp"

#include <cmath>
#include <sstream>

namespace routhsim {

Vec<double> LagrangianSystem::sample_q(std::mt19937_64 &rng) const
{
    Vec<double> q, v;
    sampler(rng, q, v);
    return q;
}

double invariance_violation(const LagrangianSystem &sys, std::mt19937_64 &rng, int samples)
{
    const std::size_t m = sys.dims.m, k = sys.dims.k;
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        Vec<double> q, v;
        sys.sampler(rng, q, v);
        LiftDerivatives<double> ld;
        try {
            ld = lift_derivatives(sys.moving, sys.L, q, v);
        } catch (const Error &e) {
            // outside the domain of L
            if (e.kind() == ErrorKind::DomainError || e.kind() == ErrorKind::CollisionSingularity) continue;
            throw;
        }
        for (std::size_t a = 0; a < k; ++a) worst = std::max(worst, std::abs(ld.complete[m + a]));
    }
    return worst;
}

void finalize(LagrangianSystem &sys, std::uint64_t seed, int samples)
{
    if (sys.dims.n != sys.dims.m + sys.dims.k || sys.coord_names.size() != sys.dims.n)
        throw Error(ErrorKind::InvalidArgument, sys.label + ": inconsistent dimensions");
    sys.moving = moving_frame(sys.sym);
    std::mt19937_64 rng(seed);
    double worst = invariance_violation(sys, rng, samples);
    if (worst > kInvarianceTol) {
        std::ostringstream os;
        os << sys.label << ": Lagrangian not invariant, max |E~^C(L)| = " << worst;
        throw Error(ErrorKind::InvarianceViolation, os.str());
    }
}

}  // namespace routhsim
