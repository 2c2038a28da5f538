#include "routhsim/symmetry.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace routhsim {

SymmetrySetup cyclic_symmetry(std::size_t m, std::size_t k, Vec<double> mu)
{
    SymmetrySetup s;
    s.dims = Dims::make(m, k, k);
    s.C = SymmetrySetup::abelian_constants(k);
    s.K = MatrixFn([k](const auto &q) {
        using T = typename std::decay_t<decltype(q)>::value_type;
        return Mat<T>::identity(k);
    });
    s.Ad = s.K;
    s.Lambda = MatrixFn([k, m](const auto &q) {
        using T = typename std::decay_t<decltype(q)>::value_type;
        return Mat<T>(k, m);
    });
    s.mu = std::move(mu);
    for (std::size_t a = 0; a < k; ++a) s.split.A.push_back(a);
    return s;
}

Frame moving_frame(const SymmetrySetup &sym)
{
    // The setup is copied into the closure so the frame owns its data.
    auto shared = std::make_shared<const SymmetrySetup>(sym);
    return Frame(sym.dims.n, MatrixFn([shared](const auto &q) { return moving_frame_matrix(*shared, q); }));
}

double jacobi_violation(const Tensor3<double> &C)
{
    const std::size_t k = C.dim0();
    double worst = 0.0;
    // [[a,b],c] + [[b,c],a] + [[c,a],b] = 0 componentwise in E_e
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
            for (std::size_t c = 0; c < k; ++c)
                for (std::size_t e = 0; e < k; ++e) {
                    double s = 0.0;
                    for (std::size_t d = 0; d < k; ++d)
                        s += C(d, a, b) * C(e, d, c) + C(d, b, c) * C(e, d, a) + C(d, c, a) * C(e, d, b);
                    worst = std::max(worst, std::abs(s));
                }
    return worst;
}

namespace {

void record(IdentityViolation &iv, double value, std::vector<std::size_t> idx)
{
    if (std::abs(value) > iv.max_violation) {
        iv.max_violation = std::abs(value);
        iv.worst_indices = std::move(idx);
    }
}

}  // namespace

SplitReport splitting_report(const SymmetrySetup &sym, const Vec<double> &mu)
{
    const std::size_t k = sym.dims.k;
    const auto &C = sym.C;
    const auto &A = sym.split.A;
    const auto &I = sym.split.I;
    if (A.size() + I.size() != k || A.size() != sym.dims.k_mu)
        throw Error(ErrorKind::InvalidSplit, "split sizes must be (k_mu, k - k_mu)");
    std::vector<bool> seen(k, false);
    for (auto idx : A) {
        if (idx >= k || seen[idx]) throw Error(ErrorKind::InvalidSplit, "split indices must partition 0..k-1");
        seen[idx] = true;
    }
    for (auto idx : I) {
        if (idx >= k || seen[idx]) throw Error(ErrorKind::InvalidSplit, "split indices must partition 0..k-1");
        seen[idx] = true;
    }

    SplitReport rep;
    IdentityViolation anti{"C^c_ab = -C^c_ba", 0.0, {}};
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) record(anti, C(c, a, b) + C(c, b, a), {c, a, b});

    IdentityViolation jac{"Jacobi identity", jacobi_violation(C), {}};

    IdentityViolation sub{"C^J_AB = 0", 0.0, {}};
    for (auto J : I)
        for (auto a : A)
            for (auto b : A) record(sub, C(J, a, b), {J, a, b});

    IdentityViolation iso{"C^c_Ab mu_c = 0", 0.0, {}};
    for (auto a : A)
        for (std::size_t b = 0; b < k; ++b) {
            double s = 0.0;
            for (std::size_t c = 0; c < k; ++c) s += C(c, a, b) * mu[c];
            record(iso, s, {a, b});
        }

    IdentityViolation inv{"C^B_AI = 0", 0.0, {}};
    for (auto B : A)
        for (auto a : A)
            for (auto i : I) record(inv, C(B, a, i), {B, a, i});

    rep.identities = {anti, jac, sub, iso, inv};
    for (const auto &iv : rep.identities)
        if (iv.max_violation > kSplitTol) rep.ok = false;
    return rep;
}

SplitReport validate_splitting(const SymmetrySetup &sym, const Vec<double> &mu)
{
    SplitReport rep = splitting_report(sym, mu);
    for (const auto &iv : rep.identities)
        if (iv.max_violation > kSplitTol) {
            std::ostringstream os;
            os << "invalid split: identity " << iv.identity << " violated by " << iv.max_violation << " at indices (";
            for (std::size_t i = 0; i < iv.worst_indices.size(); ++i) os << (i ? "," : "") << iv.worst_indices[i];
            os << ")";
            throw Error(ErrorKind::InvalidSplit, os.str());
        }
    return rep;
}

}  // namespace routhsim
