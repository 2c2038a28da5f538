#pragma once

// Group-action data on a trivialized chart q = (x^i, theta^a): structure
// constants, generator coefficients K, adjoint matrix, principal connection,
// and the mu-adapted split of the Lie algebra.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "routhsim/frames.hpp"

namespace routhsim {

struct AlgebraSplit {
    std::vector<std::size_t> A;  // basis of the isotropy algebra g_mu
    std::vector<std::size_t> I;  // invariant complement
};

struct SymmetrySetup {
    Dims dims;
    Tensor3<double> C;  // C(c, a, b) = C^c_ab, [E_a, E_b] = C^c_ab E_c
    MatrixFn K;         // q -> k x k, K(b, a) = K^b_a, E~_a = K^b_a d/dtheta^b
    MatrixFn Ad;        // theta -> k x k, A(c, a) = A^c_a
    MatrixFn Lambda;    // q -> k x m, Lambda(a, i) = Lambda^a_i
    Vec<double> mu;     // default momentum level
    AlgebraSplit split;
    std::optional<PolyFn<TensorOfQ>> analytic_B;  // optional B(a, i, j)

    static Tensor3<double> abelian_constants(std::size_t k) { return Tensor3<double>(k, k, k); }
};

/// Identity generators, identity adjoint, zero connection: a product bundle
/// with an Abelian group acting by translation of the theta coordinates.
SymmetrySetup cyclic_symmetry(std::size_t m, std::size_t k, Vec<double> mu);

template <class T>
Vec<T> group_coordinates(const Dims &d, const Vec<T> &q)
{
    return slice(q, d.m, d.k);
}

/// Moving frame {X_i, E~_a}: Z = [[I, 0], [-Lambda, K]].
Frame moving_frame(const SymmetrySetup &sym);

template <class T>
Mat<T> moving_frame_matrix(const SymmetrySetup &sym, const Vec<T> &q)
{
    const std::size_t m = sym.dims.m, k = sym.dims.k, n = sym.dims.n;
    Mat<T> Z(n, n);
    for (std::size_t i = 0; i < m; ++i) Z(i, i) = T(1.0);
    if (k == 0) return Z;
    Mat<T> K = sym.K.at<T>()(q);
    if (m > 0) {
        Mat<T> Lam = sym.Lambda.at<T>()(q);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t i = 0; i < m; ++i) Z(m + a, i) = -Lam(a, i);
    }
    for (std::size_t b = 0; b < k; ++b)
        for (std::size_t a = 0; a < k; ++a) Z(m + b, a + m) = K(b, a);
    return Z;
}

template <class T>
struct BodyFrame {
    Mat<T> Lmat;  // Lmat(b, a) = L^b_a, hat E_a = L^b_a d/dtheta^b
    Mat<T> A;     // adjoint matrix A^b_a
};

/// Body-fixed frame: A = Ad(g(q)), L = K A.
template <class T>
BodyFrame<T> body_frame(const SymmetrySetup &sym, const Vec<T> &q)
{
    const std::size_t k = sym.dims.k;
    if (k == 0) return {Mat<T>(0, 0), Mat<T>(0, 0)};
    Mat<T> A = sym.Ad.at<T>()(group_coordinates(sym.dims, q));
    LU<T> lu(A);
    if (lu.singular()) throw Error(ErrorKind::SingularFrame, "body_frame: adjoint matrix is singular");
    Mat<T> K = sym.K.at<T>()(q);
    return {K * A, std::move(A)};
}

/// Full n x n matrix of the body-fixed frame {X_i, hat E_a}.
template <class T>
Mat<T> body_frame_matrix(const SymmetrySetup &sym, const Vec<T> &q)
{
    const std::size_t m = sym.dims.m, k = sym.dims.k;
    Mat<T> Z = moving_frame_matrix(sym, q);
    if (k == 0) return Z;
    BodyFrame<T> bf = body_frame(sym, q);
    for (std::size_t b = 0; b < k; ++b)
        for (std::size_t a = 0; a < k; ++a) Z(m + b, m + a) = bf.Lmat(b, a);
    return Z;
}

template <class T>
struct Curvature {
    Tensor3<T> B;     // B(a, i, j), [X_i, X_j] = B^a_ij E~_a
    Tensor3<T> Bhat;  // Bhat(a, i, j), [X_i, X_j] = Bhat^a_ij hat E_a
};

inline constexpr double kMixedBracketTol = 1e-8;
inline constexpr double kAnalyticCurvatureTol = 1e-6;

/// Curvature coefficients extracted from the anholonomity of the moving frame.
/// The mixed components [X_i, E~_a] must vanish (horizontal frame invariance).
template <class T>
Curvature<T> curvature(const SymmetrySetup &sym, const Frame &moving, const Vec<T> &q, bool validate = true)
{
    const std::size_t m = sym.dims.m, k = sym.dims.k, n = sym.dims.n;
    Curvature<T> out{Tensor3<T>(k, m, m), Tensor3<T>(k, m, m)};
    if (k == 0 || m == 0) return out;
    AnholonomityOptions opt;
    opt.validate = validate;
    Tensor3<T> R = anholonomity(moving, q, opt);
    if (validate) {
        for (std::size_t al = 0; al < n; ++al)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t a = 0; a < k; ++a)
                    if (std::abs(value_of(R(al, i, m + a))) > kMixedBracketTol)
                        throw Error(ErrorKind::InvarianceViolation,
                                    "curvature: [X_i, E~_a] does not vanish (i=" + std::to_string(i) +
                                        ", a=" + std::to_string(a) + "); connection not invariant");
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) out.B(a, i, j) = R(m + a, i, j);
    if (validate && sym.analytic_B) {
        Tensor3<T> Ba = sym.analytic_B->template at<T>()(q);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    if (std::abs(value_of(Ba(a, i, j)) - value_of(out.B(a, i, j))) > kAnalyticCurvatureTol)
                        throw Error(ErrorKind::DerivativeMismatch, "curvature: analytic B disagrees with frame brackets");
    }
    Mat<T> A = sym.Ad.at<T>()(group_coordinates(sym.dims, q));
    Mat<T> Ainv = inverse_or_throw(A, ErrorKind::SingularFrame, "curvature");
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                T s(0.0);
                for (std::size_t b = 0; b < k; ++b) s += Ainv(a, b) * out.B(b, i, j);
                out.Bhat(a, i, j) = s;
            }
    return out;
}

template <class T>
Curvature<T> curvature(const SymmetrySetup &sym, const Vec<T> &q, bool validate = true)
{
    return curvature(sym, moving_frame(sym), q, validate);
}

/// A-index rows of the connection: Lambda^mu = pi_{g_mu} o Lambda.
template <class T>
Mat<T> connection_mu(const SymmetrySetup &sym, const Vec<T> &q)
{
    const std::size_t m = sym.dims.m;
    Mat<T> out(sym.split.A.size(), m);
    if (m == 0 || sym.dims.k == 0) return out;
    Mat<T> Lam = sym.Lambda.at<T>()(q);
    for (std::size_t r = 0; r < sym.split.A.size(); ++r)
        for (std::size_t i = 0; i < m; ++i) out(r, i) = Lam(sym.split.A[r], i);
    return out;
}

struct IdentityViolation {
    std::string identity;
    double max_violation = 0.0;
    std::vector<std::size_t> worst_indices;
};

struct SplitReport {
    std::vector<IdentityViolation> identities;  // one entry per checked identity
    bool ok = true;
};

inline constexpr double kSplitTol = 1e-12;

/// Checks the algebraic identities an adapted split must satisfy:
///   antisymmetry of C, Jacobi identity, C^J_AB = 0 (g_mu subalgebra),
///   C^c_Ab mu_c = 0 (isotropy), C^B_AI = 0 (Ad-invariant complement).
SplitReport splitting_report(const SymmetrySetup &sym, const Vec<double> &mu);

/// Same as splitting_report but throws InvalidSplit naming the first violated identity.
SplitReport validate_splitting(const SymmetrySetup &sym, const Vec<double> &mu);

/// Jacobi-identity violation max over all index triples.
double jacobi_violation(const Tensor3<double> &C);

}  // namespace routhsim
