#ifndef LKQN_ALGEBRA_HPP
#define LKQN_ALGEBRA_HPP

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>

#include "householder.hpp"
#include "vec.hpp"

namespace lkqn {

// Raised when an operation needs positive eigenvalues and roundoff has
// produced one at or below the floor. Solvers treat it as a restart trigger.
class PdLossError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Matrix L = U d(z) U^T: the member of the algebra diagonalized by U that is
// closest (Frobenius) to whatever was projected to produce z.
struct SpectralAlgebra {
    HouseholderStack U;
    Vec z;

    std::size_t dim() const { return U.n; }

    static SpectralAlgebra identity(std::size_t n) {
        return SpectralAlgebra{HouseholderStack::identity(n), Vec(n, 1.0)};
    }

    double trace() const;
    double logdet() const; // requires all z_i > 0
    double max_eig() const;
    double min_eig() const;
    // Positive definiteness up to the roundoff floor 1e-14 * max z.
    bool is_pd() const;
};

Vec algebra_matvec(const SpectralAlgebra& L, const Vec& x);
Vec algebra_solve(const SpectralAlgebra& L, const Vec& x); // throws PdLossError

// m = 2 Arnoldi factorization of K_2(B, s) plus the closed-form Jacobi
// rotation diagonalizing the symmetric 2x2 compression H_2.
struct KrylovPair {
    Vec v1, v2;
    double h11 = 0.0, h21 = 0.0, h22 = 0.0;
    // Rotation [[c,-s],[s,c]] with angle in (-pi/4, pi/4]; columns of V_2 Q
    // are the two fixed directions, with Rayleigh quotients lam1, lam2.
    double rot_c = 1.0, rot_s = 0.0;
    double lam1 = 0.0, lam2 = 0.0;
};

using MatVecFn = std::function<void(const Vec&, Vec&)>;

enum class Arnoldi2Status { ok, breakdown };

// Two-step Arnoldi on (B, s); exactly two invocations of matvec (B s and
// B v2). Breakdown (s numerically an eigenvector direction: h21 <=
// toll_rel * ||Bs||/||s||) is signalled, not thrown.
Arnoldi2Status arnoldi2(const MatVecFn& matvec, const Vec& s, double toll_rel, KrylovPair& out);

// Variant reusing a precomputed Bs (one matvec invocation at most).
Arnoldi2Status arnoldi2_with_bs(const MatVecFn& matvec, const Vec& s, const Vec& Bs,
                                double toll_rel, KrylovPair& out);

// One reflector fixing s/||s|| as the first column; with `extra` (must be
// orthogonal to s) a second reflector fixes extra/||extra|| as well.
HouseholderStack build_algebra_eigvec(const Vec& s, const Vec* extra = nullptr);

// Two reflectors fixing V_2 Q e_1, V_2 Q e_2; the resulting projection of B
// satisfies L_B s = B s.
HouseholderStack build_algebra_krylov2(const KrylovPair& kp);

// Three reflectors additionally fixing gbar/||gbar|| (gbar must be orthogonal
// to span{v1, v2}); the projection of B then also has gbar as an eigenvector.
// An empty result signals the caller to fall back to build_algebra_krylov2.
std::optional<HouseholderStack> build_algebra_qt(const KrylovPair& kp, const Vec& gbar);

// Symmetric rank-one contribution coeff * x y^T (+ y x^T implicitly when
// x != y callers must pass both orders; solver use always has y == x).
struct RankOneTerm {
    double coeff = 0.0;
    const Vec* x = nullptr;
    const Vec* y = nullptr; // nullptr means y == x
};

// diag(U^T (prev.U d(prev.z) prev.U^T) U) in O(p^2 n) for p total reflectors,
// via the expansion of the columns of prev.U^T U over the reflector
// directions.
Vec diag_congruence(const SpectralAlgebra& prev, const HouseholderStack& U);

// Fast structured projection: eigenvalues of the projection of
//   B = prev + sum_t coeff_t x_t y_t^T
// onto the algebra diagonalized by U. O(n) for bounded reflector counts.
SpectralAlgebra project_update(const SpectralAlgebra& prev,
                               std::span<const RankOneTerm> terms,
                               HouseholderStack U);

// Projection of a general symmetric operator given through its action;
// O(n * cost(matvec)) — reference path for tests and general inputs.
SpectralAlgebra project_action(const MatVecFn& matvec, HouseholderStack U);

} // namespace lkqn

#endif
