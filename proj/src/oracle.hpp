#ifndef LKQN_ORACLE_HPP
#define LKQN_ORACLE_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "householder.hpp"
#include "vec.hpp"

// Brute-force dense verifiers. Everything here is O(n^2)-O(n^3) and written
// independently of the fast paths it checks; only stack application is shared
// (to materialize a stack column by column). Used by the test suites and by
// the CLI `verify` subcommand.

namespace lkqn::oracle {

struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> a; // row-major, n*n

    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t n_) : n(n_), a(n_ * n_, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }

    static DenseMatrix identity(std::size_t n);
};

DenseMatrix dense_matmul(const DenseMatrix& A, const DenseMatrix& B);
DenseMatrix dense_transpose(const DenseMatrix& A);
Vec dense_matvec(const DenseMatrix& A, const Vec& x);
DenseMatrix dense_add_outer(DenseMatrix A, double coeff, const Vec& x, const Vec& y);

// Materializes U column by column via stack application.
DenseMatrix dense_from_stack(const HouseholderStack& u);

// diag(U^T B U) by direct triple product.
std::vector<double> dense_projection(const DenseMatrix& B, const DenseMatrix& U);

// Literal rank-two (plus phi term) update formula applied densely.
DenseMatrix dense_phi_update(const DenseMatrix& Btilde, const Vec& s, const Vec& y, double phi);

// Preconditioned conjugate gradient for (1/2)x^T A x - b^T x, recording every
// iterate x_0, x_1, ... until ||r|| <= rtol * ||r_0|| or max_iters.
std::vector<Vec> cg_reference(const std::function<void(const Vec&, Vec&)>& A_action,
                              const Vec& b, const Vec& x0,
                              const std::function<void(const Vec&, Vec&)>& precond,
                              std::size_t max_iters, double rtol);
std::vector<Vec> cg_reference(const DenseMatrix& A, const Vec& b, const Vec& x0,
                              std::size_t max_iters, double rtol);

// Builds the m-column direction-preserving transform densely (Arnoldi to m,
// diagonalize H_m, complete the basis) and returns
// max_{j<m} ||L_A^j s - A^j s|| / ||A^j s||. When the Krylov space degenerates
// before m columns, the reduced dimension is reported through effective_m.
double polynomial_preservation_check(const DenseMatrix& A, const Vec& s, int m,
                                     int* effective_m = nullptr);

// Small dense helpers (Jacobi eigenvalues, inverse, pd log-determinant).
std::vector<double> dense_sym_eigenvalues(DenseMatrix A);
DenseMatrix dense_inverse(const DenseMatrix& A);
double dense_logdet_pd(const DenseMatrix& A);

} // namespace lkqn::oracle

#endif
