#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lkqn::oracle {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix I(n);
    for (std::size_t i = 0; i < n; ++i) I.at(i, i) = 1.0;
    return I;
}

DenseMatrix dense_matmul(const DenseMatrix& A, const DenseMatrix& B) {
    if (A.n != B.n) throw std::invalid_argument("dense_matmul: size mismatch");
    DenseMatrix C(A.n);
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::size_t k = 0; k < A.n; ++k) {
            double aik = A.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < A.n; ++j) C.at(i, j) += aik * B.at(k, j);
        }
    return C;
}

DenseMatrix dense_transpose(const DenseMatrix& A) {
    DenseMatrix T(A.n);
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::size_t j = 0; j < A.n; ++j) T.at(j, i) = A.at(i, j);
    return T;
}

Vec dense_matvec(const DenseMatrix& A, const Vec& x) {
    if (A.n != x.size()) throw std::invalid_argument("dense_matvec: size mismatch");
    Vec y(A.n, 0.0);
    for (std::size_t i = 0; i < A.n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < A.n; ++j) acc += A.at(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

DenseMatrix dense_add_outer(DenseMatrix A, double coeff, const Vec& x, const Vec& y) {
    if (A.n != x.size() || A.n != y.size())
        throw std::invalid_argument("dense_add_outer: size mismatch");
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::size_t j = 0; j < A.n; ++j) A.at(i, j) += coeff * x[i] * y[j];
    return A;
}

DenseMatrix dense_from_stack(const HouseholderStack& u) {
    DenseMatrix U(u.n);
    Vec col(u.n);
    for (std::size_t j = 0; j < u.n; ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        col[j] = 1.0;
        stack_apply(u, col);
        for (std::size_t i = 0; i < u.n; ++i) U.at(i, j) = col[i];
    }
    return U;
}

std::vector<double> dense_projection(const DenseMatrix& B, const DenseMatrix& U) {
    if (B.n != U.n) throw std::invalid_argument("dense_projection: size mismatch");
    const std::size_t n = B.n;
    std::vector<double> z(n, 0.0);
    // z_i = u_i^T B u_i with u_i the i-th column of U.
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            double Bu = 0.0;
            for (std::size_t c = 0; c < n; ++c) Bu += B.at(r, c) * U.at(c, i);
            acc += U.at(r, i) * Bu;
        }
        z[i] = acc;
    }
    return z;
}

DenseMatrix dense_phi_update(const DenseMatrix& Btilde, const Vec& s, const Vec& y, double phi) {
    const std::size_t n = Btilde.n;
    if (s.size() != n || y.size() != n)
        throw std::invalid_argument("dense_phi_update: size mismatch");
    Vec Bs = dense_matvec(Btilde, s);
    double sBs = 0.0, ys = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sBs += s[i] * Bs[i];
        ys += y[i] * s[i];
    }
    if (ys <= 0.0) throw std::invalid_argument("dense_phi_update: y^T s <= 0");
    if (sBs <= 0.0) throw std::invalid_argument("dense_phi_update: s^T B s <= 0");
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = y[i] / ys - Bs[i] / sBs;
    DenseMatrix out = Btilde;
    out = dense_add_outer(std::move(out), -1.0 / sBs, Bs, Bs);
    out = dense_add_outer(std::move(out), 1.0 / ys, y, y);
    out = dense_add_outer(std::move(out), phi * sBs, v, v);
    return out;
}

std::vector<Vec> cg_reference(const std::function<void(const Vec&, Vec&)>& A_action,
                              const Vec& b, const Vec& x0,
                              const std::function<void(const Vec&, Vec&)>& precond,
                              std::size_t max_iters, double rtol) {
    const std::size_t n = b.size();
    std::vector<Vec> iterates;
    Vec x = x0;
    iterates.push_back(x);

    Vec Ax(n), r(n), z(n), p(n), Ap(n);
    A_action(x, Ax);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ax[i];
    double rnorm0 = 0.0;
    for (double v : r) rnorm0 += v * v;
    rnorm0 = std::sqrt(rnorm0);
    if (rnorm0 == 0.0) return iterates;

    precond(r, z);
    p = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];

    for (std::size_t k = 0; k < max_iters; ++k) {
        A_action(p, Ap);
        double pAp = 0.0;
        for (std::size_t i = 0; i < n; ++i) pAp += p[i] * Ap[i];
        if (pAp <= 0.0) throw std::runtime_error("cg_reference: matrix not positive definite");
        double alpha = rz / pAp;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        iterates.push_back(x);
        double rnorm = 0.0;
        for (double v : r) rnorm += v * v;
        rnorm = std::sqrt(rnorm);
        if (rnorm <= rtol * rnorm0) break;
        precond(r, z);
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return iterates;
}

std::vector<Vec> cg_reference(const DenseMatrix& A, const Vec& b, const Vec& x0,
                              std::size_t max_iters, double rtol) {
    auto act = [&](const Vec& v, Vec& out) { out = dense_matvec(A, v); };
    auto id = [](const Vec& v, Vec& out) { out = v; };
    return cg_reference(act, b, x0, id, max_iters, rtol);
}

namespace {

// Cyclic Jacobi on a symmetric matrix; returns (eigenvalues, rotations applied
// in place). Plenty for the small m x m and test-size problems used here.
void jacobi_eigen(DenseMatrix& A, DenseMatrix* V) {
    const std::size_t n = A.n;
    if (V) *V = DenseMatrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += A.at(i, j) * A.at(i, j);
        if (std::sqrt(off) < 1e-15 * (1.0 + std::abs(A.at(0, 0)))) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = A.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double tau = (A.at(q, q) - A.at(p, p)) / (2.0 * apq);
                double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                        : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = A.at(k, p), akq = A.at(k, q);
                    A.at(k, p) = c * akp - s * akq;
                    A.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = A.at(p, k), aqk = A.at(q, k);
                    A.at(p, k) = c * apk - s * aqk;
                    A.at(q, k) = s * apk + c * aqk;
                }
                if (V)
                    for (std::size_t k = 0; k < n; ++k) {
                        double vkp = V->at(k, p), vkq = V->at(k, q);
                        V->at(k, p) = c * vkp - s * vkq;
                        V->at(k, q) = s * vkp + c * vkq;
                    }
            }
        }
    }
}

} // namespace

std::vector<double> dense_sym_eigenvalues(DenseMatrix A) {
    jacobi_eigen(A, nullptr);
    std::vector<double> ev(A.n);
    for (std::size_t i = 0; i < A.n; ++i) ev[i] = A.at(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

DenseMatrix dense_inverse(const DenseMatrix& A) {
    const std::size_t n = A.n;
    DenseMatrix M = A;
    DenseMatrix I = DenseMatrix::identity(n);
    // Gauss-Jordan with partial pivoting.
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(M.at(r, col)) > std::abs(M.at(piv, col))) piv = r;
        if (M.at(piv, col) == 0.0) throw std::runtime_error("dense_inverse: singular matrix");
        if (piv != col)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(M.a[piv * n + j], M.a[col * n + j]);
                std::swap(I.a[piv * n + j], I.a[col * n + j]);
            }
        double d = M.at(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            M.at(col, j) /= d;
            I.at(col, j) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = M.at(r, col);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                M.at(r, j) -= f * M.at(col, j);
                I.at(r, j) -= f * I.at(col, j);
            }
        }
    }
    return I;
}

double dense_logdet_pd(const DenseMatrix& A) {
    const std::size_t n = A.n;
    DenseMatrix L(n);
    // Cholesky.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = A.at(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= L.at(i, k) * L.at(j, k);
            if (i == j) {
                if (acc <= 0.0) throw std::runtime_error("dense_logdet_pd: not positive definite");
                L.at(i, i) = std::sqrt(acc);
            } else {
                L.at(i, j) = acc / L.at(j, j);
            }
        }
    }
    double ld = 0.0;
    for (std::size_t i = 0; i < n; ++i) ld += std::log(L.at(i, i));
    return 2.0 * ld;
}

double polynomial_preservation_check(const DenseMatrix& A, const Vec& s, int m,
                                     int* effective_m) {
    const std::size_t n = A.n;
    if (m < 1 || static_cast<std::size_t>(m) > n)
        throw std::invalid_argument("polynomial_preservation_check: bad m");
    // Arnoldi with full reorthogonalization.
    std::vector<Vec> V;
    Vec v = s;
    double ns = 0.0;
    for (double x : v) ns += x * x;
    ns = std::sqrt(ns);
    if (ns == 0.0) throw std::invalid_argument("polynomial_preservation_check: s = 0");
    for (double& x : v) x /= ns;
    V.push_back(v);
    DenseMatrix H(static_cast<std::size_t>(m));
    int eff = 1;
    for (int j = 0; j < m; ++j) {
        Vec w = dense_matvec(A, V[static_cast<std::size_t>(j)]);
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i <= j && i < m; ++i) {
                double h = 0.0;
                for (std::size_t k = 0; k < n; ++k) h += w[k] * V[static_cast<std::size_t>(i)][k];
                H.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) += h;
                for (std::size_t k = 0; k < n; ++k) w[k] -= h * V[static_cast<std::size_t>(i)][k];
            }
        }
        if (j + 1 >= m) break;
        double hn = 0.0;
        for (double x : w) hn += x * x;
        hn = std::sqrt(hn);
        if (hn < 1e-12) break; // Krylov space exhausted early
        H.at(static_cast<std::size_t>(j + 1), static_cast<std::size_t>(j)) = hn;
        for (double& x : w) x /= hn;
        V.push_back(w);
        eff = j + 2;
    }
    if (effective_m) *effective_m = eff;
    const int me = eff;

    // Symmetrize the leading me x me block and diagonalize it.
    DenseMatrix Hm(static_cast<std::size_t>(me));
    for (int i = 0; i < me; ++i)
        for (int j = 0; j < me; ++j)
            Hm.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                0.5 * (H.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +
                       H.at(static_cast<std::size_t>(j), static_cast<std::size_t>(i)));
    DenseMatrix Q;
    jacobi_eigen(Hm, &Q);

    // First me columns of the transform: V_m Q; complete the basis by
    // Gram-Schmidt against coordinate vectors.
    DenseMatrix U(n);
    for (int c = 0; c < me; ++c)
        for (std::size_t r = 0; r < n; ++r) {
            double acc = 0.0;
            for (int k = 0; k < me; ++k)
                acc += V[static_cast<std::size_t>(k)][r] *
                       Q.at(static_cast<std::size_t>(k), static_cast<std::size_t>(c));
            U.at(r, static_cast<std::size_t>(c)) = acc;
        }
    std::size_t next = static_cast<std::size_t>(me);
    for (std::size_t cand = 0; cand < n && next < n; ++cand) {
        Vec w(n, 0.0);
        w[cand] = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t c = 0; c < next; ++c) {
                double h = 0.0;
                for (std::size_t r = 0; r < n; ++r) h += w[r] * U.at(r, c);
                for (std::size_t r = 0; r < n; ++r) w[r] -= h * U.at(r, c);
            }
        double wn = 0.0;
        for (double x : w) wn += x * x;
        wn = std::sqrt(wn);
        if (wn < 1e-8) continue;
        for (std::size_t r = 0; r < n; ++r) U.at(r, next) = w[r] / wn;
        ++next;
    }
    if (next < n) throw std::runtime_error("polynomial_preservation_check: basis completion failed");

    std::vector<double> z = dense_projection(A, U);
    DenseMatrix LA(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += U.at(i, k) * z[k] * U.at(j, k);
            LA.at(i, j) = acc;
        }

    double worst = 0.0;
    Vec pa = s, pl = s;
    for (int j = 1; j < me; ++j) {
        pa = dense_matvec(A, pa);
        pl = dense_matvec(LA, pl);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            num += (pa[k] - pl[k]) * (pa[k] - pl[k]);
            den += pa[k] * pa[k];
        }
        worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-300));
    }
    return worst;
}

} // namespace lkqn::oracle
