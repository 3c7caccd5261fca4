#include "algebra.hpp"

#include <algorithm>
#include <cmath>

namespace lkqn {

namespace {
constexpr double kPdFloorRel = 1e-14;
constexpr double kOrthoRelTol = 1e-10;
} // namespace

double SpectralAlgebra::trace() const {
    double acc = 0.0;
    for (double v : z) acc += v;
    return acc;
}

double SpectralAlgebra::logdet() const {
    double acc = 0.0;
    for (double v : z) {
        if (v <= 0.0) throw PdLossError("logdet: nonpositive eigenvalue");
        acc += std::log(v);
    }
    return acc;
}

double SpectralAlgebra::max_eig() const {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : z) m = std::max(m, v);
    return m;
}

double SpectralAlgebra::min_eig() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : z) m = std::min(m, v);
    return m;
}

bool SpectralAlgebra::is_pd() const {
    if (z.empty()) return false;
    return min_eig() > kPdFloorRel * std::abs(max_eig());
}

Vec algebra_matvec(const SpectralAlgebra& L, const Vec& x) {
    Vec w = x;
    stack_apply_t(L.U, w);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= L.z[i];
    ops::add_mults(w.size());
    stack_apply(L.U, w);
    return w;
}

Vec algebra_solve(const SpectralAlgebra& L, const Vec& x) {
    double floor = kPdFloorRel * std::abs(L.max_eig());
    Vec w = x;
    stack_apply_t(L.U, w);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (L.z[i] <= floor)
            throw PdLossError("algebra_solve: eigenvalue at or below positive-definiteness floor");
        w[i] /= L.z[i];
    }
    ops::add_mults(w.size());
    stack_apply(L.U, w);
    return w;
}

namespace {

// Jacobi rotation diagonalizing [[h11,h21],[h21,h22]], angle in (-pi/4, pi/4]
// with the tie t = 1 (quarter turn) when the diagonal entries are equal.
void rotation_2x2(KrylovPair& kp) {
    if (kp.h21 == 0.0) {
        kp.rot_c = 1.0;
        kp.rot_s = 0.0;
        kp.lam1 = kp.h11;
        kp.lam2 = kp.h22;
        return;
    }
    // Columns (c, s) and (-s, c) must be eigenvectors of H_2: the minimal
    // angle solves t^2 - 2 tau t - 1 = 0; the tie tau = 0 takes t = +1
    // (quarter turn), keeping the angle in (-pi/4, pi/4].
    double tau = (kp.h22 - kp.h11) / (2.0 * kp.h21);
    double t = (tau > 0.0) ? -1.0 / (tau + std::sqrt(1.0 + tau * tau))
                           : 1.0 / (-tau + std::sqrt(1.0 + tau * tau));
    double c = 1.0 / std::sqrt(1.0 + t * t);
    double s = t * c;
    kp.rot_c = c;
    kp.rot_s = s;
    // Rayleigh quotients of the rotated basis vectors (c,s) and (-s,c).
    kp.lam1 = c * c * kp.h11 + 2.0 * c * s * kp.h21 + s * s * kp.h22;
    kp.lam2 = s * s * kp.h11 - 2.0 * c * s * kp.h21 + c * c * kp.h22;
}

} // namespace

Arnoldi2Status arnoldi2_with_bs(const MatVecFn& matvec, const Vec& s, const Vec& Bs,
                                double toll_rel, KrylovPair& out) {
    const std::size_t n = s.size();
    double ns = nrm2(s);
    if (ns == 0.0) throw std::invalid_argument("arnoldi2: s must be nonzero");
    scaled_copy(1.0 / ns, s, out.v1);
    ops::add_mults(1);

    Vec w;
    scaled_copy(1.0 / ns, Bs, w); // w = B v1
    ops::add_mults(1);
    double nw = nrm2(w);
    out.h11 = dot(out.v1, w);
    axpy(-out.h11, out.v1, w); // residual r
    // One reorthogonalization pass keeps v1^T v2 at roundoff even when the
    // residual is close to the breakdown threshold.
    double corr = dot(out.v1, w);
    axpy(-corr, out.v1, w);
    out.h21 = nrm2(w);
    if (out.h21 <= toll_rel * nw) return Arnoldi2Status::breakdown;

    scaled_copy(1.0 / out.h21, w, out.v2);
    ops::add_mults(1);
    Vec bv2(n);
    matvec(out.v2, bv2);
    out.h22 = dot(out.v2, bv2);
    rotation_2x2(out);
    return Arnoldi2Status::ok;
}

Arnoldi2Status arnoldi2(const MatVecFn& matvec, const Vec& s, double toll_rel, KrylovPair& out) {
    Vec Bs(s.size());
    matvec(s, Bs);
    return arnoldi2_with_bs(matvec, s, Bs, toll_rel, out);
}

HouseholderStack build_algebra_eigvec(const Vec& s, const Vec* extra) {
    double ns = nrm2(s);
    if (ns == 0.0) throw std::invalid_argument("build_algebra_eigvec: s must be nonzero");
    std::vector<Vec> targets(1);
    scaled_copy(1.0 / ns, s, targets[0]);
    ops::add_mults(1);
    if (extra) {
        double ne = nrm2(*extra);
        if (ne == 0.0) throw std::invalid_argument("build_algebra_eigvec: extra must be nonzero");
        if (std::abs(dot(*extra, s)) > kOrthoRelTol * ne * ns)
            throw std::invalid_argument("build_algebra_eigvec: extra not orthogonal to s");
        targets.emplace_back();
        scaled_copy(1.0 / ne, *extra, targets.back());
        ops::add_mults(1);
    }
    return stack_fixing_columns(s.size(), targets);
}

HouseholderStack build_algebra_krylov2(const KrylovPair& kp) {
    const std::size_t n = kp.v1.size();
    std::vector<Vec> targets(2);
    scaled_copy(kp.rot_c, kp.v1, targets[0]);
    axpy(kp.rot_s, kp.v2, targets[0]);
    scaled_copy(-kp.rot_s, kp.v1, targets[1]);
    axpy(kp.rot_c, kp.v2, targets[1]);
    return stack_fixing_columns(n, targets);
}

std::optional<HouseholderStack> build_algebra_qt(const KrylovPair& kp, const Vec& gbar) {
    const std::size_t n = kp.v1.size();
    double ng = nrm2(gbar);
    if (ng == 0.0) return std::nullopt; // caller falls back to the 2-reflector algebra
    if (std::abs(dot(gbar, kp.v1)) > kOrthoRelTol * ng ||
        std::abs(dot(gbar, kp.v2)) > kOrthoRelTol * ng)
        throw std::invalid_argument("build_algebra_qt: gbar not orthogonal to span{v1, v2}");
    std::vector<Vec> targets(3);
    scaled_copy(kp.rot_c, kp.v1, targets[0]);
    axpy(kp.rot_s, kp.v2, targets[0]);
    scaled_copy(-kp.rot_s, kp.v1, targets[1]);
    axpy(kp.rot_c, kp.v2, targets[1]);
    scaled_copy(1.0 / ng, gbar, targets[2]);
    ops::add_mults(1);
    return stack_fixing_columns(n, targets);
}

Vec diag_congruence(const SpectralAlgebra& prev, const HouseholderStack& U) {
    const std::size_t n = U.n;
    if (prev.dim() != n) throw std::invalid_argument("diag_congruence: dimension mismatch");

    // Columns of M = prev.U^T U expand as m_i = e_i + sum_r C_r[i] u_r over
    // the reflector directions u_r, applied in the order: U's reflectors
    // h_1..h_s, then prev.U's reflectors g_t..g_1 (the transpose order).
    std::vector<const Vec*> gen;
    for (const auto& r : U.reflectors)
        if (!r.identity) gen.push_back(&r.h);
    for (auto it = prev.U.reflectors.rbegin(); it != prev.U.reflectors.rend(); ++it)
        if (!it->identity) gen.push_back(&it->h);

    const std::size_t p = gen.size();
    if (p == 0) return prev.z;

    // Gram entries of the generators and their d(z)-weighted counterparts.
    std::vector<std::vector<double>> G(p, std::vector<double>(p, 0.0));
    std::vector<std::vector<double>> Wz(p, std::vector<double>(p, 0.0));
    Vec tq(n);
    for (std::size_t q = 0; q < p; ++q) {
        for (std::size_t i = 0; i < n; ++i) tq[i] = prev.z[i] * (*gen[q])[i];
        ops::add_mults(n);
        for (std::size_t r = 0; r <= q; ++r) {
            Wz[r][q] = Wz[q][r] = dot(*gen[r], tq);
            if (r < q) G[q][r] = dot(*gen[q], *gen[r]);
        }
    }

    // Coefficient cascade, vectorized over i: C_r = -(u_r + sum_{q<r} G[r][q] C_q).
    std::vector<Vec> C(p);
    for (std::size_t r = 0; r < p; ++r) {
        C[r] = *gen[r];
        for (std::size_t q = 0; q < r; ++q) axpy(G[r][q], C[q], C[r]);
        for (double& v : C[r]) v = -v;
    }

    // out_i = z_i + 2 z_i sigma1_i + quad_i with
    //   sigma1 = sum_r C_r .* u_r,  quad = sum_{r,q} Wz[r][q] C_r .* C_q.
    Vec sigma1(n, 0.0), quad(n, 0.0), tmp(n);
    for (std::size_t r = 0; r < p; ++r) {
        add_hadamard(1.0, C[r], *gen[r], sigma1);
        std::fill(tmp.begin(), tmp.end(), 0.0);
        for (std::size_t q = 0; q < p; ++q) axpy(Wz[r][q], C[q], tmp);
        add_hadamard(1.0, C[r], tmp, quad);
    }
    Vec out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = prev.z[i] * (1.0 + 2.0 * sigma1[i]) + quad[i];
    ops::add_mults(2 * n);
    return out;
}

SpectralAlgebra project_update(const SpectralAlgebra& prev,
                               std::span<const RankOneTerm> terms,
                               HouseholderStack U) {
    Vec z = diag_congruence(prev, U);
    Vec a, b;
    for (const auto& t : terms) {
        if (!t.x) throw std::invalid_argument("project_update: null term");
        a = *t.x;
        stack_apply_t(U, a);
        if (t.y == nullptr || t.y == t.x) {
            add_hadamard(t.coeff, a, a, z);
        } else {
            b = *t.y;
            stack_apply_t(U, b);
            add_hadamard(t.coeff, a, b, z);
        }
    }
    return SpectralAlgebra{std::move(U), std::move(z)};
}

SpectralAlgebra project_action(const MatVecFn& matvec, HouseholderStack U) {
    const std::size_t n = U.n;
    Vec z(n), col(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(col.begin(), col.end(), 0.0);
        col[i] = 1.0;
        stack_apply(U, col);
        matvec(col, w);
        z[i] = dot(col, w);
    }
    return SpectralAlgebra{std::move(U), std::move(z)};
}

} // namespace lkqn
