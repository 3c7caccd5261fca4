#include "hess_model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace lkqn {

namespace {

// Factors the 3x3 capacitance with partial pivoting (in place).
void lu3(std::array<std::array<double, 3>, 3>& a, std::array<int, 3>& piv) {
    piv = {0, 1, 2};
    for (int c = 0; c < 3; ++c) {
        int p = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        if (a[p][c] == 0.0) throw PdLossError("model_solve: singular capacitance");
        if (p != c) {
            std::swap(a[p], a[c]);
            std::swap(piv[p], piv[c]);
        }
        for (int r = c + 1; r < 3; ++r) {
            a[r][c] /= a[c][c];
            for (int k = c + 1; k < 3; ++k) a[r][k] -= a[r][c] * a[c][k];
        }
    }
}

std::array<double, 3> lu3_solve(const std::array<std::array<double, 3>, 3>& a,
                                const std::array<int, 3>& piv,
                                const std::array<double, 3>& b) {
    std::array<double, 3> x{b[piv[0]], b[piv[1]], b[piv[2]]};
    for (int r = 1; r < 3; ++r)
        for (int c = 0; c < r; ++c) x[r] -= a[r][c] * x[c];
    for (int r = 2; r >= 0; --r) {
        for (int c = r + 1; c < 3; ++c) x[r] -= a[r][c] * x[c];
        x[r] /= a[r][r];
    }
    return x;
}

void build_woodbury(HessianModel& m) {
    // B = base + D C D^T with D = [Ls | y | v], C = diag(-1/sLs, 1/ys, phi*sLs).
    // Woodbury: B^{-1} g = u - base^{-1} D (C^{-1} + D^T base^{-1} D)^{-1} D^T u,
    // u = base^{-1} g.
    const Vec* D[3] = {&m.Ls, &m.y, &m.v};
    for (int j = 0; j < 3; ++j) m.winv[j] = algebra_solve(m.base, *D[j]);
    double cinv[3] = {-m.sLs, m.ys, 1.0 / (m.phi * m.sLs)};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            m.cap[r][c] = (r == c ? cinv[r] : 0.0) + dot(*D[r], m.winv[c]);
    lu3(m.cap, m.piv);
    m.have_woodbury = true;
}

} // namespace

HessianModel broyden_update_with_ls(SpectralAlgebra base, Vec s, Vec y, double phi, Vec Ls) {
    if (phi < 0.0 || phi >= 1.0)
        throw std::invalid_argument("broyden_update: phi must lie in [0, 1)");
    HessianModel m;
    m.ys = dot(y, s);
    if (m.ys <= 0.0) throw CurvatureError("broyden_update: y^T s <= 0");
    if (!base.is_pd()) throw PdLossError("broyden_update: base not positive definite");

    m.base = std::move(base);
    m.s = std::move(s);
    m.y = std::move(y);
    m.phi = phi;
    m.Ls = std::move(Ls);
    m.sLs = dot(m.s, m.Ls);
    if (m.sLs <= 0.0) throw PdLossError("broyden_update: s^T base s <= 0");
    m.ynorm2 = dot(m.y, m.y);

    scaled_copy(1.0 / m.ys, m.y, m.v);
    axpy(-1.0 / m.sLs, m.Ls, m.v);
    ops::add_mults(2);

    double trace_base = m.base.trace();
    double logdet_base = m.base.logdet();
    // Trace of the update, term by term; exact for every phi.
    double yy_over_ys = m.ynorm2 / m.ys;
    double Ls2 = dot(m.Ls, m.Ls);
    double yLs = dot(m.y, m.Ls);
    m.trace_val = trace_base + yy_over_ys + phi * yy_over_ys * (m.sLs / m.ys) -
                  (1.0 - phi) * Ls2 / m.sLs - 2.0 * phi * yLs / m.ys;
    // Log-det recursion; an equality at phi = 0, a lower bound for phi > 0.
    m.logdet_val = logdet_base + std::log(m.ys) - std::log(m.sLs);

    if (phi > 0.0) build_woodbury(m);
    return m;
}

HessianModel broyden_update(SpectralAlgebra base, Vec s, Vec y, double phi) {
    Vec Ls = algebra_matvec(base, s);
    return broyden_update_with_ls(std::move(base), std::move(s), std::move(y), phi, std::move(Ls));
}

Vec model_matvec(const HessianModel& m, const Vec& x) {
    if (x.size() != m.dim()) throw std::invalid_argument("model_matvec: dimension mismatch");
    Vec out = algebra_matvec(m.base, x);
    axpy(-dot(m.Ls, x) / m.sLs, m.Ls, out);
    axpy(dot(m.y, x) / m.ys, m.y, out);
    if (m.phi > 0.0) axpy(m.phi * m.sLs * dot(m.v, x), m.v, out);
    ops::add_mults(3);
    return out;
}

namespace {

#ifndef NDEBUG
// Debug-only residual guard on the inverse application.
void check_solve_residual(const HessianModel& m, const Vec& g, const Vec& u) {
    ops::PauseGuard pause;
    Vec back = model_matvec(m, u);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        num += (back[i] - g[i]) * (back[i] - g[i]);
        den += g[i] * g[i];
    }
    assert(num <= 1e-20 * den + 1e-280);
}
#endif

} // namespace

Vec model_solve(const HessianModel& m, const Vec& g) {
    if (g.size() != m.dim()) throw std::invalid_argument("model_solve: dimension mismatch");
    if (m.phi == 0.0) {
        // H = (I - rho s y^T) base^{-1} (I - rho y s^T) + rho s s^T, rho = 1/ys.
        double sg = dot(m.s, g);
        Vec w = g;
        axpy(-sg / m.ys, m.y, w);
        Vec u = algebra_solve(m.base, w);
        double yu = dot(m.y, u);
        axpy((sg - yu) / m.ys, m.s, u);
        ops::add_mults(3);
#ifndef NDEBUG
        check_solve_residual(m, g, u);
#endif
        return u;
    }
    Vec u = algebra_solve(m.base, g);
    const Vec* D[3] = {&m.Ls, &m.y, &m.v};
    std::array<double, 3> rhs{dot(*D[0], u), dot(*D[1], u), dot(*D[2], u)};
    std::array<double, 3> alpha = lu3_solve(m.cap, m.piv, rhs);
    for (int j = 0; j < 3; ++j) axpy(-alpha[j], m.winv[j], u);
#ifndef NDEBUG
    check_solve_residual(m, g, u);
#endif
    return u;
}

double model_psi(const HessianModel& m) {
    double Ls2 = dot(m.Ls, m.Ls);
    double yLs = dot(m.y, m.Ls);
    double bracket = (m.ynorm2 / m.ys) * (m.sLs / m.ys) - 2.0 * yLs / m.ys;
    return bracket * (m.sLs / Ls2);
}

double sigma_from(double ys, double sLs, double logdet_L, double logdet_B, std::size_t n) {
    double curvature = std::min(ys / sLs, 1.0);
    double det_term = std::exp((logdet_B - logdet_L) / static_cast<double>(n));
    return std::max(curvature, det_term);
}

double sigma_scale(const SpectralAlgebra& base, const Vec& s, const Vec& y, double logdet_B) {
    Vec Ls = algebra_matvec(base, s);
    double sLs = dot(s, Ls);
    double ys = dot(y, s);
    if (ys <= 0.0) throw CurvatureError("sigma_scale: y^T s <= 0");
    if (sLs <= 0.0) throw PdLossError("sigma_scale: s^T L s <= 0");
    return sigma_from(ys, sLs, base.logdet(), logdet_B, base.dim());
}

TraceDetReport trace_det_report(const HessianModel& m) {
    return TraceDetReport{m.trace_val, m.logdet_val};
}

} // namespace lkqn
