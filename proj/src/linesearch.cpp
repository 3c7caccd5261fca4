#include "linesearch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lkqn {

void LineSearchParams::validate() const {
    if (!(ftol > 0.0 && ftol < 0.5))
        throw std::invalid_argument("LineSearchParams: require 0 < ftol < 1/2");
    if (!(gtol > ftol && gtol < 1.0))
        throw std::invalid_argument("LineSearchParams: require ftol < gtol < 1");
    if (!(stpmin < stpmax) || !(stpmin > 0.0))
        throw std::invalid_argument("LineSearchParams: require 0 < stpmin < stpmax");
    if (maxfev < 1) throw std::invalid_argument("LineSearchParams: require maxfev >= 1");
    if (!(xtol >= 0.0)) throw std::invalid_argument("LineSearchParams: require xtol >= 0");
}

namespace {

struct Point {
    double a = 0.0;  // step
    double f = 0.0;  // function value
    double df = 0.0; // directional derivative g(x+ad)^T d
    bool finite = true;
};

// Minimizer of the cubic interpolant of (a, fa, dfa) and (b, fb, dfb);
// falls back to the quadratic through (a, fa, dfa, fb), then to bisection.
double interpolate(const Point& lo, const Point& hi) {
    double a = lo.a, b = hi.a;
    if (lo.finite && hi.finite) {
        double d1 = lo.df + hi.df - 3.0 * (lo.f - hi.f) / (a - b);
        double disc = d1 * d1 - lo.df * hi.df;
        if (disc >= 0.0) {
            double d2 = std::sqrt(disc) * (b > a ? 1.0 : -1.0);
            double denom = hi.df - lo.df + 2.0 * d2;
            if (denom != 0.0) {
                double cand = b - (b - a) * (hi.df + d2 - d1) / denom;
                if (std::isfinite(cand)) return cand;
            }
        }
        double quad_denom = 2.0 * (hi.f - lo.f - lo.df * (b - a));
        if (quad_denom != 0.0) {
            double cand = a - lo.df * (b - a) * (b - a) / quad_denom;
            if (std::isfinite(cand)) return cand;
        }
    }
    return 0.5 * (a + b);
}

} // namespace

LineSearchResult strong_wolfe(const EvalFn& eval, const Vec& x, const Vec& d,
                              double f0, double g0d, const LineSearchParams& params) {
    params.validate();
    if (!(g0d < 0.0))
        throw std::invalid_argument("strong_wolfe: d is not a descent direction");

    const std::size_t n = x.size();
    LineSearchResult res;
    res.x_new.resize(n);
    res.g_new.resize(n);

    Vec xt(n), gt(n);
    int nfev = 0;

    // Best point seen so far: prefer Armijo points by lowest f, else lowest f.
    double best_a = 0.0, best_f = f0;
    bool best_armijo = false;
    Vec best_x = x, best_g;

    auto armijo = [&](double a, double f) { return f <= f0 + params.ftol * a * g0d; };
    auto curvature = [&](double df) { return std::abs(df) <= params.gtol * std::abs(g0d); };

    auto probe = [&](double a) -> Point {
        xt = x;
        axpy(a, d, xt);
        double f;
        {
            f = eval(xt, gt);
        }
        ++nfev;
        Point p;
        p.a = a;
        p.finite = std::isfinite(f) && all_finite(gt);
        p.f = p.finite ? f : std::numeric_limits<double>::infinity();
        p.df = p.finite ? dot(gt, d) : 0.0;
        if (p.finite) {
            bool arm = armijo(a, f);
            if ((arm && (!best_armijo || f < best_f)) || (!best_armijo && f < best_f)) {
                best_a = a;
                best_f = f;
                best_armijo = arm;
                best_x = xt;
                best_g = gt;
            }
        }
        return p;
    };

    auto finish = [&](const Point& p, LsStatus status) {
        res.step = p.a;
        res.f_new = p.f;
        res.x_new = xt;
        res.g_new = gt;
        res.n_fev = nfev;
        res.status = status;
        res.armijo_ok = armijo(p.a, p.f);
        return res;
    };
    auto finish_best = [&](LsStatus status) {
        res.step = best_a;
        res.f_new = best_f;
        res.x_new = best_x;
        res.g_new = best_g.empty() ? Vec(n, 0.0) : best_g;
        res.n_fev = nfev;
        res.status = status;
        res.armijo_ok = best_armijo;
        return res;
    };

    // Zoom phase: lo satisfies Armijo with the lowest f found; hi brackets.
    auto zoom = [&](Point lo, Point hi) -> LineSearchResult {
        for (;;) {
            if (nfev >= params.maxfev) return finish_best(LsStatus::max_fev);
            double width = std::abs(hi.a - lo.a);
            if (width <= params.xtol * std::max(1.0, std::abs(lo.a)))
                return finish_best(LsStatus::degenerate_interval);
            double a = interpolate(lo, hi);
            // Safeguard: keep strictly interior.
            double lo_a = std::min(lo.a, hi.a), hi_a = std::max(lo.a, hi.a);
            double margin = 0.1 * width;
            a = std::clamp(a, lo_a + margin, hi_a - margin);
            Point p = probe(a);
            if (!p.finite || !armijo(a, p.f) || p.f >= lo.f) {
                hi = p;
            } else {
                if (curvature(p.df)) return finish(p, LsStatus::converged);
                if (p.df * (hi.a - lo.a) >= 0.0) hi = lo;
                lo = p;
            }
        }
    };

    // Bracketing phase.
    Point prev;
    prev.a = 0.0;
    prev.f = f0;
    prev.df = g0d;
    double a = std::clamp(1.0, params.stpmin, params.stpmax);
    for (;;) {
        Point p = probe(a);
        if (!p.finite || !armijo(a, p.f) || (p.f >= prev.f && prev.a > 0.0))
            return zoom(prev, p);
        if (curvature(p.df)) return finish(p, LsStatus::converged);
        if (p.df >= 0.0) return zoom(p, prev);
        if (a >= params.stpmax) return finish_best(LsStatus::max_fev);
        if (nfev >= params.maxfev) return finish_best(LsStatus::max_fev);
        prev = p;
        a = std::min(2.0 * a, params.stpmax);
    }
}

double exact_quadratic_step(const std::function<void(const Vec&, Vec&)>& A_action,
                            const Vec& g, const Vec& d, Vec* Ad_out) {
    Vec Ad(d.size());
    A_action(d, Ad);
    double dAd = dot(d, Ad);
    if (dAd <= 0.0)
        throw NonConvexDirectionError("exact_quadratic_step: d^T A d <= 0");
    double gd = dot(g, d);
    if (Ad_out) *Ad_out = std::move(Ad);
    ops::add_mults(1);
    return -gd / dAd;
}

} // namespace lkqn
