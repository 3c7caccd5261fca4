#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "linesearch.hpp"

using namespace lkqn;

namespace {

std::mt19937_64 rng(3);

EvalFn quadratic_1d() {
    return [](const Vec& x, Vec& g) {
        g.resize(1);
        g[0] = x[0];
        return 0.5 * x[0] * x[0];
    };
}

EvalFn quartic_1d() {
    return [](const Vec& x, Vec& g) {
        g.resize(1);
        double t = x[0];
        g[0] = 4.0 * t * t * t;
        return t * t * t * t;
    };
}

} // namespace

TEST_CASE("strong_wolfe on the 1-D quadratic from x = 1") {
    LineSearchParams params;
    Vec x{1.0}, d{-1.0};
    LineSearchResult r = strong_wolfe(quadratic_1d(), x, d, 0.5, -1.0, params);
    REQUIRE(r.status == LsStatus::converged);
    // Contract: both conditions hold at the returned step (lambda = 1 does).
    double f = 0.5 * (1.0 - r.step) * (1.0 - r.step);
    CHECK(f <= 0.5 + params.ftol * r.step * -1.0 + 1e-15);
    CHECK(std::abs((1.0 - r.step) * -1.0) <= params.gtol * 1.0);
    CHECK(r.f_new == doctest::Approx(f));
    CHECK(r.x_new[0] == doctest::Approx(1.0 - r.step));
}

TEST_CASE("strong_wolfe on x^4 from x = 1 satisfies both conditions within 20 evals") {
    LineSearchParams params;
    Vec x{1.0}, d{-1.0};
    LineSearchResult r = strong_wolfe(quartic_1d(), x, d, 1.0, -4.0, params);
    REQUIRE(r.status == LsStatus::converged);
    CHECK(r.n_fev <= 20);
    Vec g(1);
    double f = quartic_1d()(r.x_new, g);
    CHECK(f <= 1.0 + params.ftol * r.step * -4.0 + 1e-15);
    CHECK(std::abs(g[0] * d[0]) <= params.gtol * 4.0 + 1e-15);
}

TEST_CASE("non-descent directions are rejected") {
    LineSearchParams params;
    Vec x{1.0}, d{1.0};
    CHECK_THROWS_AS(strong_wolfe(quadratic_1d(), x, d, 0.5, 1.0, params),
                    std::invalid_argument);
}

TEST_CASE("parameter validation") {
    LineSearchParams p;
    p.ftol = 0.6;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = LineSearchParams{};
    p.gtol = p.ftol / 2.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = LineSearchParams{};
    p.maxfev = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = LineSearchParams{};
    p.stpmin = 1.0;
    p.stpmax = 0.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("maxfev exhaustion returns the best point with status") {
    LineSearchParams params;
    params.gtol = 0.1; // tight curvature so the unit trial cannot satisfy it
    params.maxfev = 1;
    auto parab = [](const Vec& x, Vec& g) {
        g.resize(1);
        double t = x[0] - 0.3;
        g[0] = 2.0 * t;
        return t * t;
    };
    Vec x{1.0}, d{-1.0};
    LineSearchResult r = strong_wolfe(parab, x, d, 0.49, -1.4, params);
    CHECK(r.status == LsStatus::max_fev);
    CHECK(r.n_fev == 1);
    CHECK(r.armijo_ok); // the unit step still decreases enough
    CHECK(r.step == doctest::Approx(1.0));
}

TEST_CASE("non-finite trial values shrink the bracket instead of aborting") {
    LineSearchParams params;
    auto spiky = [](const Vec& x, Vec& g) {
        g.resize(1);
        double t = x[0];
        if (t > 0.5) {
            g[0] = std::numeric_limits<double>::quiet_NaN();
            return std::numeric_limits<double>::infinity();
        }
        g[0] = t;
        return 0.5 * t * t;
    };
    Vec x{0.0}, d{1.0};
    // descending toward +inf region: f(0)=0, df=... use f = 0.5 t^2 - t shape
    auto shifted = [&spiky](const Vec& x2, Vec& g2) {
        double f = spiky(x2, g2);
        if (std::isfinite(f)) {
            f -= x2[0];
            g2[0] -= 1.0;
        }
        return f;
    };
    LineSearchResult r = strong_wolfe(shifted, x, d, 0.0, -1.0, params);
    CHECK(r.status == LsStatus::converged);
    CHECK(r.step <= 0.5);
}

TEST_CASE("exact_quadratic_step") {
    SUBCASE("A = I, g = -d gives lambda = 1") {
        auto id = [](const Vec& v, Vec& out) { out = v; };
        Vec d{1.0, 2.0};
        Vec g{-1.0, -2.0};
        CHECK(exact_quadratic_step(id, g, d) == doctest::Approx(1.0));
    }
    SUBCASE("diag(1,2), g = (1,1), d = -g gives 2/3") {
        auto act = [](const Vec& v, Vec& out) {
            out = v;
            out[1] *= 2.0;
        };
        Vec g{1.0, 1.0}, d{-1.0, -1.0};
        CHECK(exact_quadratic_step(act, g, d) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    }
    SUBCASE("new gradient is orthogonal to the direction") {
        std::uniform_real_distribution<double> u(0.5, 3.0);
        for (int t = 0; t < 20; ++t) {
            std::size_t n = 6;
            Vec diag(n);
            for (double& v : diag) v = u(rng);
            auto act = [&diag](const Vec& v, Vec& out) {
                out.resize(v.size());
                for (std::size_t i = 0; i < v.size(); ++i) out[i] = diag[i] * v[i];
            };
            std::uniform_real_distribution<double> w(-1.0, 1.0);
            Vec g(n), d(n);
            for (std::size_t i = 0; i < n; ++i) {
                g[i] = w(rng);
                d[i] = w(rng);
            }
            if (dot(g, d) >= 0.0) scal(-1.0, d);
            Vec Ad;
            double lam = exact_quadratic_step(act, g, d, &Ad);
            Vec gnew = g;
            axpy(lam, Ad, gnew);
            CHECK(std::abs(dot(gnew, d)) <= 1e-12 * std::abs(dot(g, d)));
        }
    }
    SUBCASE("nonconvex direction is an error") {
        auto neg = [](const Vec& v, Vec& out) {
            out = v;
            scal(-1.0, out);
        };
        Vec g{1.0}, d{-1.0};
        CHECK_THROWS_AS(exact_quadratic_step(neg, g, d), NonConvexDirectionError);
    }
}
