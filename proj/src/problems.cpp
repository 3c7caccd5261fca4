#include "problems.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

#include "householder.hpp"

namespace lkqn {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

Problem make_tridia(std::size_t n) {
    require(n >= 1, "TRIDIA: need n >= 1");
    constexpr double alpha = 2.0, beta = 1.0, gamma = 1.0, delta = 1.0;
    Problem p;
    p.name = "TRIDIA";
    p.n = n;
    p.x0.assign(n, 1.0);
    p.f_star = 0.0;
    p.eval = [n](const Vec& x, Vec& g) {
        g.assign(n, 0.0);
        double t = delta * x[0] - 1.0;
        double f = gamma * t * t;
        g[0] = 2.0 * gamma * delta * t;
        for (std::size_t i = 1; i < n; ++i) {
            double w = static_cast<double>(i + 1);
            double r = alpha * x[i] - beta * x[i - 1];
            f += w * r * r;
            g[i] += 2.0 * w * alpha * r;
            g[i - 1] -= 2.0 * w * beta * r;
        }
        return f;
    };
    p.quad_action = [n](const Vec& x, Vec& out) {
        out.assign(n, 0.0);
        out[0] = 2.0 * gamma * delta * delta * x[0];
        for (std::size_t i = 1; i < n; ++i) {
            double w = static_cast<double>(i + 1);
            double r = alpha * x[i] - beta * x[i - 1];
            out[i] += 2.0 * w * alpha * r;
            out[i - 1] -= 2.0 * w * beta * r;
        }
    };
    p.quad_b.assign(n, 0.0);
    p.quad_b[0] = 2.0 * gamma * delta;
    return p;
}

Problem make_genrose(std::size_t n) {
    require(n >= 2, "GENROSE: need n >= 2");
    Problem p;
    p.name = "GENROSE";
    p.n = n;
    p.x0.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        p.x0[i] = static_cast<double>(i + 1) / static_cast<double>(n + 1);
    p.f_star = 1.0;
    p.eval = [n](const Vec& x, Vec& g) {
        g.assign(n, 0.0);
        double f = 1.0;
        for (std::size_t i = 1; i < n; ++i) {
            double t = x[i] - x[i - 1] * x[i - 1];
            double u = x[i] - 1.0;
            f += 100.0 * t * t + u * u;
            g[i] += 200.0 * t + 2.0 * u;
            g[i - 1] -= 400.0 * x[i - 1] * t;
        }
        return f;
    };
    return p;
}

Problem make_chainwoo(std::size_t n) {
    require(n >= 4 && n % 2 == 0, "CHAINWOO: need even n >= 4");
    Problem p;
    p.name = "CHAINWOO";
    p.n = n;
    p.x0.assign(n, 0.0);
    p.x0[0] = -3.0;
    p.x0[1] = -1.0;
    p.x0[2] = -3.0;
    p.x0[3] = -1.0;
    for (std::size_t i = 4; i < n; ++i) p.x0[i] = (i % 2 == 0) ? -2.0 : 0.0;
    p.f_star = 1.0;
    p.eval = [n](const Vec& x, Vec& g) {
        g.assign(n, 0.0);
        double f = 1.0;
        for (std::size_t j = 0; 2 * j + 3 < n; ++j) {
            std::size_t a = 2 * j, b = 2 * j + 1, c = 2 * j + 2, d = 2 * j + 3;
            double t1 = x[b] - x[a] * x[a];
            double t2 = 1.0 - x[a];
            double t3 = x[d] - x[c] * x[c];
            double t4 = 1.0 - x[c];
            double t5 = x[b] + x[d] - 2.0;
            double t6 = x[b] - x[d];
            f += 100.0 * t1 * t1 + t2 * t2 + 90.0 * t3 * t3 + t4 * t4 +
                 10.0 * t5 * t5 + 0.1 * t6 * t6;
            g[b] += 200.0 * t1;
            g[a] += -400.0 * x[a] * t1 - 2.0 * t2;
            g[d] += 180.0 * t3;
            g[c] += -360.0 * x[c] * t3 - 2.0 * t4;
            g[b] += 20.0 * t5;
            g[d] += 20.0 * t5;
            g[b] += 0.2 * t6;
            g[d] -= 0.2 * t6;
        }
        return f;
    };
    return p;
}

Problem make_testquad(std::size_t n) {
    require(n >= 2, "TESTQUAD: need n >= 2");
    constexpr double kappa = 1e4;
    Problem p;
    p.name = "TESTQUAD";
    p.n = n;
    p.x0.assign(n, 1.0);
    p.f_star = 0.0;
    auto lam = [n](std::size_t i) {
        return std::pow(kappa, static_cast<double>(i) / static_cast<double>(n - 1));
    };
    p.eval = [n, lam](const Vec& x, Vec& g) {
        g.resize(n);
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double l = lam(i);
            f += 0.5 * l * x[i] * x[i];
            g[i] = l * x[i];
        }
        return f;
    };
    p.quad_action = [n, lam](const Vec& x, Vec& out) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = lam(i) * x[i];
    };
    p.quad_b.assign(n, 0.0);
    return p;
}

Problem make_broydn7d(std::size_t n) {
    require(n >= 4 && n % 2 == 0, "BROYDN7D: need even n >= 4");
    Problem p;
    p.name = "BROYDN7D";
    p.n = n;
    p.x0.assign(n, 1.0);
    p.eval = [n](const Vec& x, Vec& g) {
        g.assign(n, 0.0);
        double f = 0.0;
        auto pw = [](double t) { return std::pow(std::abs(t), 7.0 / 3.0); };
        auto dpw = [](double t) {
            return (7.0 / 3.0) * std::pow(std::abs(t), 4.0 / 3.0) * (t >= 0.0 ? 1.0 : -1.0);
        };
        for (std::size_t i = 0; i < n; ++i) {
            double t = (3.0 - 2.0 * x[i]) * x[i] + 1.0;
            if (i > 0) t -= x[i - 1];
            if (i + 1 < n) t -= 2.0 * x[i + 1];
            f += pw(t);
            double w = dpw(t);
            g[i] += w * (3.0 - 4.0 * x[i]);
            if (i > 0) g[i - 1] -= w;
            if (i + 1 < n) g[i + 1] -= 2.0 * w;
        }
        for (std::size_t i = 0; i < n / 2; ++i) {
            double u = x[i] + x[i + n / 2];
            f += pw(u);
            double w = dpw(u);
            g[i] += w;
            g[i + n / 2] += w;
        }
        return f;
    };
    return p;
}

Problem make_genhumps(std::size_t n) {
    require(n >= 2, "GENHUMPS: need n >= 2");
    constexpr double zeta = 2.0;
    Problem p;
    p.name = "GENHUMPS";
    p.n = n;
    p.x0.assign(n, 506.2);
    p.x0[0] = -506.0;
    p.f_star = 0.0;
    p.eval = [n](const Vec& x, Vec& g) {
        g.assign(n, 0.0);
        double f = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            double si = std::sin(zeta * x[i]), ci = std::cos(zeta * x[i]);
            double sj = std::sin(zeta * x[i + 1]), cj = std::cos(zeta * x[i + 1]);
            f += si * si * sj * sj + 0.05 * (x[i] * x[i] + x[i + 1] * x[i + 1]);
            g[i] += 2.0 * zeta * si * ci * sj * sj + 0.1 * x[i];
            g[i + 1] += 2.0 * zeta * sj * cj * si * si + 0.1 * x[i + 1];
        }
        return f;
    };
    return p;
}

Problem make_noncvxu2(std::size_t n) {
    require(n >= 2, "NONCVXU2: need n >= 2");
    Problem p;
    p.name = "NONCVXU2";
    p.n = n;
    p.x0.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.x0[i] = static_cast<double>(i + 1);
    p.eval = [n](const Vec& x, Vec& g) {
        g.assign(n, 0.0);
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            // 1-based recurrences mod(3i-2, n)+1 and mod(7i-3, n)+1.
            std::size_t j = (3 * (i + 1) - 2) % n;
            std::size_t k = (7 * (i + 1) - 3) % n;
            double t = x[i] + x[j] + x[k];
            f += t * t + 4.0 * std::cos(t);
            double w = 2.0 * t - 4.0 * std::sin(t);
            g[i] += w;
            g[j] += w;
            g[k] += w;
        }
        return f;
    };
    return p;
}

Problem make_modbeale(std::size_t n) {
    require(n >= 2 && n % 2 == 0, "MODBEALE: need even n >= 2");
    constexpr double link = 6.0 / 50.0;
    Problem p;
    p.name = "MODBEALE";
    p.n = n;
    p.x0.assign(n, 1.0);
    p.eval = [n](const Vec& x, Vec& g) {
        g.assign(n, 0.0);
        double f = 0.0;
        for (std::size_t j = 0; 2 * j + 1 < n; ++j) {
            double a = x[2 * j], b = x[2 * j + 1];
            double b2 = b * b, b3 = b2 * b;
            double r1 = 1.5 - a * (1.0 - b);
            double r2 = 2.25 - a * (1.0 - b2);
            double r3 = 2.625 - a * (1.0 - b3);
            f += r1 * r1 + r2 * r2 + r3 * r3;
            g[2 * j] += -2.0 * (r1 * (1.0 - b) + r2 * (1.0 - b2) + r3 * (1.0 - b3));
            g[2 * j + 1] += 2.0 * a * (r1 + 2.0 * b * r2 + 3.0 * b2 * r3);
            if (2 * j + 2 < n) {
                double t = link * (x[2 * j + 1] + x[2 * j + 2]);
                f += t * t;
                g[2 * j + 1] += 2.0 * link * t;
                g[2 * j + 2] += 2.0 * link * t;
            }
        }
        return f;
    };
    return p;
}

} // namespace

std::vector<std::string> named_problem_list() {
    return {"TRIDIA", "GENROSE", "CHAINWOO", "TESTQUAD", "BROYDN7D", "GENHUMPS", "NONCVXU2", "MODBEALE"};
}

Problem make_named_problem(const std::string& name, std::size_t n) {
    std::string u = name;
    std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
    if (u == "TRIDIA") return make_tridia(n);
    if (u == "GENROSE") return make_genrose(n);
    if (u == "CHAINWOO") return make_chainwoo(n);
    if (u == "TESTQUAD") return make_testquad(n);
    if (u == "BROYDN7D") return make_broydn7d(n);
    if (u == "GENHUMPS") return make_genhumps(n);
    if (u == "NONCVXU2") return make_noncvxu2(n);
    if (u == "MODBEALE") return make_modbeale(n);
    throw std::invalid_argument("make_named_problem: unknown problem '" + name + "'");
}

Problem make_quadratic(std::size_t n, double cond, std::uint64_t seed) {
    require(n >= 1, "make_quadratic: need n >= 1");
    require(cond >= 1.0, "make_quadratic: need cond >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    auto spectrum = std::make_shared<Vec>(n);
    (*spectrum)[0] = 1.0;
    if (n > 1) (*spectrum)[n - 1] = cond;
    for (std::size_t i = 1; i + 1 < n; ++i)
        (*spectrum)[i] = std::exp(unif(rng) * std::log(cond));

    auto stack = std::make_shared<HouseholderStack>();
    stack->n = n;
    for (int r = 0; r < 3 && n > 1; ++r) {
        Vec h(n);
        for (double& v : h) v = normal(rng);
        double nh = nrm2(h);
        scal(std::sqrt(2.0) / nh, h);
        Reflector refl;
        refl.h = std::move(h);
        stack->reflectors.push_back(std::move(refl));
    }

    auto action = [spectrum, stack](const Vec& x, Vec& out) {
        out = x;
        stack_apply_t(*stack, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= (*spectrum)[i];
        stack_apply(*stack, out);
    };

    Vec x_star(n);
    for (double& v : x_star) v = normal(rng);
    Vec b(n);
    action(x_star, b);

    Problem p;
    p.name = "QUAD";
    p.n = n;
    p.x0.assign(n, 0.0);
    p.f_star = -0.5 * dot(b, x_star);
    auto bp = std::make_shared<Vec>(std::move(b));
    p.eval = [action, bp, n](const Vec& x, Vec& g) {
        Vec ax(n);
        action(x, ax);
        g.resize(n);
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            f += 0.5 * x[i] * ax[i] - (*bp)[i] * x[i];
            g[i] = ax[i] - (*bp)[i];
        }
        return f;
    };
    p.quad_action = action;
    p.quad_b = *bp;
    return p;
}

DataMatrix make_synthetic_lowrank(std::size_t m, std::size_t n, std::size_t rank,
                                  double noise, std::uint64_t seed) {
    require(rank >= 1 && rank <= std::min(m, n), "make_synthetic_lowrank: bad rank");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> P(m * rank), Q(n * rank);
    double scale = 1.0 / std::sqrt(static_cast<double>(rank));
    for (double& v : P) v = normal(rng) * scale;
    for (double& v : Q) v = normal(rng) * scale;
    DataMatrix A;
    A.rows = m;
    A.cols = n;
    A.provenance = DataMatrix::Provenance::synthetic;
    A.a.resize(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < rank; ++l) acc += P[i * rank + l] * Q[j * rank + l];
            A.a[i * n + j] = acc + noise * unif(rng);
        }
    return A;
}

Problem make_lowrank_problem(DataMatrix A, std::size_t rank, std::uint64_t seed) {
    const std::size_t m = A.rows, n = A.cols, k = rank;
    require(k >= 1 && k <= std::min(m, n), "make_lowrank_problem: rank out of range");
    for (double v : A.a)
        require(std::isfinite(v), "make_lowrank_problem: data must be finite");

    Problem p;
    p.name = "LOWRANK";
    p.n = (m + n) * k;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    p.x0.resize(p.n);
    for (double& v : p.x0) v = unif(rng);

    auto data = std::make_shared<DataMatrix>(std::move(A));
    p.eval = [data, m, n, k](const Vec& x, Vec& g) {
        // x = [vec(U); vec(V)], both row-major; R = A - U V^T.
        const double* U = x.data();
        const double* V = x.data() + m * k;
        std::vector<double> R(m * n);
        double f = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = data->a[i * n + j];
                for (std::size_t l = 0; l < k; ++l) acc -= U[i * k + l] * V[j * k + l];
                R[i * n + j] = acc;
                f += acc * acc;
            }
        g.assign((m + n) * k, 0.0);
        double* gU = g.data();
        double* gV = g.data() + m * k;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double r = R[i * n + j];
                for (std::size_t l = 0; l < k; ++l) {
                    gU[i * k + l] -= 2.0 * r * V[j * k + l];
                    gV[j * k + l] -= 2.0 * r * U[i * k + l];
                }
            }
        return f;
    };
    return p;
}

double gradient_check(const Problem& p, std::uint64_t seed, int points) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    double worst = 0.0;
    Vec x(p.n), g(p.n), gfd(p.n), xp(p.n), gscratch(p.n);
    for (int t = 0; t < points; ++t) {
        for (std::size_t i = 0; i < p.n; ++i)
            x[i] = p.x0[i] * (1.0 + 0.1 * unif(rng)) + 0.5 * unif(rng);
        p.eval(x, g);
        for (std::size_t i = 0; i < p.n; ++i) {
            double h = 1e-6 * (1.0 + std::abs(x[i]));
            xp = x;
            xp[i] = x[i] + h;
            double fp = p.eval(xp, gscratch);
            xp[i] = x[i] - h;
            double fm = p.eval(xp, gscratch);
            gfd[i] = (fp - fm) / (2.0 * h);
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < p.n; ++i) {
            num += (g[i] - gfd[i]) * (g[i] - gfd[i]);
            den += g[i] * g[i];
        }
        worst = std::max(worst, std::sqrt(num) / std::max(1.0, std::sqrt(den)));
    }
    return worst;
}

} // namespace lkqn
