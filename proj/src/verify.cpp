#include "verify.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "algebra.hpp"
#include "hess_model.hpp"
#include "linesearch.hpp"
#include "oracle.hpp"
#include "problems.hpp"
#include "profile.hpp"
#include "solver.hpp"

namespace lkqn {

namespace {

using oracle::DenseMatrix;

Vec random_vec(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vec v(n);
    for (double& x : v) x = u(rng);
    return v;
}

HouseholderStack random_stack(std::mt19937_64& rng, std::size_t n, std::size_t s) {
    HouseholderStack u;
    u.n = n;
    for (std::size_t i = 0; i < s; ++i) {
        Vec h = random_vec(rng, n);
        scal(std::sqrt(2.0) / nrm2(h), h);
        Reflector r;
        r.h = std::move(h);
        u.reflectors.push_back(std::move(r));
    }
    return u;
}

// Structured pd matrix: algebra plus small symmetric rank-one corrections,
// mirrored densely through oracle-only operations.
struct StructuredCase {
    SpectralAlgebra prev;
    std::vector<Vec> xs;
    std::vector<double> coeffs;
    DenseMatrix dense;
};

StructuredCase random_structured(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<std::size_t> nrefl(0, 3), nterms(1, 3);
    std::uniform_real_distribution<double> zval(0.5, 5.0), cval(-1.0, 1.0);
    StructuredCase sc;
    sc.prev.U = random_stack(rng, n, nrefl(rng));
    sc.prev.z.resize(n);
    for (double& z : sc.prev.z) z = zval(rng);

    DenseMatrix Ud = oracle::dense_from_stack(sc.prev.U);
    DenseMatrix D(n);
    for (std::size_t i = 0; i < n; ++i) D.at(i, i) = sc.prev.z[i];
    sc.dense = oracle::dense_matmul(oracle::dense_matmul(Ud, D), oracle::dense_transpose(Ud));

    std::size_t terms = nterms(rng);
    double zmin = 0.5;
    for (std::size_t t = 0; t < terms; ++t) {
        Vec x = random_vec(rng, n);
        double nx2 = dot(x, x);
        // Keep the total perturbation below the smallest algebra eigenvalue.
        double c = cval(rng) * zmin / (4.0 * static_cast<double>(terms) * nx2);
        sc.dense = oracle::dense_add_outer(std::move(sc.dense), c, x, x);
        sc.xs.push_back(std::move(x));
        sc.coeffs.push_back(c);
    }
    return sc;
}

MatVecFn structured_action(const StructuredCase& sc) {
    return [&sc](const Vec& v, Vec& out) {
        out = algebra_matvec(sc.prev, v);
        for (std::size_t t = 0; t < sc.xs.size(); ++t)
            axpy(sc.coeffs[t] * dot(sc.xs[t], v), sc.xs[t], out);
    };
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

void add(std::vector<VerifyCheck>& out, const std::string& name, bool pass,
         const std::string& detail) {
    out.push_back({name, pass, detail});
}

void check_stack_roundtrip(std::vector<VerifyCheck>& out) {
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::size_t n = 5 + static_cast<std::size_t>(rng() % 60);
        HouseholderStack u = random_stack(rng, n, rng() % 4);
        Vec x = random_vec(rng, n);
        Vec y = stack_apply_copy(u, x);
        y = stack_apply_t_copy(u, y);
        Vec diff;
        sub(y, x, diff);
        worst = std::max(worst, nrm2(diff) / std::max(nrm2(x), 1e-300));
    }
    add(out, "householder-stack-roundtrip", worst <= 1e-12, "max rel err " + fmt(worst));
}

void check_stack_mapping(std::vector<VerifyCheck>& out) {
    std::mt19937_64 rng(12);
    double worst = 0.0;
    std::uint64_t worst_ops = 0, budget = 0;
    for (int t = 0; t < 100; ++t) {
        std::size_t n = 10 + static_cast<std::size_t>(rng() % 40);
        std::size_t s = 1 + rng() % 3;
        // Random orthonormal targets via reflections of coordinate columns.
        HouseholderStack q = random_stack(rng, n, 3);
        std::vector<Vec> V;
        for (std::size_t i = 0; i < s; ++i) {
            Vec e(n, 0.0);
            e[i] = 1.0;
            V.push_back(stack_apply_copy(q, e));
        }
        std::uint64_t before = ops::mults();
        HouseholderStack u = stack_fixing_columns(n, V);
        std::uint64_t used = ops::mults() - before;
        budget = static_cast<std::uint64_t>(s * (s - 1) * n + s * (2 * n + 1));
        worst_ops = std::max(worst_ops, used > budget ? used - budget : 0);
        for (std::size_t i = 0; i < s; ++i) {
            Vec e(n, 0.0);
            e[i] = 1.0;
            Vec got = stack_apply_copy(u, e);
            Vec diff;
            sub(got, V[i], diff);
            worst = std::max(worst, nrm2(diff));
        }
    }
    add(out, "stack-fixed-columns", worst <= 1e-11 && worst_ops == 0,
        "max col err " + fmt(worst) + ", mults within budget");
}

void check_arnoldi(std::vector<VerifyCheck>& out) {
    std::mt19937_64 rng(13);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        std::size_t n = 8;
        StructuredCase sc = random_structured(rng, n);
        Vec s = random_vec(rng, n);
        KrylovPair kp;
        if (arnoldi2(structured_action(sc), s, 1e-8, kp) != Arnoldi2Status::ok) continue;
        // Dense congruence oracle for H_2 entries.
        Vec Bv1 = oracle::dense_matvec(sc.dense, kp.v1);
        Vec Bv2 = oracle::dense_matvec(sc.dense, kp.v2);
        worst = std::max(worst, std::abs(dot(kp.v1, Bv1) - kp.h11));
        worst = std::max(worst, std::abs(dot(kp.v2, Bv1) - kp.h21));
        worst = std::max(worst, std::abs(dot(kp.v2, Bv2) - kp.h22));
        worst = std::max(worst, std::abs(dot(kp.v1, kp.v2)));
    }
    add(out, "arnoldi2-dense-congruence", worst <= 1e-10, "max err " + fmt(worst));
}

void check_projection(std::vector<VerifyCheck>& out) {
    std::mt19937_64 rng(14);
    double worst = 0.0;
    for (std::size_t n : {4u, 8u, 16u, 50u}) {
        for (int t = 0; t < 15; ++t) {
            StructuredCase sc = random_structured(rng, n);
            Vec s = random_vec(rng, n);
            KrylovPair kp;
            HouseholderStack U;
            if (arnoldi2(structured_action(sc), s, 1e-8, kp) == Arnoldi2Status::ok)
                U = build_algebra_krylov2(kp);
            else
                U = build_algebra_eigvec(s);
            std::vector<RankOneTerm> terms;
            for (std::size_t q = 0; q < sc.xs.size(); ++q)
                terms.push_back({sc.coeffs[q], &sc.xs[q], nullptr});
            SpectralAlgebra fast = project_update(sc.prev, terms, U);
            std::vector<double> zd =
                oracle::dense_projection(sc.dense, oracle::dense_from_stack(fast.U));
            double scale = 1.0;
            for (double z : zd) scale = std::max(scale, std::abs(z));
            for (std::size_t i = 0; i < n; ++i)
                worst = std::max(worst, std::abs(fast.z[i] - zd[i]) / scale);
        }
    }
    add(out, "fast-projection-vs-dense", worst <= 1e-10, "max rel err " + fmt(worst));
}

void check_direction_preservation(std::vector<VerifyCheck>& out) {
    std::mt19937_64 rng(21);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        std::size_t n = 6 + rng() % 20;
        StructuredCase sc = random_structured(rng, n);
        Vec s = random_vec(rng, n);
        KrylovPair kp;
        if (arnoldi2(structured_action(sc), s, 1e-8, kp) != Arnoldi2Status::ok) continue;
        HouseholderStack U = build_algebra_krylov2(kp);
        std::vector<RankOneTerm> terms;
        for (std::size_t q = 0; q < sc.xs.size(); ++q)
            terms.push_back({sc.coeffs[q], &sc.xs[q], nullptr});
        SpectralAlgebra L = project_update(sc.prev, terms, std::move(U));
        Vec Bs = oracle::dense_matvec(sc.dense, s);
        Vec Ls = algebra_matvec(L, s);
        Vec diff;
        sub(Ls, Bs, diff);
        worst = std::max(worst, nrm2(diff) / std::max(nrm2(Bs), 1e-300));
    }
    add(out, "direction-preservation", worst <= 1e-10, "max rel residual " + fmt(worst));
}

void check_spectral_properties(std::vector<VerifyCheck>& out) {
    std::mt19937_64 rng(15);
    double worst_tr = 0.0, worst_det = 0.0, worst_interlace = 0.0;
    for (int t = 0; t < 40; ++t) {
        std::size_t n = 6 + rng() % 10;
        StructuredCase sc = random_structured(rng, n);
        HouseholderStack U = random_stack(rng, n, 1 + rng() % 3);
        SpectralAlgebra L = project_action(structured_action(sc), U);
        double tr_dense = 0.0;
        for (std::size_t i = 0; i < n; ++i) tr_dense += sc.dense.at(i, i);
        worst_tr = std::max(worst_tr, std::abs(L.trace() - tr_dense) / std::abs(tr_dense));
        double ld_dense = oracle::dense_logdet_pd(sc.dense);
        worst_det = std::max(worst_det, ld_dense - L.logdet()); // must be <= ~0
        std::vector<double> ev = oracle::dense_sym_eigenvalues(sc.dense);
        worst_interlace = std::max(worst_interlace, ev.front() - L.min_eig());
        worst_interlace = std::max(worst_interlace, L.max_eig() - ev.back());
    }
    bool ok = worst_tr <= 1e-9 && worst_det <= 1e-10 && worst_interlace <= 1e-10;
    add(out, "projection-trace-det-interlacing", ok,
        "trace " + fmt(worst_tr) + ", det slack " + fmt(worst_det) + ", interlace " +
            fmt(worst_interlace));
}

void check_phi_update(std::vector<VerifyCheck>& out) {
    std::mt19937_64 rng(16);
    double worst = 0.0;
    for (double phi : {0.0, 0.5}) {
        for (int t = 0; t < 20; ++t) {
            std::size_t n = 6;
            SpectralAlgebra base;
            base.U = random_stack(rng, n, 2);
            base.z = random_vec(rng, n, 0.5, 4.0);
            Vec s = random_vec(rng, n);
            Vec y = random_vec(rng, n);
            if (dot(y, s) <= 0.1) continue;
            HessianModel m = broyden_update(base, s, y, phi);

            DenseMatrix Ud = oracle::dense_from_stack(base.U);
            DenseMatrix D(n);
            for (std::size_t i = 0; i < n; ++i) D.at(i, i) = base.z[i];
            DenseMatrix Bt =
                oracle::dense_matmul(oracle::dense_matmul(Ud, D), oracle::dense_transpose(Ud));
            DenseMatrix Bd = oracle::dense_phi_update(Bt, s, y, phi);
            Vec probe = random_vec(rng, n);
            Vec fast = model_matvec(m, probe);
            Vec dense = oracle::dense_matvec(Bd, probe);
            Vec diff;
            sub(fast, dense, diff);
            worst = std::max(worst, nrm2(diff) / std::max(nrm2(dense), 1e-300));

            // Trace and (phi = 0) log-det recursions against the dense oracle.
            double tr_dense = 0.0;
            for (std::size_t i = 0; i < n; ++i) tr_dense += Bd.at(i, i);
            worst = std::max(worst, std::abs(m.trace_val - tr_dense) / std::abs(tr_dense));
            double ld_dense = oracle::dense_logdet_pd(Bd);
            if (phi == 0.0)
                worst = std::max(worst, std::abs(m.logdet_val - ld_dense));
            else if (m.logdet_val > ld_dense + 1e-10)
                worst = std::max(worst, m.logdet_val - ld_dense);

            // Inverse application.
            Vec sol = model_solve(m, probe);
            Vec back = model_matvec(m, sol);
            sub(back, probe, diff);
            worst = std::max(worst, nrm2(diff) / std::max(nrm2(probe), 1e-300));
        }
    }
    add(out, "broyden-update-vs-dense", worst <= 1e-10, "max rel err " + fmt(worst));
}

void check_sigma(std::vector<VerifyCheck>& out) {
    std::mt19937_64 rng(17);
    double worst = 0.0;
    bool range_ok = true;
    for (int t = 0; t < 30; ++t) {
        std::size_t n = 8;
        SpectralAlgebra L;
        L.U = random_stack(rng, n, 2);
        L.z = random_vec(rng, n, 0.5, 4.0);
        Vec s = random_vec(rng, n);
        Vec y = random_vec(rng, n);
        if (dot(y, s) <= 0.1) continue;
        double logdet_B = L.logdet() - std::abs(random_vec(rng, 1)[0]); // det B <= det L
        double sigma = sigma_scale(L, s, y, logdet_B);
        if (!(sigma > 0.0 && sigma <= 1.0)) range_ok = false;
        // det(sigma L) >= det B in log space.
        double lhs = static_cast<double>(n) * std::log(sigma) + L.logdet();
        worst = std::max(worst, logdet_B - lhs);
    }
    add(out, "sigma-scaling-determinant", range_ok && worst <= 1e-10,
        "max det violation " + fmt(worst));
}

void check_wolfe(std::vector<VerifyCheck>& out) {
    // Quartic slope test: conditions must hold at the accepted step.
    auto eval = [](const Vec& x, Vec& g) {
        g.resize(1);
        double t = x[0];
        g[0] = 4.0 * t * t * t;
        return t * t * t * t;
    };
    LineSearchParams params;
    Vec x{1.0}, d{-1.0};
    Vec g0{4.0};
    LineSearchResult r = strong_wolfe(eval, x, d, 1.0, -4.0, params);
    bool ok = r.status == LsStatus::converged && r.n_fev <= 20;
    if (ok) {
        double armijo = 1.0 + params.ftol * r.step * -4.0;
        Vec gg(1);
        double f = eval(r.x_new, gg);
        ok = f <= armijo && std::abs(gg[0] * d[0]) <= params.gtol * 4.0;
    }
    add(out, "strong-wolfe-conditions", ok, r.status == LsStatus::converged
                                                ? "step " + fmt(r.step)
                                                : "line search failed");
}

void check_quadratic_termination(std::vector<VerifyCheck>& out) {
    std::size_t n = 50;
    Problem q = make_quadratic(n, 10.0, 22);
    SolverConfig cfg;
    cfg.method = Method::lkqn_qt;
    cfg.exact_ls = true;
    cfg.record_iterates = true;
    cfg.rel_func_tol = 0.0;
    Vec g0(n);
    double f0;
    f0 = q.eval(q.x0, g0);
    (void)f0;
    cfg.stop_tol = 1e-10 * nrm2(g0) / static_cast<double>(n);
    RunResult r = run_solver(q, q.x0, cfg);
    bool ok = r.status == RunStatus::converged &&
              r.iterations.size() <= n &&
              r.gnorm_final <= 1e-10 * nrm2(g0);

    // Coincidence with preconditioned CG.
    auto act = [&q](const Vec& v, Vec& outv) { q.quad_action(v, outv); };
    auto id = [](const Vec& v, Vec& outv) { outv = v; };
    std::vector<Vec> cg = oracle::cg_reference(act, q.quad_b, q.x0, id, n, 1e-12);
    double worst = 0.0;
    for (std::size_t k = 0; k < std::min(cg.size(), r.iterates.size()); ++k) {
        Vec diff;
        sub(cg[k], r.iterates[k], diff);
        worst = std::max(worst, nrm2(diff) / std::max(1.0, nrm2(cg[k])));
    }
    add(out, "quadratic-termination-cg-coincidence", ok && worst <= 1e-6,
        "iters " + std::to_string(r.iterations.size()) + ", max dev " + fmt(worst));
}

void check_profile(std::vector<VerifyCheck>& out) {
    std::vector<BenchRecord> recs(4);
    recs[0] = {"p1", "s1", RunStatus::converged, 1, 1, 1.0, 0, 0};
    recs[1] = {"p1", "s2", RunStatus::converged, 2, 2, 2.0, 0, 0};
    recs[2] = {"p2", "s1", RunStatus::max_iters, 7, 7, 7.0, 0, 0};
    recs[3] = {"p2", "s2", RunStatus::converged, 1, 1, 1.0, 0, 0};
    ProfileResult pr = performance_profile(recs, ProfileMetric::iters);
    bool ok = pr.curves.size() == 2;
    if (ok) {
        const auto& c1 = pr.curves[0].points;
        const auto& c2 = pr.curves[1].points;
        ok = c1.size() == 1 && c1[0] == std::make_pair(1.0, 0.5) && c2.size() == 2 &&
             c2[0] == std::make_pair(1.0, 0.5) && c2[1] == std::make_pair(2.0, 1.0);
    }
    add(out, "performance-profile-example", ok, ok ? "matches enumeration" : "mismatch");
}

void check_gradients(std::vector<VerifyCheck>& out) {
    double worst = 0.0;
    std::string worst_name = "-";
    for (const auto& name : named_problem_list()) {
        std::size_t n = 12;
        Problem p = make_named_problem(name, n);
        double err = gradient_check(p, 33, 5);
        if (err > worst) {
            worst = err;
            worst_name = name;
        }
    }
    {
        Problem p = make_quadratic(10, 50.0, 34);
        worst = std::max(worst, gradient_check(p, 35, 5));
        DataMatrix A = make_synthetic_lowrank(8, 6, 2, 0.01, 36);
        Problem lr = make_lowrank_problem(A, 2, 37);
        worst = std::max(worst, gradient_check(lr, 38, 5));
    }
    add(out, "problem-gradients-fd", worst <= 1e-5,
        "max rel err " + fmt(worst) + " (" + worst_name + ")");
}

void check_idx(std::vector<VerifyCheck>& out) {
    std::mt19937_64 rng(39);
    IdxTensor t;
    t.dims = {3, 2, 2};
    t.bytes.resize(12);
    for (auto& b : t.bytes) b = static_cast<std::uint8_t>(rng() % 256);
    std::stringstream ss;
    idx_write(ss, t);
    IdxTensor back = idx_read(ss);
    bool ok = back.dims == t.dims && back.bytes == t.bytes;

    std::stringstream bad("\xff\x00\x08\x03 junk", std::ios::in | std::ios::binary);
    bool threw = false;
    try {
        idx_read(bad);
    } catch (const IdxParseError&) {
        threw = true;
    }
    add(out, "idx-roundtrip-and-errors", ok && threw,
        ok ? "bit-exact round trip" : "round trip mismatch");
}

} // namespace

std::vector<VerifyCheck> run_verification() {
    std::vector<VerifyCheck> out;
    check_stack_roundtrip(out);
    check_stack_mapping(out);
    check_arnoldi(out);
    check_projection(out);
    check_direction_preservation(out);
    check_spectral_properties(out);
    check_phi_update(out);
    check_sigma(out);
    check_wolfe(out);
    check_quadratic_termination(out);
    check_profile(out);
    check_gradients(out);
    check_idx(out);
    return out;
}

} // namespace lkqn
