#include "lkqn/lkqn.h"

#include <cstring>
#include <exception>
#include <string>

#include "problems.hpp"
#include "profile.hpp"
#include "solver.hpp"
#include "verify.hpp"

struct lkqn_problem {
    lkqn::Problem impl;
};

struct lkqn_result {
    lkqn::RunResult impl;
};

struct lkqn_profile {
    lkqn::ProfileResult impl;
};

namespace {

thread_local std::string g_last_error;

lkqn_status fail(lkqn_status code, const char* msg) {
    g_last_error = msg;
    return code;
}

template <typename Fn>
lkqn_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        return fail(LKQN_ERR_INVALID_ARG, e.what());
    } catch (const lkqn::IdxParseError& e) {
        return fail(LKQN_ERR_PARSE, e.what());
    } catch (const std::bad_alloc&) {
        return fail(LKQN_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(LKQN_ERR_NUMERIC, e.what());
    } catch (...) {
        return fail(LKQN_ERR_INTERNAL, "unknown error");
    }
}

lkqn::SolverConfig to_config(const lkqn_options& o) {
    lkqn::SolverConfig cfg;
    switch (o.method) {
        case LKQN_METHOD_LKQN: cfg.method = lkqn::Method::lkqn; break;
        case LKQN_METHOD_LKQN_QT: cfg.method = lkqn::Method::lkqn_qt; break;
        case LKQN_METHOD_BFGS_DENSE: cfg.method = lkqn::Method::bfgs_dense; break;
        case LKQN_METHOD_LBFGS: cfg.method = lkqn::Method::lbfgs; break;
        case LKQN_METHOD_BROYDEN_GENERIC: cfg.method = lkqn::Method::broyden_generic; break;
        default: throw std::invalid_argument("lkqn_options: bad method");
    }
    cfg.phi = o.phi;
    cfg.scaled = o.scaled != 0;
    cfg.variant = o.variant == LKQN_VARIANT_NON_SECANT ? lkqn::BroydenVariant::non_secant
                                                       : lkqn::BroydenVariant::secant;
    cfg.toll_rel = o.toll_rel;
    cfg.stop_tol = o.stop_tol;
    cfg.max_iters = o.max_iters;
    cfg.max_fevals = o.max_fevals;
    cfg.rel_func_tol = o.rel_func_tol;
    cfg.lbfgs_memory = o.lbfgs_memory;
    cfg.exact_ls = o.exact_ls != 0;
    cfg.record_iterates = o.record_iterates != 0;
    cfg.ls.ftol = o.ls_ftol;
    cfg.ls.gtol = o.ls_gtol;
    cfg.ls.xtol = o.ls_xtol;
    cfg.ls.stpmin = o.ls_stpmin;
    cfg.ls.stpmax = o.ls_stpmax;
    cfg.ls.maxfev = o.ls_maxfev;
    return cfg;
}

lkqn_run_status to_c_status(lkqn::RunStatus s) {
    switch (s) {
        case lkqn::RunStatus::converged: return LKQN_RUN_CONVERGED;
        case lkqn::RunStatus::max_iters: return LKQN_RUN_MAX_ITERS;
        case lkqn::RunStatus::max_fevals: return LKQN_RUN_MAX_FEVALS;
        case lkqn::RunStatus::ls_failure: return LKQN_RUN_LS_FAILURE;
        case lkqn::RunStatus::numeric_failure: return LKQN_RUN_NUMERIC_FAILURE;
        case lkqn::RunStatus::stalled: return LKQN_RUN_STALLED;
    }
    return LKQN_RUN_NUMERIC_FAILURE;
}

lkqn_branch to_c_branch(lkqn::Branch b) {
    switch (b) {
        case lkqn::Branch::none: return LKQN_BRANCH_NONE;
        case lkqn::Branch::eigvec: return LKQN_BRANCH_EIGVEC;
        case lkqn::Branch::krylov2: return LKQN_BRANCH_KRYLOV2;
        case lkqn::Branch::qt3: return LKQN_BRANCH_QT3;
    }
    return LKQN_BRANCH_NONE;
}

} // namespace

extern "C" {

const char* lkqn_status_str(lkqn_status s) {
    switch (s) {
        case LKQN_OK: return "ok";
        case LKQN_ERR_INVALID_ARG: return "invalid argument";
        case LKQN_ERR_UNKNOWN_NAME: return "unknown name";
        case LKQN_ERR_IO: return "i/o error";
        case LKQN_ERR_PARSE: return "parse error";
        case LKQN_ERR_NUMERIC: return "numeric error";
        case LKQN_ERR_INTERNAL: return "internal error";
    }
    return "?";
}

const char* lkqn_last_error(void) { return g_last_error.c_str(); }

const char* lkqn_version(void) { return "0.1.0"; }

const char* lkqn_run_status_str(lkqn_run_status s) {
    return lkqn::run_status_name(static_cast<lkqn::RunStatus>(s));
}

const char* lkqn_branch_str(lkqn_branch b) {
    return lkqn::branch_name(static_cast<lkqn::Branch>(b));
}

void lkqn_options_init(lkqn_options* opts) {
    if (!opts) return;
    std::memset(opts, 0, sizeof(*opts));
    opts->method = LKQN_METHOD_LKQN;
    opts->phi = 0.0;
    opts->scaled = 0;
    opts->variant = LKQN_VARIANT_SECANT;
    opts->toll_rel = 1e-8;
    opts->stop_tol = 1e-6;
    opts->max_iters = 10000;
    opts->max_fevals = 50000;
    opts->rel_func_tol = 1e-20;
    opts->lbfgs_memory = 5;
    opts->exact_ls = 0;
    opts->record_iterates = 0;
    opts->ls_ftol = 1e-4;
    opts->ls_gtol = 0.9;
    opts->ls_xtol = 1e-15;
    opts->ls_stpmin = 1e-15;
    opts->ls_stpmax = 1e15;
    opts->ls_maxfev = 20;
}

lkqn_status lkqn_problem_named(const char* name, int64_t n, lkqn_problem** out) {
    if (!name || !out || n < 1) return fail(LKQN_ERR_INVALID_ARG, "bad arguments");
    return guarded([&]() {
        try {
            auto p = new lkqn_problem{lkqn::make_named_problem(name, static_cast<std::size_t>(n))};
            *out = p;
            return LKQN_OK;
        } catch (const std::invalid_argument& e) {
            if (std::string(e.what()).find("unknown problem") != std::string::npos)
                return fail(LKQN_ERR_UNKNOWN_NAME, e.what());
            throw;
        }
    });
}

lkqn_status lkqn_problem_quadratic(int64_t n, double cond, uint64_t seed, lkqn_problem** out) {
    if (!out || n < 1) return fail(LKQN_ERR_INVALID_ARG, "bad arguments");
    return guarded([&]() {
        *out = new lkqn_problem{lkqn::make_quadratic(static_cast<std::size_t>(n), cond, seed)};
        return LKQN_OK;
    });
}

lkqn_status lkqn_problem_lowrank_synthetic(int64_t rows, int64_t cols, int64_t rank,
                                           double noise, uint64_t data_seed,
                                           uint64_t start_seed, lkqn_problem** out) {
    if (!out || rows < 1 || cols < 1 || rank < 1)
        return fail(LKQN_ERR_INVALID_ARG, "bad arguments");
    return guarded([&]() {
        lkqn::DataMatrix A = lkqn::make_synthetic_lowrank(
            static_cast<std::size_t>(rows), static_cast<std::size_t>(cols),
            static_cast<std::size_t>(rank), noise, data_seed);
        *out = new lkqn_problem{
            lkqn::make_lowrank_problem(std::move(A), static_cast<std::size_t>(rank), start_seed)};
        return LKQN_OK;
    });
}

lkqn_status lkqn_problem_lowrank_idx(const char* images_path, const char* labels_path,
                                     int digit, int64_t rank, uint64_t start_seed,
                                     lkqn_problem** out) {
    if (!images_path || !labels_path || !out || rank < 1)
        return fail(LKQN_ERR_INVALID_ARG, "bad arguments");
    return guarded([&]() {
        lkqn::DataMatrix A = lkqn::idx_load_class(images_path, labels_path, digit);
        if (A.cols == 0) return fail(LKQN_ERR_INVALID_ARG, "no images with the requested label");
        *out = new lkqn_problem{
            lkqn::make_lowrank_problem(std::move(A), static_cast<std::size_t>(rank), start_seed)};
        return LKQN_OK;
    });
}

void lkqn_problem_free(lkqn_problem* p) { delete p; }

int64_t lkqn_problem_dim(const lkqn_problem* p) {
    return p ? static_cast<int64_t>(p->impl.n) : 0;
}

const char* lkqn_problem_name(const lkqn_problem* p) {
    return p ? p->impl.name.c_str() : "";
}

lkqn_status lkqn_problem_x0(const lkqn_problem* p, double* x) {
    if (!p || !x) return fail(LKQN_ERR_INVALID_ARG, "bad arguments");
    std::memcpy(x, p->impl.x0.data(), p->impl.n * sizeof(double));
    return LKQN_OK;
}

lkqn_status lkqn_problem_eval(const lkqn_problem* p, const double* x, double* f, double* g) {
    if (!p || !x || !f || !g) return fail(LKQN_ERR_INVALID_ARG, "bad arguments");
    return guarded([&]() {
        lkqn::Vec xv(x, x + p->impl.n), gv;
        *f = p->impl.eval(xv, gv);
        std::memcpy(g, gv.data(), p->impl.n * sizeof(double));
        return LKQN_OK;
    });
}

lkqn_status lkqn_problem_gradient_check(const lkqn_problem* p, uint64_t seed, int points,
                                        double* max_rel_err) {
    if (!p || !max_rel_err || points < 1) return fail(LKQN_ERR_INVALID_ARG, "bad arguments");
    return guarded([&]() {
        *max_rel_err = lkqn::gradient_check(p->impl, seed, points);
        return LKQN_OK;
    });
}

lkqn_status lkqn_minimize(const lkqn_problem* p, const double* x0, const lkqn_options* opts,
                          lkqn_result** out) {
    if (!p || !opts || !out) return fail(LKQN_ERR_INVALID_ARG, "bad arguments");
    return guarded([&]() {
        lkqn::Vec start;
        if (x0) start.assign(x0, x0 + p->impl.n);
        lkqn::RunResult r = lkqn::run_solver(p->impl, start, to_config(*opts));
        *out = new lkqn_result{std::move(r)};
        return LKQN_OK;
    });
}

void lkqn_result_free(lkqn_result* r) { delete r; }

lkqn_run_status lkqn_result_status(const lkqn_result* r) { return to_c_status(r->impl.status); }
double lkqn_result_f(const lkqn_result* r) { return r->impl.f_final; }
double lkqn_result_gnorm(const lkqn_result* r) { return r->impl.gnorm_final; }
int64_t lkqn_result_iters(const lkqn_result* r) {
    return static_cast<int64_t>(r->impl.iterations.size());
}
int64_t lkqn_result_fevals(const lkqn_result* r) { return r->impl.total_fev; }
double lkqn_result_time_s(const lkqn_result* r) { return r->impl.wall_time_s; }
int lkqn_result_resets(const lkqn_result* r) { return r->impl.resets; }
const double* lkqn_result_x(const lkqn_result* r) { return r->impl.x_final.data(); }

lkqn_status lkqn_result_record(const lkqn_result* r, int64_t k, lkqn_iter_record* out) {
    if (!r || !out || k < 0 || k >= static_cast<int64_t>(r->impl.iterations.size()))
        return fail(LKQN_ERR_INVALID_ARG, "record index out of range");
    const lkqn::IterationRecord& rec = r->impl.iterations[static_cast<std::size_t>(k)];
    out->k = rec.k;
    out->f = rec.f;
    out->gnorm = rec.gnorm;
    out->step = rec.step;
    out->ys = rec.ys;
    out->trace_b = rec.trace_B;
    out->logdet_b = rec.logdet_B;
    out->trace_l = rec.trace_L;
    out->logdet_l = rec.logdet_L;
    out->cond2_residual = rec.cond2_residual;
    out->psi = rec.psi;
    out->powell_ratio = rec.powell_ratio;
    out->n_fev = rec.n_fev;
    out->branch = to_c_branch(rec.branch);
    out->sigma = rec.sigma;
    out->logdet_upd = rec.logdet_upd;
    out->logdet_upd_unscaled = rec.logdet_upd_unscaled;
    out->qt_residual = rec.qt_residual;
    out->mults = rec.mults;
    return LKQN_OK;
}

lkqn_status lkqn_profile_compute(const lkqn_bench_record* records, size_t n_records,
                                 lkqn_metric metric, lkqn_profile** out) {
    if (!records || !out || n_records == 0) return fail(LKQN_ERR_INVALID_ARG, "bad arguments");
    return guarded([&]() {
        std::vector<lkqn::BenchRecord> recs(n_records);
        for (size_t i = 0; i < n_records; ++i) {
            const lkqn_bench_record& r = records[i];
            if (!r.problem || !r.solver)
                return fail(LKQN_ERR_INVALID_ARG, "bench record with null name");
            recs[i].problem = r.problem;
            recs[i].solver = r.solver;
            recs[i].status = static_cast<lkqn::RunStatus>(r.status);
            recs[i].iters = r.iters;
            recs[i].fevals = r.fevals;
            recs[i].time_s = r.time_s;
            recs[i].f_final = r.f_final;
            recs[i].gnorm_final = r.gnorm_final;
        }
        lkqn::ProfileMetric m = metric == LKQN_METRIC_ITERS    ? lkqn::ProfileMetric::iters
                                : metric == LKQN_METRIC_FEVALS ? lkqn::ProfileMetric::fevals
                                                               : lkqn::ProfileMetric::time;
        *out = new lkqn_profile{lkqn::performance_profile(recs, m)};
        return LKQN_OK;
    });
}

void lkqn_profile_free(lkqn_profile* p) { delete p; }

size_t lkqn_profile_curves(const lkqn_profile* p) { return p->impl.curves.size(); }

const char* lkqn_profile_solver(const lkqn_profile* p, size_t curve) {
    return curve < p->impl.curves.size() ? p->impl.curves[curve].solver.c_str() : "";
}

size_t lkqn_profile_points(const lkqn_profile* p, size_t curve) {
    return curve < p->impl.curves.size() ? p->impl.curves[curve].points.size() : 0;
}

lkqn_status lkqn_profile_point(const lkqn_profile* p, size_t curve, size_t i, double* tau,
                               double* rho) {
    if (!p || curve >= p->impl.curves.size() || i >= p->impl.curves[curve].points.size() ||
        !tau || !rho)
        return fail(LKQN_ERR_INVALID_ARG, "profile point out of range");
    *tau = p->impl.curves[curve].points[i].first;
    *rho = p->impl.curves[curve].points[i].second;
    return LKQN_OK;
}

size_t lkqn_profile_warnings(const lkqn_profile* p) { return p->impl.warnings.size(); }

const char* lkqn_profile_warning(const lkqn_profile* p, size_t i) {
    return i < p->impl.warnings.size() ? p->impl.warnings[i].c_str() : "";
}

int lkqn_verify_run(lkqn_verify_cb cb, void* user) {
    std::vector<lkqn::VerifyCheck> checks;
    try {
        checks = lkqn::run_verification();
    } catch (const std::exception& e) {
        if (cb) cb("verification-battery", 0, e.what(), user);
        return 1;
    }
    int failed = 0;
    for (const auto& c : checks) {
        if (!c.passed) ++failed;
        if (cb) cb(c.name.c_str(), c.passed ? 1 : 0, c.detail.c_str(), user);
    }
    return failed;
}

} // extern "C"
