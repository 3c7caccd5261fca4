/*
 * lkqn - low-complexity quasi-Newton minimization library.
 *
 * C interface of the shared library: opaque handles, integer status codes,
 * and plain-struct options. All functions are thread-safe as long as each
 * handle is used from one thread at a time; problems are immutable and may
 * be shared across concurrent solves.
 */
#ifndef LKQN_H
#define LKQN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* ----------------------------------------------------------- status codes */

typedef enum lkqn_status {
    LKQN_OK = 0,
    LKQN_ERR_INVALID_ARG = 1,
    LKQN_ERR_UNKNOWN_NAME = 2,
    LKQN_ERR_IO = 3,
    LKQN_ERR_PARSE = 4,
    LKQN_ERR_NUMERIC = 5,
    LKQN_ERR_INTERNAL = 6
} lkqn_status;

const char* lkqn_status_str(lkqn_status s);
/* Message for the most recent error on this thread (empty string if none). */
const char* lkqn_last_error(void);
const char* lkqn_version(void);

/* ---------------------------------------------------------------- solvers */

typedef enum lkqn_method {
    LKQN_METHOD_LKQN = 0,
    LKQN_METHOD_LKQN_QT = 1,
    LKQN_METHOD_BFGS_DENSE = 2,
    LKQN_METHOD_LBFGS = 3,
    LKQN_METHOD_BROYDEN_GENERIC = 4
} lkqn_method;

typedef enum lkqn_variant {
    LKQN_VARIANT_SECANT = 0,
    LKQN_VARIANT_NON_SECANT = 1
} lkqn_variant;

typedef enum lkqn_run_status {
    LKQN_RUN_CONVERGED = 0,
    LKQN_RUN_MAX_ITERS = 1,
    LKQN_RUN_MAX_FEVALS = 2,
    LKQN_RUN_LS_FAILURE = 3,
    LKQN_RUN_NUMERIC_FAILURE = 4,
    LKQN_RUN_STALLED = 5
} lkqn_run_status;

typedef enum lkqn_branch {
    LKQN_BRANCH_NONE = 0,
    LKQN_BRANCH_EIGVEC = 1,
    LKQN_BRANCH_KRYLOV2 = 2,
    LKQN_BRANCH_QT3 = 3
} lkqn_branch;

const char* lkqn_run_status_str(lkqn_run_status s);
const char* lkqn_branch_str(lkqn_branch b);

typedef struct lkqn_options {
    lkqn_method method;
    double phi;           /* Broyden parameter in [0, 1) */
    int scaled;           /* self-scaled projection base (phi = 0 only) */
    lkqn_variant variant; /* broyden-generic only */
    double toll_rel;      /* eigenvector-branch threshold */
    double stop_tol;      /* converged when ||g||_2 / n <= stop_tol */
    long max_iters;
    long max_fevals;
    double rel_func_tol;
    int lbfgs_memory;
    int exact_ls;         /* exact step; quadratic problems only */
    int record_iterates;  /* keep x_k/d_k sequences (memory: iters x n) */
    double ls_ftol, ls_gtol, ls_xtol, ls_stpmin, ls_stpmax;
    int ls_maxfev;
} lkqn_options;

/* Fills the defaults (lkqn, phi 0, stop_tol 1e-6, max_iters 10000,
 * max_fevals 50000, rel_func_tol 1e-20, ls 1e-4/0.9/1e-15/1e-15/1e15/20). */
void lkqn_options_init(lkqn_options* opts);

/* --------------------------------------------------------------- problems */

typedef struct lkqn_problem lkqn_problem;

/* Named problems: TRIDIA, GENROSE, CHAINWOO, TESTQUAD, BROYDN7D, GENHUMPS,
 * NONCVXU2, MODBEALE (case-insensitive). */
lkqn_status lkqn_problem_named(const char* name, int64_t n, lkqn_problem** out);
lkqn_status lkqn_problem_quadratic(int64_t n, double cond, uint64_t seed, lkqn_problem** out);
lkqn_status lkqn_problem_lowrank_synthetic(int64_t rows, int64_t cols, int64_t rank,
                                           double noise, uint64_t data_seed,
                                           uint64_t start_seed, lkqn_problem** out);
/* Rank-k factorization of one digit class of an IDX image/label pair. */
lkqn_status lkqn_problem_lowrank_idx(const char* images_path, const char* labels_path,
                                     int digit, int64_t rank, uint64_t start_seed,
                                     lkqn_problem** out);
void lkqn_problem_free(lkqn_problem* p);

int64_t lkqn_problem_dim(const lkqn_problem* p);
const char* lkqn_problem_name(const lkqn_problem* p);
/* Default starting point; x must hold dim entries. */
lkqn_status lkqn_problem_x0(const lkqn_problem* p, double* x);
lkqn_status lkqn_problem_eval(const lkqn_problem* p, const double* x, double* f, double* g);
/* Max relative deviation of the analytic gradient from central differences
 * over `points` seeded sample points. */
lkqn_status lkqn_problem_gradient_check(const lkqn_problem* p, uint64_t seed, int points,
                                        double* max_rel_err);

/* ------------------------------------------------------------------- runs */

typedef struct lkqn_result lkqn_result;

typedef struct lkqn_iter_record {
    int64_t k;
    double f, gnorm, step, ys;
    double trace_b, logdet_b;
    double trace_l, logdet_l;
    double cond2_residual;
    double psi;
    double powell_ratio;
    int64_t n_fev;
    lkqn_branch branch;
    double sigma;
    double logdet_upd, logdet_upd_unscaled;
    double qt_residual;
    uint64_t mults;
} lkqn_iter_record;

/* x0 may be NULL to use the problem's standard start. */
lkqn_status lkqn_minimize(const lkqn_problem* p, const double* x0, const lkqn_options* opts,
                          lkqn_result** out);
void lkqn_result_free(lkqn_result* r);

lkqn_run_status lkqn_result_status(const lkqn_result* r);
double lkqn_result_f(const lkqn_result* r);
double lkqn_result_gnorm(const lkqn_result* r);
int64_t lkqn_result_iters(const lkqn_result* r);
int64_t lkqn_result_fevals(const lkqn_result* r);
double lkqn_result_time_s(const lkqn_result* r);
int lkqn_result_resets(const lkqn_result* r);
const double* lkqn_result_x(const lkqn_result* r); /* dim entries */
lkqn_status lkqn_result_record(const lkqn_result* r, int64_t k, lkqn_iter_record* out);

/* ----------------------------------------------------- performance profiles */

typedef struct lkqn_profile lkqn_profile;

typedef enum lkqn_metric {
    LKQN_METRIC_ITERS = 0,
    LKQN_METRIC_FEVALS = 1,
    LKQN_METRIC_TIME = 2
} lkqn_metric;

typedef struct lkqn_bench_record {
    const char* problem;
    const char* solver;
    lkqn_run_status status;
    int64_t iters;
    int64_t fevals;
    double time_s;
    double f_final;
    double gnorm_final;
} lkqn_bench_record;

lkqn_status lkqn_profile_compute(const lkqn_bench_record* records, size_t n_records,
                                 lkqn_metric metric, lkqn_profile** out);
void lkqn_profile_free(lkqn_profile* p);
size_t lkqn_profile_curves(const lkqn_profile* p);
const char* lkqn_profile_solver(const lkqn_profile* p, size_t curve);
size_t lkqn_profile_points(const lkqn_profile* p, size_t curve);
lkqn_status lkqn_profile_point(const lkqn_profile* p, size_t curve, size_t i, double* tau,
                               double* rho);
size_t lkqn_profile_warnings(const lkqn_profile* p);
const char* lkqn_profile_warning(const lkqn_profile* p, size_t i);

/* ---------------------------------------------------------------- verify */

/* Runs the oracle verification battery; invokes cb (if non-NULL) once per
 * check and returns the number of failed checks. */
typedef void (*lkqn_verify_cb)(const char* check, int passed, const char* detail, void* user);
int lkqn_verify_run(lkqn_verify_cb cb, void* user);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LKQN_H */
