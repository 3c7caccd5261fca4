#ifndef LKQN_SOLVER_HPP
#define LKQN_SOLVER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "linesearch.hpp"
#include "problems.hpp"
#include "vec.hpp"

namespace lkqn {

enum class Method { lkqn, lkqn_qt, bfgs_dense, lbfgs, broyden_generic };
enum class BroydenVariant { secant, non_secant };
enum class Branch { none, eigvec, krylov2, qt3 };
enum class RunStatus { converged, max_iters, max_fevals, ls_failure, numeric_failure, stalled };

const char* method_name(Method m);
const char* branch_name(Branch b);
const char* run_status_name(RunStatus s);
bool method_from_name(const std::string& name, Method& out);

struct SolverConfig {
    Method method = Method::lkqn;
    double phi = 0.0;              // Broyden parameter, [0, 1)
    bool scaled = false;           // self-scaling of the projected base (phi = 0 only)
    BroydenVariant variant = BroydenVariant::secant;
    double toll_rel = 1e-8;        // eigenvector-branch threshold, relative
    double stop_tol = 1e-6;        // converged when ||g||_2 / n <= stop_tol
    long max_iters = 10000;
    long max_fevals = 50000;
    double rel_func_tol = 1e-20;
    int lbfgs_memory = 5;
    bool exact_ls = false;         // exact step on quadratic problems
    bool record_iterates = false;  // keep x_k and d_k sequences (small runs)
    LineSearchParams ls;

    void validate() const;
};

struct IterationRecord {
    long k = 0;
    double f = 0.0;
    double gnorm = 0.0;
    double step = 0.0;
    double ys = 0.0;
    // Running trace / log-det of the matrix projected at this step and of the
    // projected algebra actually used as the update base (after scaling).
    double trace_B = 0.0, logdet_B = 0.0;
    double trace_L = 0.0, logdet_L = 0.0;
    double cond2_residual = 0.0; // ||L s - B s|| / ||B s||
    double psi = 0.0;
    double powell_ratio = 0.0;   // ||y||^2 / (s^T y)
    int n_fev = 0;
    Branch branch = Branch::none;
    double sigma = 1.0;
    double logdet_upd = 0.0;          // log-det recursion value for the updated matrix
    double logdet_upd_unscaled = 0.0; // same step with sigma = 1
    double qt_residual = 0.0;         // eigenvector residual of gbar (qt branch), NaN otherwise
    std::uint64_t mults = 0;          // counted multiplications this iteration
};

struct RunResult {
    RunStatus status = RunStatus::numeric_failure;
    Vec x_final;
    double f_final = 0.0;
    double gnorm_final = 0.0;
    std::vector<IterationRecord> iterations;
    double wall_time_s = 0.0;
    long total_fev = 0;
    int resets = 0;
    // Populated when config.record_iterates: x_0..x_K and d_0..d_{K-1}.
    std::vector<Vec> iterates;
    std::vector<Vec> directions;
    // Conjugacy diagnostics of the quadratic driver (NaN when not computed):
    // max |g_{k+1}^T s_j| and |s_{k+1}^T A s_j| scaled by the factor norms.
    double max_grad_step_ortho = 0.0;
    double max_conjugacy_residual = 0.0;
};

RunResult run_solver(const Problem& p, const Vec& x0, const SolverConfig& cfg);

RunResult run_lkqn(const Problem& p, const Vec& x0, const SolverConfig& cfg);
RunResult run_lkqn_qt(const Problem& p, const Vec& x0, const SolverConfig& cfg);
RunResult run_broyden_generic(const Problem& p, const Vec& x0, const SolverConfig& cfg);
RunResult run_bfgs_dense(const Problem& p, const Vec& x0, const SolverConfig& cfg);
RunResult run_lbfgs(const Problem& p, const Vec& x0, const SolverConfig& cfg);

// BFGS-type scheme for 1/2 x^T A x - b^T x with exact line search, inverse
// (H-form) updates, and a pluggable approximation strategy for the inverse
// base: the adaptive projected algebra or the plain identity.
enum class QuadHStrategy { adaptive_algebra, identity };
RunResult run_quadratic_bfgs_type(const std::function<void(const Vec&, Vec&)>& A_action,
                                  const Vec& b, const Vec& x0, QuadHStrategy strategy,
                                  const SolverConfig& cfg);

// Number of persistent length-n vectors held by the L-BFGS workspace for a
// given memory parameter (the s/y rings plus the current point and gradient).
std::size_t lbfgs_persistent_vectors(int memory);

} // namespace lkqn

#endif
