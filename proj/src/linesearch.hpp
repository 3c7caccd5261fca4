#ifndef LKQN_LINESEARCH_HPP
#define LKQN_LINESEARCH_HPP

#include <functional>

#include "vec.hpp"

namespace lkqn {

class NonConvexDirectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LineSearchParams {
    double ftol = 1e-4;   // sufficient-decrease constant
    double gtol = 0.9;    // curvature constant (strong form)
    double xtol = 1e-15;  // relative interval floor
    double stpmin = 1e-15;
    double stpmax = 1e15;
    int maxfev = 20;

    void validate() const;
};

enum class LsStatus { converged, max_fev, degenerate_interval };

struct LineSearchResult {
    double step = 0.0;
    double f_new = 0.0;
    Vec x_new;
    Vec g_new;
    int n_fev = 0;
    LsStatus status = LsStatus::converged;
    bool armijo_ok = false; // sufficient decrease holds at `step`
};

// Evaluation callback: returns f(x) and fills g with the gradient.
using EvalFn = std::function<double(const Vec&, Vec&)>;

// Strong-Wolfe search along a descent direction d from x (g0d = g0^T d < 0
// required, else std::invalid_argument). Bracketing plus safeguarded
// cubic/quadratic interpolation; initial trial step 1. On converged status
// both the sufficient-decrease and the strong curvature condition hold at
// the returned step; on max_fev / degenerate_interval the best evaluated
// point is returned with armijo_ok indicating whether sufficient decrease
// holds there.
LineSearchResult strong_wolfe(const EvalFn& eval, const Vec& x, const Vec& d,
                              double f0, double g0d, const LineSearchParams& params);

// Exact minimizer of a convex quadratic along d: lambda = -(g^T d)/(d^T A d).
// Throws NonConvexDirectionError when d^T A d <= 0.
double exact_quadratic_step(const std::function<void(const Vec&, Vec&)>& A_action,
                            const Vec& g, const Vec& d, Vec* Ad_out = nullptr);

} // namespace lkqn

#endif
