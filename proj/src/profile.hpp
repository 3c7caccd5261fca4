#ifndef LKQN_PROFILE_HPP
#define LKQN_PROFILE_HPP

#include <string>
#include <utility>
#include <vector>

#include "solver.hpp"

namespace lkqn {

struct BenchRecord {
    std::string problem;
    std::string solver;
    RunStatus status = RunStatus::numeric_failure;
    long iters = 0;
    long fevals = 0;
    double time_s = 0.0;
    double f_final = 0.0;
    double gnorm_final = 0.0;
};

enum class ProfileMetric { iters, fevals, time };

struct ProfileCurve {
    std::string solver;
    std::vector<std::pair<double, double>> points; // (tau, rho), tau >= 1, rho nondecreasing
};

struct ProfileResult {
    std::vector<ProfileCurve> curves;
    std::vector<std::string> warnings; // problems no solver converged on
};

// Cost ratios r_{p,s} = cost_{p,s} / min_s cost_{p,s} over converged runs
// (failures count as infinite); rho_s(tau) = |{p : r_{p,s} <= tau}| / |P|.
// Breakpoints are emitted at tau = 1 and at each of the solver's distinct
// finite ratios. Iteration/feval costs are floored at 1, time at 1 ns.
// Requires >= 1 problem, >= 2 solvers, each (problem, solver) pair once.
ProfileResult performance_profile(const std::vector<BenchRecord>& records, ProfileMetric metric);

} // namespace lkqn

#endif
