#include "profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace lkqn {

namespace {

double record_cost(const BenchRecord& r, ProfileMetric metric) {
    switch (metric) {
        case ProfileMetric::iters: return std::max(static_cast<double>(r.iters), 1.0);
        case ProfileMetric::fevals: return std::max(static_cast<double>(r.fevals), 1.0);
        case ProfileMetric::time: return std::max(r.time_s, 1e-9);
    }
    return 0.0;
}

} // namespace

ProfileResult performance_profile(const std::vector<BenchRecord>& records, ProfileMetric metric) {
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<std::string> problems, solvers;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : records) {
        if (!seen.insert({r.problem, r.solver}).second)
            throw std::invalid_argument("performance_profile: duplicate (problem, solver) pair");
        if (std::find(problems.begin(), problems.end(), r.problem) == problems.end())
            problems.push_back(r.problem);
        if (std::find(solvers.begin(), solvers.end(), r.solver) == solvers.end())
            solvers.push_back(r.solver);
    }
    if (problems.empty()) throw std::invalid_argument("performance_profile: no problems");
    if (solvers.size() < 2) throw std::invalid_argument("performance_profile: need >= 2 solvers");

    // cost[p][s], infinite for failures and missing pairs.
    std::map<std::string, std::map<std::string, double>> cost;
    for (const auto& r : records)
        cost[r.problem][r.solver] =
            r.status == RunStatus::converged ? record_cost(r, metric) : inf;

    ProfileResult out;
    std::map<std::string, std::map<std::string, double>> ratio;
    for (const auto& p : problems) {
        double best = inf;
        for (const auto& s : solvers) {
            auto it = cost[p].find(s);
            if (it != cost[p].end()) best = std::min(best, it->second);
        }
        if (!std::isfinite(best)) {
            out.warnings.push_back(p);
            for (const auto& s : solvers) ratio[p][s] = inf;
            continue;
        }
        for (const auto& s : solvers) {
            auto it = cost[p].find(s);
            double c = it == cost[p].end() ? inf : it->second;
            ratio[p][s] = std::isfinite(c) ? c / best : inf;
        }
    }

    const double np = static_cast<double>(problems.size());
    for (const auto& s : solvers) {
        std::vector<double> rs;
        for (const auto& p : problems)
            if (std::isfinite(ratio[p][s])) rs.push_back(ratio[p][s]);
        std::sort(rs.begin(), rs.end());

        ProfileCurve curve;
        curve.solver = s;
        auto rho_at = [&](double tau) {
            return static_cast<double>(std::upper_bound(rs.begin(), rs.end(), tau) - rs.begin()) /
                   np;
        };
        curve.points.emplace_back(1.0, rho_at(1.0));
        for (std::size_t i = 0; i < rs.size(); ++i) {
            if (i + 1 < rs.size() && rs[i + 1] == rs[i]) continue;
            if (rs[i] == 1.0) continue; // already emitted
            curve.points.emplace_back(rs[i], rho_at(rs[i]));
        }
        // Invariants: tau >= 1 sorted, rho nondecreasing within [0, 1].
        double prev_tau = 0.0, prev_rho = -1.0;
        for (auto& [tau, rho] : curve.points) {
            if (tau < 1.0 || tau < prev_tau || rho < prev_rho || rho < 0.0 || rho > 1.0)
                throw std::logic_error("performance_profile: invariant violation");
            prev_tau = tau;
            prev_rho = rho;
        }
        out.curves.push_back(std::move(curve));
    }
    return out;
}

} // namespace lkqn
