#ifndef LKQN_HESS_MODEL_HPP
#define LKQN_HESS_MODEL_HPP

#include <array>
#include <stdexcept>

#include "algebra.hpp"
#include "vec.hpp"

namespace lkqn {

class CurvatureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Implicit representation of the rank-two (plus optional phi term) update
//   B = base - (base s)(base s)^T / (s^T base s) + y y^T / (y^T s)
//       + phi (s^T base s) v v^T,      v = y/(y^T s) - base s/(s^T base s),
// with O(n) matvec and inverse application and exact trace / log-det
// bookkeeping (log-det exact at phi = 0, a lower bound otherwise).
struct HessianModel {
    SpectralAlgebra base;
    Vec s, y;
    double phi = 0.0;

    Vec Ls;        // base * s
    double sLs = 0.0, ys = 0.0;
    double ynorm2 = 0.0;
    Vec v;

    double trace_val = 0.0;
    double logdet_val = 0.0;

    // phi > 0 inverse cache: base^{-1}[Ls | y | v] and the factored 3x3
    // capacitance of the Woodbury identity.
    std::array<Vec, 3> winv;
    std::array<std::array<double, 3>, 3> cap{};
    std::array<int, 3> piv{};
    bool have_woodbury = false;

    std::size_t dim() const { return base.dim(); }
};

// Builds the model; throws CurvatureError when y^T s <= 0 and PdLossError
// when the base is not positive definite. When the caller already holds
// base * s (solvers do), pass it to avoid recomputation.
HessianModel broyden_update(SpectralAlgebra base, Vec s, Vec y, double phi);
HessianModel broyden_update_with_ls(SpectralAlgebra base, Vec s, Vec y, double phi, Vec Ls);

Vec model_matvec(const HessianModel& m, const Vec& x);
Vec model_solve(const HessianModel& m, const Vec& g);

// psi diagnostic of the update (the bracketed trace-comparison quantity).
double model_psi(const HessianModel& m);

// Self-scaling factor for the phi = 0 path:
//   sigma = max{ min{ y^T s / (s^T L s), 1 }, exp((logdet_B - logdet_L)/n) }.
// Always in (0, 1]. logdet_B is the running log-determinant of the
// unprojected matrix that L approximates.
double sigma_from(double ys, double sLs, double logdet_L, double logdet_B, std::size_t n);
double sigma_scale(const SpectralAlgebra& base, const Vec& s, const Vec& y, double logdet_B);

struct TraceDetReport {
    double trace;
    double logdet;
};
TraceDetReport trace_det_report(const HessianModel& m);

} // namespace lkqn

#endif
