#ifndef LKQN_VEC_HPP
#define LKQN_VEC_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ops.hpp"

namespace lkqn {

using Vec = std::vector<double>;

inline void check_same_dim(const Vec& a, const Vec& b, const char* where) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(where) + ": dimension mismatch");
}

inline double dot(const Vec& a, const Vec& b) {
    check_same_dim(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    ops::add_mults(a.size());
    return acc;
}

inline double nrm2(const Vec& a) {
    double acc = 0.0;
    for (double v : a) acc += v * v;
    ops::add_mults(a.size());
    return std::sqrt(acc);
}

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    check_same_dim(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
    ops::add_mults(x.size());
}

// x *= alpha
inline void scal(double alpha, Vec& x) {
    for (double& v : x) v *= alpha;
    ops::add_mults(x.size());
}

// out = alpha * x (resizes out)
inline void scaled_copy(double alpha, const Vec& x, Vec& out) {
    out.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i];
    ops::add_mults(x.size());
}

// out = a - b (no multiplications)
inline void sub(const Vec& a, const Vec& b, Vec& out) {
    check_same_dim(a, b, "sub");
    out.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
}

// acc += coeff * (x .* y), entrywise
inline void add_hadamard(double coeff, const Vec& x, const Vec& y, Vec& acc) {
    check_same_dim(x, acc, "add_hadamard");
    check_same_dim(y, acc, "add_hadamard");
    if (coeff == 1.0) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i] * y[i];
        ops::add_mults(acc.size());
    } else {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += coeff * x[i] * y[i];
        ops::add_mults(2 * acc.size());
    }
}

inline bool all_finite(const Vec& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace lkqn

#endif
