#include "householder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lkqn {

namespace {
constexpr double kDegeneracyRel = 1e-13;
constexpr double kGramRelTol = 1e-10;
const double kSqrt2 = std::sqrt(2.0);
} // namespace

Reflector reflector_from_direction(const Vec& p, double degeneracy_floor) {
    double np = nrm2(p);
    if (np <= degeneracy_floor) return Reflector::make_identity(p.size());
    Reflector r;
    scaled_copy(kSqrt2 / np, p, r.h);
    ops::add_mults(1);
    return r;
}

Reflector reflector_from_pair(const Vec& v, const Vec& z) {
    check_same_dim(v, z, "reflector_from_pair");
    double nv = nrm2(v);
    double nz = nrm2(z);
    if (nz == 0.0) throw std::invalid_argument("reflector_from_pair: z must be nonzero");
    Vec p(v.size());
    double c = nv / nz;
    for (std::size_t i = 0; i < v.size(); ++i) p[i] = v[i] - c * z[i];
    ops::add_mults(v.size() + 1);
    return reflector_from_direction(p, kDegeneracyRel * std::max(nv, 1e-300));
}

void apply_reflector(const Reflector& r, Vec& x) {
    if (r.dim() != x.size())
        throw std::invalid_argument("apply_reflector: dimension mismatch");
    if (r.identity) return;
    double c = dot(r.h, x);
    axpy(-c, r.h, x);
}

Vec apply_reflector_copy(const Reflector& r, const Vec& x) {
    Vec out = x;
    apply_reflector(r, out);
    return out;
}

void stack_apply(const HouseholderStack& u, Vec& x) {
    if (u.n != x.size())
        throw std::invalid_argument("stack_apply: dimension mismatch");
    for (const auto& r : u.reflectors) apply_reflector(r, x);
}

void stack_apply_t(const HouseholderStack& u, Vec& x) {
    if (u.n != x.size())
        throw std::invalid_argument("stack_apply_t: dimension mismatch");
    for (auto it = u.reflectors.rbegin(); it != u.reflectors.rend(); ++it)
        apply_reflector(*it, x);
}

Vec stack_apply_copy(const HouseholderStack& u, const Vec& x) {
    Vec out = x;
    stack_apply(u, out);
    return out;
}

Vec stack_apply_t_copy(const HouseholderStack& u, const Vec& x) {
    Vec out = x;
    stack_apply_t(u, out);
    return out;
}

namespace {

// Gram compatibility guard, excluded from the multiplication counter: it
// validates a precondition rather than performing the construction.
// Returns the input scale used for the degeneracy floor.
double check_gram_compatible(const std::vector<Vec>& W, const std::vector<Vec>& V) {
    ops::PauseGuard pause;
    const std::size_t s = W.size();
    double scale = 0.0;
    double max_abs = 0.0, max_dev = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = i; j < s; ++j) {
            double gw = dot(W[i], W[j]);
            double gv = dot(V[i], V[j]);
            max_abs = std::max(max_abs, std::max(std::abs(gw), std::abs(gv)));
            max_dev = std::max(max_dev, std::abs(gw - gv));
        }
        scale = std::max(scale, std::sqrt(std::abs(dot(W[i], W[i]))) +
                                    std::sqrt(std::abs(dot(V[i], V[i]))));
    }
    if (max_dev > kGramRelTol * std::max(max_abs, 1.0))
        throw std::invalid_argument("build_stack_mapping: W^T W != V^T V beyond tolerance");
    return scale;
}

} // namespace

HouseholderStack build_stack_mapping(const std::vector<Vec>& W, const std::vector<Vec>& V) {
    if (W.size() != V.size())
        throw std::invalid_argument("build_stack_mapping: column count mismatch");
    HouseholderStack u;
    if (W.empty()) return u;
    const std::size_t n = W[0].size();
    const std::size_t s = W.size();
    if (s > n) throw std::invalid_argument("build_stack_mapping: more columns than rows");
    for (std::size_t i = 0; i < s; ++i)
        if (W[i].size() != n || V[i].size() != n)
            throw std::invalid_argument("build_stack_mapping: ragged columns");

    double scale = check_gram_compatible(W, V);
    u.n = n;
    u.reflectors.reserve(s);

    Vec work(n);
    for (std::size_t i = 0; i < s; ++i) {
        // work = w_i - w_{i-1}, then the partial product, then - (v_i - v_{i-1})
        for (std::size_t j = 0; j < n; ++j)
            work[j] = W[i][j] - (i > 0 ? W[i - 1][j] : 0.0);
        for (const auto& r : u.reflectors) apply_reflector(r, work);
        for (std::size_t j = 0; j < n; ++j)
            work[j] -= V[i][j] - (i > 0 ? V[i - 1][j] : 0.0);
        u.reflectors.push_back(reflector_from_direction(work, kDegeneracyRel * std::max(scale, 1e-300)));
    }
    return u;
}

HouseholderStack stack_fixing_columns(std::size_t n, const std::vector<Vec>& targets) {
    HouseholderStack u;
    u.n = n;
    if (targets.empty()) return u;
    const std::size_t s = targets.size();
    if (s > n) throw std::invalid_argument("stack_fixing_columns: more targets than rows");
    for (const auto& t : targets)
        if (t.size() != n)
            throw std::invalid_argument("stack_fixing_columns: ragged targets");

    double scale;
    {
        // Orthonormality guard on the targets (W = [e_1..e_s] is orthonormal).
        ops::PauseGuard pause;
        double max_dev = 0.0;
        for (std::size_t i = 0; i < s; ++i)
            for (std::size_t j = i; j < s; ++j) {
                double g = dot(targets[i], targets[j]);
                max_dev = std::max(max_dev, std::abs(g - (i == j ? 1.0 : 0.0)));
            }
        if (max_dev > kGramRelTol)
            throw std::invalid_argument("stack_fixing_columns: targets not orthonormal");
        scale = 2.0;
    }

    u.reflectors.reserve(s);
    Vec work(n);
    for (std::size_t i = 0; i < s; ++i) {
        // work = H(h_{i-1})...H(h_1)(e_i - e_{i-1}); the first application
        // reads the two needed entries of h instead of a full inner product.
        std::fill(work.begin(), work.end(), 0.0);
        work[i] = 1.0;
        if (i > 0) work[i - 1] = -1.0;
        bool sparse = true;
        for (const auto& r : u.reflectors) {
            if (r.identity) continue;
            if (sparse) {
                double c = r.h[i] - (i > 0 ? r.h[i - 1] : 0.0);
                axpy(-c, r.h, work);
                sparse = false;
            } else {
                apply_reflector(r, work);
            }
        }
        for (std::size_t j = 0; j < n; ++j)
            work[j] -= targets[i][j] - (i > 0 ? targets[i - 1][j] : 0.0);
        u.reflectors.push_back(reflector_from_direction(work, kDegeneracyRel * scale));
    }
    return u;
}

} // namespace lkqn
