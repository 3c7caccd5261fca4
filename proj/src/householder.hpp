#ifndef LKQN_HOUSEHOLDER_HPP
#define LKQN_HOUSEHOLDER_HPP

#include <cstddef>
#include <vector>

#include "vec.hpp"

namespace lkqn {

// Elementary reflection H(h) = I - (2/||h||^2) h h^T, stored with the
// canonical normalization ||h|| = sqrt(2) so that H(h)x = x - (h^T x) h.
// The degenerate direction h = 0 is represented explicitly as the identity.
struct Reflector {
    Vec h;
    bool identity = false;

    std::size_t dim() const { return h.size(); }

    static Reflector make_identity(std::size_t n) {
        Reflector r;
        r.h.assign(n, 0.0);
        r.identity = true;
        return r;
    }
};

// Builds the reflector mapping v onto (||v||/||z||) z, from the direction
// p = v - (||v||/||z||) z. Returns the identity when p is negligible
// relative to the input scale. Throws std::invalid_argument for z = 0.
Reflector reflector_from_pair(const Vec& v, const Vec& z);

// Normalizes a raw direction p into a canonical reflector; identity when
// ||p|| <= degeneracy_floor.
Reflector reflector_from_direction(const Vec& p, double degeneracy_floor);

// x := H(h) x, in place. 2n multiplications for a non-identity reflector.
void apply_reflector(const Reflector& r, Vec& x);
Vec apply_reflector_copy(const Reflector& r, const Vec& x);

// Ordered product of reflections U = H(h_s) ... H(h_1).
struct HouseholderStack {
    std::size_t n = 0;
    std::vector<Reflector> reflectors; // [h_1, ..., h_s]

    std::size_t size() const { return reflectors.size(); }

    static HouseholderStack identity(std::size_t n) {
        HouseholderStack u;
        u.n = n;
        return u;
    }
};

// x := U x  (applies h_1 first).
void stack_apply(const HouseholderStack& u, Vec& x);
// x := U^T x (applies h_s first).
void stack_apply_t(const HouseholderStack& u, Vec& x);
Vec stack_apply_copy(const HouseholderStack& u, const Vec& x);
Vec stack_apply_t_copy(const HouseholderStack& u, const Vec& x);

// Given W = [w_1|...|w_s] and V = [v_1|...|v_s] with W^T W = V^T V (checked
// to 1e-10 relative), builds U = H(h_s)...H(h_1) with U w_i = v_i via the
// recursion
//   htilde_i = H(h_{i-1})...H(h_1)(w_i - w_{i-1}) - (v_i - v_{i-1}),
//   h_i      = sqrt(2) htilde_i / ||htilde_i||,
// emitting an identity reflector when ||htilde_i|| is negligible.
// Counted cost of the construction is s(s-1)n + s(2n+1) multiplications;
// the Gram precondition check is not counted.
HouseholderStack build_stack_mapping(const std::vector<Vec>& W, const std::vector<Vec>& V);

// Special case W = [e_1, ..., e_s] for orthonormal targets V: returns U with
// U e_i = v_i. Saves the first reflector application per column.
HouseholderStack stack_fixing_columns(std::size_t n, const std::vector<Vec>& targets);

} // namespace lkqn

#endif
