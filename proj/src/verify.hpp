#ifndef LKQN_VERIFY_HPP
#define LKQN_VERIFY_HPP

#include <functional>
#include <string>
#include <vector>

namespace lkqn {

struct VerifyCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Seeded oracle battery: every fast path is compared against its dense
// brute-force counterpart. Returns one entry per check.
std::vector<VerifyCheck> run_verification();

} // namespace lkqn

#endif
