#ifndef LKQN_OPS_HPP
#define LKQN_OPS_HPP

#include <cstdint>

namespace lkqn::ops {

// Thread-local multiplication counter. Kernels report their multiply/divide
// count in bulk (one call per kernel), so the instrumentation cost is O(1)
// per vector operation. Objective evaluations are excluded by the solvers
// via PauseGuard so that counts reflect update machinery only.

void add_mults(std::uint64_t n) noexcept;
std::uint64_t mults() noexcept;
void reset() noexcept;

class PauseGuard {
public:
    PauseGuard() noexcept;
    ~PauseGuard();
    PauseGuard(const PauseGuard&) = delete;
    PauseGuard& operator=(const PauseGuard&) = delete;
};

} // namespace lkqn::ops

#endif
