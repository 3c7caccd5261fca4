#include "ops.hpp"

namespace lkqn::ops {

namespace {
thread_local std::uint64_t g_mults = 0;
thread_local int g_pause_depth = 0;
} // namespace

void add_mults(std::uint64_t n) noexcept {
    if (g_pause_depth == 0) g_mults += n;
}

std::uint64_t mults() noexcept { return g_mults; }

void reset() noexcept { g_mults = 0; }

PauseGuard::PauseGuard() noexcept { ++g_pause_depth; }
PauseGuard::~PauseGuard() { --g_pause_depth; }

} // namespace lkqn::ops
