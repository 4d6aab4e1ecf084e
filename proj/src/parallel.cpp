#include "tubefit/parallel.hpp"

#include <atomic>

namespace tubefit {

namespace {
std::atomic<unsigned> g_max_threads{0};
}

void set_max_threads(unsigned n) noexcept { g_max_threads.store(n); }

unsigned max_threads() noexcept {
    const unsigned cap = g_max_threads.load();
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return cap == 0 ? hw : std::min(cap, hw);
}

} // namespace tubefit
