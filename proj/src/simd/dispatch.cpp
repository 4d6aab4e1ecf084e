#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace tubefit::simd {

const KernelTable* avx2_kernels() noexcept {
#if defined(TUBEFIT_HAVE_AVX2)
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") != 0;
    }();
    return supported ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon_kernels() noexcept {
#if defined(TUBEFIT_HAVE_NEON)
    return &neon_table();
#else
    return nullptr;
#endif
}

const KernelTable& active_kernels() noexcept {
    static const KernelTable& table = []() -> const KernelTable& {
        const char* forced = std::getenv("TUBEFIT_SIMD");
        const std::string_view want = forced != nullptr ? forced : "";
        if (want == "scalar") {
            return scalar_kernels();
        }
        if (want != "neon") {
            if (const KernelTable* t = avx2_kernels()) {
                return *t;
            }
        }
        if (want != "avx2") {
            if (const KernelTable* t = neon_kernels()) {
                return *t;
            }
        }
        return scalar_kernels();
    }();
    return table;
}

} // namespace tubefit::simd
