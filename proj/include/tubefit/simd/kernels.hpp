#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference;
// vector variants must return bit-identical results (the library builds with
// -ffp-contract=off and each variant uses the same operation order).

#include <cstddef>
#include <cstdint>

namespace tubefit::simd {

/// q(x, y) = dx * (a * dx + b2 * dy) + c * dy * dy with dx = x - mx, dy = y - my.
struct QuadForm {
    double mx = 0.0;
    double my = 0.0;
    double a = 1.0;
    double b2 = 0.0;  ///< twice the off-diagonal entry
    double c = 1.0;
};

struct MaskCounts {
    std::uint64_t inside_g = 0;   ///< q <= level and mask set
    std::uint64_t outside_g = 0;  ///< q <= level and mask clear
};

/// Index of the sample nearest (x, y, z) among n samples stored as
/// structure-of-arrays. Ties resolve to the smallest index. Requires n >= 1.
using NearestSampleFn = std::size_t (*)(const double* sx, const double* sy, const double* sz,
                                        std::size_t n, double x, double y, double z) noexcept;

/// out[i] = q(xs[i], y).
using QuadFormRowFn = void (*)(const double* xs, std::size_t n, double y, const QuadForm& q,
                               double* out) noexcept;

/// Counts cells with values[i] <= level split by mask[i] != 0.
using CountBelowFn = MaskCounts (*)(const double* values, const std::uint8_t* mask,
                                    std::size_t n, double level) noexcept;

struct KernelTable {
    const char* name;
    NearestSampleFn nearest_sample;
    QuadFormRowFn quadform_row;
    CountBelowFn count_below;
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when not compiled in or when the running CPU lacks the extension.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

/// Best table for this CPU, chosen once. TUBEFIT_SIMD=scalar|avx2|neon in the
/// environment forces a variant when available.
const KernelTable& active_kernels() noexcept;

} // namespace tubefit::simd
