#pragma once

#include "tubefit/simd/kernels.hpp"

namespace tubefit::simd {

std::size_t nearest_sample_scalar(const double* sx, const double* sy, const double* sz,
                                  std::size_t n, double x, double y, double z) noexcept;
void quadform_row_scalar(const double* xs, std::size_t n, double y, const QuadForm& q,
                         double* out) noexcept;
MaskCounts count_below_scalar(const double* values, const std::uint8_t* mask, std::size_t n,
                              double level) noexcept;

// Defined only in builds that compile the matching translation unit.
const KernelTable& avx2_table() noexcept;
const KernelTable& neon_table() noexcept;

} // namespace tubefit::simd
