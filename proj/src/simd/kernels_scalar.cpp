#include "kernels_impl.hpp"

namespace tubefit::simd {

std::size_t nearest_sample_scalar(const double* sx, const double* sy, const double* sz,
                                  std::size_t n, double x, double y, double z) noexcept {
    std::size_t best = 0;
    double best_d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = sx[i] - x;
        const double dy = sy[i] - y;
        const double dz = sz[i] - z;
        const double d2 = (dx * dx + dy * dy) + dz * dz;
        if (i == 0 || d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

void quadform_row_scalar(const double* xs, std::size_t n, double y, const QuadForm& q,
                         double* out) noexcept {
    const double dy = y - q.my;
    const double cyy = q.c * dy * dy;
    const double bdy = q.b2 * dy;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - q.mx;
        out[i] = dx * (q.a * dx + bdy) + cyy;
    }
}

MaskCounts count_below_scalar(const double* values, const std::uint8_t* mask, std::size_t n,
                              double level) noexcept {
    MaskCounts counts;
    for (std::size_t i = 0; i < n; ++i) {
        if (values[i] <= level) {
            if (mask[i] != 0) {
                ++counts.inside_g;
            } else {
                ++counts.outside_g;
            }
        }
    }
    return counts;
}

const KernelTable& scalar_kernels() noexcept {
    static const KernelTable table{"scalar", &nearest_sample_scalar, &quadform_row_scalar,
                                   &count_below_scalar};
    return table;
}

} // namespace tubefit::simd
