// AArch64 only; NEON is part of the base ISA there so no runtime check is needed.
#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace tubefit::simd {

namespace {

std::size_t nearest_sample_neon(const double* sx, const double* sy, const double* sz,
                                std::size_t n, double x, double y, double z) noexcept {
    if (n < 4) {
        return nearest_sample_scalar(sx, sy, sz, n, x, y, z);
    }
    const float64x2_t px = vdupq_n_f64(x);
    const float64x2_t py = vdupq_n_f64(y);
    const float64x2_t pz = vdupq_n_f64(z);
    const float64x2_t step = vdupq_n_f64(2.0);
    const double idx0[2] = {0.0, 1.0};
    float64x2_t idx = vld1q_f64(idx0);
    float64x2_t best = vdupq_n_f64(__builtin_inf());
    float64x2_t best_idx = vdupq_n_f64(0.0);

    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t dx = vsubq_f64(vld1q_f64(sx + i), px);
        const float64x2_t dy = vsubq_f64(vld1q_f64(sy + i), py);
        const float64x2_t dz = vsubq_f64(vld1q_f64(sz + i), pz);
        const float64x2_t d2 =
            vaddq_f64(vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy)), vmulq_f64(dz, dz));
        const uint64x2_t lt = vcltq_f64(d2, best);
        best = vbslq_f64(lt, d2, best);
        best_idx = vbslq_f64(lt, idx, best_idx);
        idx = vaddq_f64(idx, step);
    }

    double best_d2 = vgetq_lane_f64(best, 0);
    double best_i = vgetq_lane_f64(best_idx, 0);
    const double d1 = vgetq_lane_f64(best, 1);
    const double i1 = vgetq_lane_f64(best_idx, 1);
    if (d1 < best_d2 || (d1 == best_d2 && i1 < best_i)) {
        best_d2 = d1;
        best_i = i1;
    }
    std::size_t result = static_cast<std::size_t>(best_i);
    for (; i < n; ++i) {
        const double dx = sx[i] - x;
        const double dy = sy[i] - y;
        const double dz = sz[i] - z;
        const double d2 = (dx * dx + dy * dy) + dz * dz;
        if (d2 < best_d2) {
            best_d2 = d2;
            result = i;
        }
    }
    return result;
}

void quadform_row_neon(const double* xs, std::size_t n, double y, const QuadForm& q,
                       double* out) noexcept {
    const double dy = y - q.my;
    const double cyy = q.c * dy * dy;
    const double bdy = q.b2 * dy;
    const float64x2_t vmx = vdupq_n_f64(q.mx);
    const float64x2_t va = vdupq_n_f64(q.a);
    const float64x2_t vbdy = vdupq_n_f64(bdy);
    const float64x2_t vcyy = vdupq_n_f64(cyy);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t dx = vsubq_f64(vld1q_f64(xs + i), vmx);
        const float64x2_t inner = vaddq_f64(vmulq_f64(va, dx), vbdy);
        vst1q_f64(out + i, vaddq_f64(vmulq_f64(dx, inner), vcyy));
    }
    for (; i < n; ++i) {
        const double dx = xs[i] - q.mx;
        out[i] = dx * (q.a * dx + bdy) + cyy;
    }
}

MaskCounts count_below_neon(const double* values, const std::uint8_t* mask, std::size_t n,
                            double level) noexcept {
    const float64x2_t vlevel = vdupq_n_f64(level);
    std::uint64_t inside = 0;
    std::uint64_t total = 0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint64x2_t le = vcleq_f64(vld1q_f64(values + i), vlevel);
        const bool l0 = vgetq_lane_u64(le, 0) != 0;
        const bool l1 = vgetq_lane_u64(le, 1) != 0;
        total += static_cast<std::uint64_t>(l0) + static_cast<std::uint64_t>(l1);
        inside += static_cast<std::uint64_t>(l0 && mask[i] != 0) +
                  static_cast<std::uint64_t>(l1 && mask[i + 1] != 0);
    }
    MaskCounts tail = count_below_scalar(values + i, mask + i, n - i, level);
    MaskCounts counts;
    counts.inside_g = inside + tail.inside_g;
    counts.outside_g = (total - inside) + tail.outside_g;
    return counts;
}

} // namespace

const KernelTable& neon_table() noexcept {
    static const KernelTable table{"neon", &nearest_sample_neon, &quadform_row_neon,
                                   &count_below_neon};
    return table;
}

} // namespace tubefit::simd
