// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include "kernels_impl.hpp"

namespace tubefit::simd {

namespace {

std::size_t nearest_sample_avx2(const double* sx, const double* sy, const double* sz,
                                std::size_t n, double x, double y, double z) noexcept {
    if (n < 8) {
        return nearest_sample_scalar(sx, sy, sz, n, x, y, z);
    }
    const __m256d px = _mm256_set1_pd(x);
    const __m256d py = _mm256_set1_pd(y);
    const __m256d pz = _mm256_set1_pd(z);
    const __m256d step = _mm256_set1_pd(4.0);
    __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    __m256d best = _mm256_set1_pd(__builtin_inf());
    __m256d best_idx = _mm256_setzero_pd();

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(sx + i), px);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(sy + i), py);
        const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(sz + i), pz);
        const __m256d d2 = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)), _mm256_mul_pd(dz, dz));
        const __m256d lt = _mm256_cmp_pd(d2, best, _CMP_LT_OQ);
        best = _mm256_blendv_pd(best, d2, lt);
        best_idx = _mm256_blendv_pd(best_idx, idx, lt);
        idx = _mm256_add_pd(idx, step);
    }

    alignas(32) double lane_d2[4];
    alignas(32) double lane_idx[4];
    _mm256_store_pd(lane_d2, best);
    _mm256_store_pd(lane_idx, best_idx);
    double best_d2 = lane_d2[0];
    double best_i = lane_idx[0];
    for (int l = 1; l < 4; ++l) {
        if (lane_d2[l] < best_d2 || (lane_d2[l] == best_d2 && lane_idx[l] < best_i)) {
            best_d2 = lane_d2[l];
            best_i = lane_idx[l];
        }
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

void quadform_row_avx2(const double* xs, std::size_t n, double y, const QuadForm& q,
                       double* out) noexcept {
    const double dy = y - q.my;
    const double cyy = q.c * dy * dy;
    const double bdy = q.b2 * dy;
    const __m256d vmx = _mm256_set1_pd(q.mx);
    const __m256d va = _mm256_set1_pd(q.a);
    const __m256d vbdy = _mm256_set1_pd(bdy);
    const __m256d vcyy = _mm256_set1_pd(cyy);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vmx);
        const __m256d inner = _mm256_add_pd(_mm256_mul_pd(va, dx), vbdy);
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_mul_pd(dx, inner), vcyy));
    }
    for (; i < n; ++i) {
        const double dx = xs[i] - q.mx;
        out[i] = dx * (q.a * dx + bdy) + cyy;
    }
}

MaskCounts count_below_avx2(const double* values, const std::uint8_t* mask, std::size_t n,
                            double level) noexcept {
    const __m256d vlevel = _mm256_set1_pd(level);
    std::uint64_t inside = 0;
    std::uint64_t total = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const int le = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(values + i), vlevel, _CMP_LE_OQ));
        const int m = (mask[i] != 0 ? 1 : 0) | (mask[i + 1] != 0 ? 2 : 0) |
                      (mask[i + 2] != 0 ? 4 : 0) | (mask[i + 3] != 0 ? 8 : 0);
        total += static_cast<std::uint64_t>(__builtin_popcount(static_cast<unsigned>(le)));
        inside += static_cast<std::uint64_t>(__builtin_popcount(static_cast<unsigned>(le & m)));
    }
    MaskCounts tail = count_below_scalar(values + i, mask + i, n - i, level);
    MaskCounts counts;
    counts.inside_g = inside + tail.inside_g;
    counts.outside_g = (total - inside) + tail.outside_g;
    return counts;
}

} // namespace

const KernelTable& avx2_table() noexcept {
    static const KernelTable table{"avx2", &nearest_sample_avx2, &quadform_row_avx2,
                                   &count_below_avx2};
    return table;
}

} // namespace tubefit::simd
