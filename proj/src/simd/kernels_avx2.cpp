// Compiled with -mavx2 only; callers check CPU support before use.

#include <immintrin.h>

#include "kernels_common.hpp"
#include "kernels_internal.hpp"

namespace vsphere::simd::detail {

namespace {

// std::min(x, y) == _mm256_min_pd(y, x) and std::max(x, y) == _mm256_max_pd(y, x)
// for every input, including signed zeros, so lanes match the scalar bodies.

struct Lanes {
    __m256d x, y, z, delta, valid;
};

inline Lanes load(const PixelSpan& px, std::size_t i) {
    Lanes l;
    l.x = _mm256_cvtps_pd(_mm_loadu_ps(px.x + i));
    l.y = _mm256_cvtps_pd(_mm_loadu_ps(px.y + i));
    l.z = _mm256_cvtps_pd(_mm_loadu_ps(px.z + i));
    l.delta = _mm256_cvtps_pd(_mm_loadu_ps(px.delta + i));
    int bytes;
    __builtin_memcpy(&bytes, px.valid + i, 4);
    const __m256d v = _mm256_cvtepi32_pd(_mm_cvtepu8_epi32(_mm_cvtsi32_si128(bytes)));
    l.valid = _mm256_cmp_pd(v, _mm256_setzero_pd(), _CMP_NEQ_OQ);
    return l;
}

inline __m256d row_value(const Lanes& l, const EdgeRow& r) {
    const __m256d a = _mm256_mul_pd(l.x, _mm256_set1_pd(r.nx));
    const __m256d b = _mm256_mul_pd(l.y, _mm256_set1_pd(r.ny));
    const __m256d c = _mm256_mul_pd(l.z, _mm256_set1_pd(r.nz));
    return _mm256_sub_pd(_mm256_add_pd(_mm256_add_pd(a, b), c), _mm256_set1_pd(r.offset));
}

inline __m256d step_value(__m256d g, __m256d delta, StepMode mode, double bias = 0.0) {
    const __m256d one = _mm256_set1_pd(1.0);
    if (mode == StepMode::binary) return _mm256_and_pd(_mm256_cmp_pd(g, _mm256_setzero_pd(), _CMP_GT_OQ), one);
    const __m256d v = _mm256_add_pd(_mm256_mul_pd(g, delta), _mm256_set1_pd(0.5 + bias));
    return _mm256_min_pd(one, _mm256_max_pd(_mm256_setzero_pd(), v));
}

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

void edge_avx2(const PixelSpan& px, const EdgeRow* rows, int n, StepMode mode, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= px.count; i += 4) {
        const Lanes l = load(px, i);
        __m256d m = _mm256_set1_pd(1.0);
        for (int r = 0; r < n; ++r) m = _mm256_min_pd(step_value(row_value(l, rows[r]), l.delta, mode, rows[r].bias), m);
        _mm256_storeu_pd(out + i, _mm256_and_pd(m, l.valid));
    }
    for (; i < px.count; ++i) out[i] = edge_pixel(px, i, rows, n, mode);
}

void line_avx2(const PixelSpan& px, const LineFrame& frame, StepMode mode, double* out) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= px.count; i += 4) {
        const Lanes l = load(px, i);
        const __m256d g = row_value(l, frame.plane);
        __m256d h;
        if (mode == StepMode::binary) {
            const __m256d w = _mm256_sub_pd(_mm256_div_pd(one, l.delta), abs_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), g)));
            h = _mm256_and_pd(_mm256_cmp_pd(w, _mm256_setzero_pd(), _CMP_GT_OQ), one);
        } else {
            h = _mm256_sub_pd(one, _mm256_min_pd(one, _mm256_mul_pd(abs_pd(g), l.delta)));
        }
        const __m256d radial = step_value(row_value(l, frame.radial), l.delta, mode);
        _mm256_storeu_pd(out + i, _mm256_and_pd(_mm256_min_pd(radial, h), l.valid));
    }
    for (; i < px.count; ++i) out[i] = line_pixel(px, i, frame, mode);
}

void particle_avx2(const PixelSpan& px, const ParticleFrame& frame, StepMode mode, double* mask, double* u,
                   double* v) {
    const EdgeRow xr{frame.x_axis.x, frame.x_axis.y, frame.x_axis.z, 0.0};
    const EdgeRow yr{frame.y_axis.x, frame.y_axis.y, frame.y_axis.z, 0.0};
    const __m256d scale = _mm256_set1_pd(frame.uv_scale);
    const __m256d half = _mm256_set1_pd(0.5);
    std::size_t i = 0;
    for (; i + 4 <= px.count; i += 4) {
        const Lanes l = load(px, i);
        // The zero offset subtraction in row_value is exact, matching the scalar body.
        const __m256d m = step_value(row_value(l, frame.disc), l.delta, mode);
        const __m256d uu = _mm256_add_pd(_mm256_mul_pd(row_value(l, xr), scale), half);
        const __m256d vv = _mm256_add_pd(_mm256_mul_pd(row_value(l, yr), scale), half);
        _mm256_storeu_pd(mask + i, _mm256_and_pd(m, l.valid));
        _mm256_storeu_pd(u + i, _mm256_and_pd(uu, l.valid));
        _mm256_storeu_pd(v + i, _mm256_and_pd(vv, l.valid));
    }
    for (; i < px.count; ++i) particle_pixel(px, i, frame, mode, mask, u, v);
}

}  // namespace

const KernelTable kAvx2Table{Isa::avx2, &edge_avx2, &line_avx2, &particle_avx2};

}  // namespace vsphere::simd::detail
