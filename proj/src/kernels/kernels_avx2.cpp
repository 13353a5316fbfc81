// AVX2 implementations - without FMA, to stay bit-identical with the scalar path.
#include "degenflow/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace degenflow::kernels::avx2 {

void advance_drifted(std::size_t n, double* z, const double* normals, const double* exp_up,
                     const double* exp_low, const DriftedStep& p, std::uint8_t* hit) {
    const __m256d mu = _mm256_set1_pd(p.mu_dt);
    const __m256d sd = _mm256_set1_pd(p.sd);
    const __m256d hv = _mm256_set1_pd(p.half_var_dt);
    const __m256d up = _mm256_set1_pd(p.upper);
    const __m256d lo = _mm256_set1_pd(p.lower);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d z0 = _mm256_loadu_pd(z + i);
        const __m256d z1 = _mm256_add_pd(_mm256_add_pd(z0, mu), _mm256_mul_pd(sd, _mm256_loadu_pd(normals + i)));
        const __m256d d0 = _mm256_sub_pd(up, z0), d1 = _mm256_sub_pd(up, z1);
        const __m256d e0 = _mm256_sub_pd(z0, lo), e1 = _mm256_sub_pd(z1, lo);
        const int end_up = _mm256_movemask_pd(_mm256_cmp_pd(d1, zero, _CMP_LE_OQ));
        const int end_lo = _mm256_movemask_pd(_mm256_cmp_pd(e1, zero, _CMP_LE_OQ));
        const int br_up = _mm256_movemask_pd(
            _mm256_cmp_pd(_mm256_mul_pd(d0, d1), _mm256_mul_pd(hv, _mm256_loadu_pd(exp_up + i)), _CMP_LT_OQ));
        const int br_lo = _mm256_movemask_pd(
            _mm256_cmp_pd(_mm256_mul_pd(e0, e1), _mm256_mul_pd(hv, _mm256_loadu_pd(exp_low + i)), _CMP_LT_OQ));
        _mm256_storeu_pd(z + i, z1);
        for (int k = 0; k < 4; ++k) {
            const int b = 1 << k;
            std::uint8_t h = kNoHit;
            if (end_up & b) h = kHitUpper;
            else if (end_lo & b) h = kHitLower;
            else if (br_up & b) h = kHitUpper;
            else if (br_lo & b) h = kHitLower;
            hit[i + static_cast<std::size_t>(k)] = h;
        }
    }
    if (i < n) scalar::advance_drifted(n - i, z + i, normals + i, exp_up + i, exp_low + i, p, hit + i);
}

void horner2(const double* c, int n1, int n2, std::size_t n, const double* x1, const double* x2, double* out) {
    const int w = n2 + 1;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d a = _mm256_loadu_pd(x1 + k);
        const __m256d b = _mm256_loadu_pd(x2 + k);
        __m256d acc = _mm256_setzero_pd();
        for (int i = n1; i >= 0; --i) {
            __m256d inner = _mm256_set1_pd(c[i * w + n2]);
            for (int j = n2 - 1; j >= 0; --j)
                inner = _mm256_add_pd(_mm256_mul_pd(inner, b), _mm256_set1_pd(c[i * w + j]));
            acc = _mm256_add_pd(_mm256_mul_pd(acc, a), inner);
        }
        _mm256_storeu_pd(out + k, acc);
    }
    if (k < n) scalar::horner2(c, n1, n2, n - k, x1 + k, x2 + k, out + k);
}

} // namespace degenflow::kernels::avx2

#else

namespace degenflow::kernels::avx2 {
void advance_drifted(std::size_t n, double* z, const double* normals, const double* exp_up,
                     const double* exp_low, const DriftedStep& p, std::uint8_t* hit) {
    scalar::advance_drifted(n, z, normals, exp_up, exp_low, p, hit);
}
void horner2(const double* c, int n1, int n2, std::size_t n, const double* x1, const double* x2, double* out) {
    scalar::horner2(c, n1, n2, n, x1, x2, out);
}
} // namespace degenflow::kernels::avx2

#endif
