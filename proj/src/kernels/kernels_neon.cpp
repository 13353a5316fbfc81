#include "degenflow/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace degenflow::kernels::neon {

void advance_drifted(std::size_t n, double* z, const double* normals, const double* exp_up,
                     const double* exp_low, const DriftedStep& p, std::uint8_t* hit) {
    const float64x2_t mu = vdupq_n_f64(p.mu_dt), sd = vdupq_n_f64(p.sd), hv = vdupq_n_f64(p.half_var_dt);
    const float64x2_t up = vdupq_n_f64(p.upper), lo = vdupq_n_f64(p.lower), zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t z0 = vld1q_f64(z + i);
        const float64x2_t z1 = vaddq_f64(vaddq_f64(z0, mu), vmulq_f64(sd, vld1q_f64(normals + i)));
        const float64x2_t d0 = vsubq_f64(up, z0), d1 = vsubq_f64(up, z1);
        const float64x2_t e0 = vsubq_f64(z0, lo), e1 = vsubq_f64(z1, lo);
        const uint64x2_t eu = vcleq_f64(d1, zero), el = vcleq_f64(e1, zero);
        const uint64x2_t bu = vcltq_f64(vmulq_f64(d0, d1), vmulq_f64(hv, vld1q_f64(exp_up + i)));
        const uint64x2_t bl = vcltq_f64(vmulq_f64(e0, e1), vmulq_f64(hv, vld1q_f64(exp_low + i)));
        vst1q_f64(z + i, z1);
        for (int k = 0; k < 2; ++k) {
            std::uint8_t h = kNoHit;
            const auto lane = [&](uint64x2_t v) { return k == 0 ? vgetq_lane_u64(v, 0) : vgetq_lane_u64(v, 1); };
            if (lane(eu)) h = kHitUpper;
            else if (lane(el)) h = kHitLower;
            else if (lane(bu)) h = kHitUpper;
            else if (lane(bl)) h = kHitLower;
            hit[i + static_cast<std::size_t>(k)] = h;
        }
    }
    if (i < n) scalar::advance_drifted(n - i, z + i, normals + i, exp_up + i, exp_low + i, p, hit + i);
}

void horner2(const double* c, int n1, int n2, std::size_t n, const double* x1, const double* x2, double* out) {
    const int w = n2 + 1;
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const float64x2_t a = vld1q_f64(x1 + k), b = vld1q_f64(x2 + k);
        float64x2_t acc = vdupq_n_f64(0.0);
        for (int i = n1; i >= 0; --i) {
            float64x2_t inner = vdupq_n_f64(c[i * w + n2]);
            for (int j = n2 - 1; j >= 0; --j) inner = vaddq_f64(vmulq_f64(inner, b), vdupq_n_f64(c[i * w + j]));
            acc = vaddq_f64(vmulq_f64(acc, a), inner);
        }
        vst1q_f64(out + k, acc);
    }
    if (k < n) scalar::horner2(c, n1, n2, n - k, x1 + k, x2 + k, out + k);
}

} // namespace degenflow::kernels::neon

#else

namespace degenflow::kernels::neon {
void advance_drifted(std::size_t n, double* z, const double* normals, const double* exp_up,
                     const double* exp_low, const DriftedStep& p, std::uint8_t* hit) {
    scalar::advance_drifted(n, z, normals, exp_up, exp_low, p, hit);
}
void horner2(const double* c, int n1, int n2, std::size_t n, const double* x1, const double* x2, double* out) {
    scalar::horner2(c, n1, n2, n, x1, x2, out);
}
} // namespace degenflow::kernels::neon

#endif
