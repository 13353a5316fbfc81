#include "degenflow/kernels.hpp"

namespace degenflow::kernels::scalar {

static inline std::uint8_t classify(double z0, double z1, double eu, double el, const DriftedStep& p) {
    const double d0 = p.upper - z0, d1 = p.upper - z1;
    const double e0 = z0 - p.lower, e1 = z1 - p.lower;
    if (d1 <= 0.0) return kHitUpper;
    if (e1 <= 0.0) return kHitLower;
    if (d0 * d1 < p.half_var_dt * eu) return kHitUpper;
    if (e0 * e1 < p.half_var_dt * el) return kHitLower;
    return kNoHit;
}

void advance_drifted(std::size_t n, double* z, const double* normals, const double* exp_up,
                     const double* exp_low, const DriftedStep& p, std::uint8_t* hit) {
    for (std::size_t i = 0; i < n; ++i) {
        const double z0 = z[i];
        const double z1 = (z0 + p.mu_dt) + p.sd * normals[i];
        hit[i] = classify(z0, z1, exp_up[i], exp_low[i], p);
        z[i] = z1;
    }
}

void horner2(const double* c, int n1, int n2, std::size_t n, const double* x1, const double* x2, double* out) {
    const int w = n2 + 1;
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int i = n1; i >= 0; --i) {
            double inner = c[i * w + n2];
            for (int j = n2 - 1; j >= 0; --j) inner = inner * x2[k] + c[i * w + j];
            acc = acc * x1[k] + inner;
        }
        out[k] = acc;
    }
}

} // namespace degenflow::kernels::scalar
