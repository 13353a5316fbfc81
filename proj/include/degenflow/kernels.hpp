#pragma once

#include <cstddef>
#include <cstdint>

// Batched numeric kernels with a scalar reference and SIMD variants.
// The active variant is picked once at startup from the CPU features;
// DEGENFLOW_SIMD=scalar in the environment forces the reference path.
// All variants perform the same floating-point operations in the same
// order (no FMA contraction), so results are bit-identical.

namespace degenflow::kernels {

enum class Isa { Scalar, Avx2, Neon };

/// Barrier outcome codes written by advance_drifted.
inline constexpr std::uint8_t kNoHit = 0, kHitUpper = 1, kHitLower = 2;

struct DriftedStep {
    double mu_dt;        ///< drift times dt
    double sd;           ///< sqrt(variance rate * dt)
    double half_var_dt;  ///< variance rate * dt / 2, for the bridge test
    double upper;        ///< upper barrier (+inf to disable)
    double lower;        ///< lower barrier (-inf to disable)
};

/// One Euler step z <- z + mu_dt + sd*normal for n paths, followed by the
/// Brownian-bridge barrier test: the bridge between z and z' crosses the
/// upper barrier iff d0*d1 < half_var_dt * e with d = upper - z and e ~ Exp(1).
/// Endpoint crossings take precedence over bridge crossings, upper over lower.
void advance_drifted(std::size_t n, double* z, const double* normals, const double* exp_up,
                     const double* exp_low, const DriftedStep& p, std::uint8_t* hit);

/// Horner evaluation of sum c[i*(n2+1)+j] x1^i x2^j at n points.
void horner2(const double* c, int n1, int n2, std::size_t n, const double* x1, const double* x2, double* out);

Isa active_isa();
const char* isa_name(Isa isa);
/// Whether the given variant can run on this machine.
bool isa_available(Isa isa);

namespace scalar {
void advance_drifted(std::size_t n, double* z, const double* normals, const double* exp_up,
                     const double* exp_low, const DriftedStep& p, std::uint8_t* hit);
void horner2(const double* c, int n1, int n2, std::size_t n, const double* x1, const double* x2, double* out);
} // namespace scalar

namespace avx2 {
void advance_drifted(std::size_t n, double* z, const double* normals, const double* exp_up,
                     const double* exp_low, const DriftedStep& p, std::uint8_t* hit);
void horner2(const double* c, int n1, int n2, std::size_t n, const double* x1, const double* x2, double* out);
} // namespace avx2

namespace neon {
void advance_drifted(std::size_t n, double* z, const double* normals, const double* exp_up,
                     const double* exp_low, const DriftedStep& p, std::uint8_t* hit);
void horner2(const double* c, int n1, int n2, std::size_t n, const double* x1, const double* x2, double* out);
} // namespace neon

} // namespace degenflow::kernels
