#pragma once

#include "degenflow/model_spec.hpp"

#include <optional>
#include <vector>

namespace degenflow {

enum class VertexKind { Sink, Source, Saddle };
const char* to_string(VertexKind k);

/// Linearization at vertex O^k in the local chart x^k: lambda1 is the rate
/// along E^k, lambda2 the rate along E^{k-1} (both edges leave O^k).
struct VertexSpectrum {
    int k = 0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    VertexKind kind = VertexKind::Sink;
    int orientation = 0;         ///< sign of det(v+, v-), saddles only
    double lambda_plus = 0.0;    ///< saddles only
    double lambda_minus = 0.0;   ///< saddles only
    double rho = 0.0;            ///< |lambda-| / lambda+, saddles only
};

struct CycleInfo {
    int orientation = 0;
    std::array<double, 4> rho{};
    double pi = 0.0;
    bool stable = false;
};

/// Eigenvalues at vertex k. The drift Jacobian there is diagonal with edge-aligned
/// eigenvectors, so they are d_i b_i at the vertex. Throws NonHyperbolic if |lambda| < tol_hyp.
VertexSpectrum linearize_vertex(const ModelSpec& m, int k, double tol_hyp = 1e-6);
std::array<VertexSpectrum, 4> vertex_spectra(const ModelSpec& m, double tol_hyp = 1e-6);
/// Builds a spectrum from the two local rates (kind, orientation, rho filled in).
VertexSpectrum make_vertex_spectrum(int k, double lambda1, double lambda2, double tol_hyp = 1e-6);

/// CycleInfo iff all four vertices are saddles of one orientation. Throws
/// NonHyperbolicCycle when |Pi - 1| < tol_pi.
std::optional<CycleInfo> detect_stochastic_cycle(const std::array<VertexSpectrum, 4>& v, double tol_pi = 1e-6);

/// Polynomial vector field (components along x1, x2).
using PolyVec = std::array<Poly2, 2>;
/// [u, v]_i = sum_j (u_j d_j v_i - v_j d_j u_i).
PolyVec lie_bracket(const PolyVec& u, const PolyVec& v);
Vec2 eval(const PolyVec& u, const Vec2& x);

struct HormanderResult {
    bool spans = false;
    int achieved_depth = -1;  ///< bracket depth at which two independent vectors first appear
    bool approximate = false; ///< derivatives were taken by finite differences
};

/// Spans of sigma_1, sigma_2 and iterated brackets with sigma_0 = b, up to max_depth.
/// Depth 0 is the noise fields themselves, depth 1 adds [sigma_i, sigma_j], and so on.
HormanderResult hormander_span(const ModelSpec& m, const Vec2& x, int max_depth = 4, double tol_span = 1e-8);
HormanderResult hormander_span(const PolyVec& b, const PolyVec& s1, const PolyVec& s2, const Vec2& x,
                               int max_depth = 4, double tol_span = 1e-8);

/// Full polynomial fields of a model with polynomial reduced parts.
bool model_is_polynomial(const ModelSpec& m);
PolyVec drift_poly(const ModelSpec& m);
PolyVec noise_poly(const ModelSpec& m, int col);

} // namespace degenflow
