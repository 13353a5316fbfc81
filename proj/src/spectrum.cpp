#include "degenflow/spectrum.hpp"

#include "degenflow/errors.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace degenflow {

const char* to_string(VertexKind k) {
    switch (k) {
    case VertexKind::Sink: return "sink";
    case VertexKind::Source: return "source";
    default: return "saddle";
    }
}

VertexSpectrum make_vertex_spectrum(int k, double lambda1, double lambda2, double tol_hyp) {
    if (!(std::abs(lambda1) >= tol_hyp) || !(std::abs(lambda2) >= tol_hyp)) {
        std::ostringstream os;
        os << "vertex O" << k << " has eigenvalues (" << lambda1 << ", " << lambda2 << ")";
        throw NonHyperbolic(os.str());
    }
    VertexSpectrum v;
    v.k = k;
    v.lambda1 = lambda1;
    v.lambda2 = lambda2;
    if (lambda1 < 0 && lambda2 < 0) {
        v.kind = VertexKind::Sink;
    } else if (lambda1 > 0 && lambda2 > 0) {
        v.kind = VertexKind::Source;
    } else {
        v.kind = VertexKind::Saddle;
        // The local frame (along E^k, along E^{k-1}) is positively oriented, so
        // det(v+, v-) = +1 exactly when the unstable direction is along E^k.
        v.orientation = lambda1 > 0 ? 1 : -1;
        v.lambda_plus = std::max(lambda1, lambda2);
        v.lambda_minus = std::min(lambda1, lambda2);
        v.rho = -v.lambda_minus / v.lambda_plus;
    }
    return v;
}

VertexSpectrum linearize_vertex(const ModelSpec& m, int k, double tol_hyp) {
    if (m.dim() != 2) throw BadParameters("vertex spectra need a planar model");
    const ModelSpec r = m.rotated(k);
    const Mat2 J = r.drift_jacobian({0.0, 0.0});
    return make_vertex_spectrum(k, J[0][0], J[1][1], tol_hyp);
}

std::array<VertexSpectrum, 4> vertex_spectra(const ModelSpec& m, double tol_hyp) {
    std::array<VertexSpectrum, 4> out;
    for (int k = 0; k < 4; ++k) out[k] = linearize_vertex(m, k, tol_hyp);
    return out;
}

std::optional<CycleInfo> detect_stochastic_cycle(const std::array<VertexSpectrum, 4>& v, double tol_pi) {
    for (const auto& s : v)
        if (s.kind != VertexKind::Saddle) return std::nullopt;
    for (const auto& s : v)
        if (s.orientation != v[0].orientation) return std::nullopt;
    CycleInfo c;
    c.orientation = v[0].orientation;
    c.pi = 1.0;
    for (int k = 0; k < 4; ++k) {
        c.rho[k] = v[k].rho;
        c.pi *= v[k].rho;
    }
    if (std::abs(c.pi - 1.0) < tol_pi) {
        std::ostringstream os;
        os << "stability index " << c.pi << " is within " << tol_pi << " of 1";
        throw NonHyperbolicCycle(os.str());
    }
    c.stable = c.pi > 1.0;
    return c;
}

PolyVec lie_bracket(const PolyVec& u, const PolyVec& v) {
    PolyVec r;
    for (int i = 0; i < 2; ++i)
        r[i] = (u[0] * v[i].d1() + u[1] * v[i].d2() - v[0] * u[i].d1() - v[1] * u[i].d2()).trimmed();
    return r;
}

Vec2 eval(const PolyVec& u, const Vec2& x) { return {u[0].value(x), u[1].value(x)}; }

bool model_is_polynomial(const ModelSpec& m) {
    bool ok = m.p(0).is_poly() && m.p(1).is_poly();
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 2; ++i) ok = ok && m.q(c, i).is_poly();
    return ok;
}

PolyVec drift_poly(const ModelSpec& m) {
    return {m.p(0).poly().times_h(0), m.dim() == 2 ? m.p(1).poly().times_h(1) : Poly2()};
}

PolyVec noise_poly(const ModelSpec& m, int col) {
    return {m.q(col, 0).poly().times_h(0), m.dim() == 2 ? m.q(col, 1).poly().times_h(1) : Poly2()};
}

namespace {

// Generic vector field with a Jacobian; brackets of these use central differences.
struct VField {
    std::function<Vec2(const Vec2&)> f;
    std::function<Mat2(const Vec2&)> jac;
};

Mat2 fd_jacobian(const std::function<Vec2(const Vec2&)>& f, const Vec2& x) {
    const double h = Field::kFdStep;
    Mat2 J{};
    for (int j = 0; j < 2; ++j) {
        Vec2 a = x, b = x;
        a[j] += h;
        b[j] -= h;
        const Vec2 fa = f(a), fb = f(b);
        for (int i = 0; i < 2; ++i) J[i][j] = (fa[i] - fb[i]) / (2 * h);
    }
    return J;
}

VField bracket(const VField& u, const VField& v) {
    VField r;
    r.f = [u, v](const Vec2& x) {
        const Vec2 a = u.f(x), b = v.f(x);
        const Mat2 Ju = u.jac(x), Jv = v.jac(x);
        Vec2 out;
        for (int i = 0; i < 2; ++i) out[i] = a[0] * Jv[i][0] + a[1] * Jv[i][1] - b[0] * Ju[i][0] - b[1] * Ju[i][1];
        return out;
    };
    auto f = r.f;
    r.jac = [f](const Vec2& x) { return fd_jacobian(f, x); };
    return r;
}

template <class V, class Br, class Ev>
HormanderResult span_search(const V& b, const V& s1, const V& s2, const Vec2& x, int max_depth, double tol,
                            Br&& br, Ev&& ev) {
    HormanderResult res;
    std::vector<Vec2> found;
    auto independent = [&](const Vec2& w) {
        const double nw = std::hypot(w[0], w[1]);
        if (nw == 0.0) return false;
        for (const Vec2& u : found) {
            const double det = u[0] * w[1] - u[1] * w[0];
            if (std::abs(det) > tol * nw * std::hypot(u[0], u[1])) return true;
        }
        found.push_back(w);
        return false;
    };
    for (const V* s : {&s1, &s2})
        if (independent(ev(*s, x))) {
            res.spans = true;
            res.achieved_depth = 0;
            return res;
        }
    const V* gens[3] = {&b, &s1, &s2};
    std::vector<V> level;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) level.push_back(br(*gens[i], *gens[j]));
    for (int depth = 1; depth <= max_depth; ++depth) {
        for (const V& w : level)
            if (independent(ev(w, x))) {
                res.spans = true;
                res.achieved_depth = depth;
                return res;
            }
        if (depth == max_depth) break;
        std::vector<V> next;
        for (const V& w : level)
            for (const V* g : gens) next.push_back(br(w, *g));
        level = std::move(next);
    }
    return res;
}

} // namespace

HormanderResult hormander_span(const PolyVec& b, const PolyVec& s1, const PolyVec& s2, const Vec2& x, int max_depth,
                               double tol_span) {
    if (max_depth < 0) throw BadParameters("max_depth must be nonnegative");
    return span_search(b, s1, s2, x, max_depth, tol_span, lie_bracket,
                       [](const PolyVec& u, const Vec2& p) { return eval(u, p); });
}

HormanderResult hormander_span(const ModelSpec& m, const Vec2& x, int max_depth, double tol_span) {
    if (m.dim() != 2) throw BadParameters("the bracket condition is checked for planar models");
    if (model_is_polynomial(m))
        return hormander_span(drift_poly(m), noise_poly(m, 0), noise_poly(m, 1), x, max_depth, tol_span);
    VField b{[&m](const Vec2& z) { return m.drift(z); }, [&m](const Vec2& z) { return m.drift_jacobian(z); }};
    VField s1{[&m](const Vec2& z) { return m.noise(0, z); }, [&m](const Vec2& z) { return m.noise_jacobian(0, z); }};
    VField s2{[&m](const Vec2& z) { return m.noise(1, z); }, [&m](const Vec2& z) { return m.noise_jacobian(1, z); }};
    HormanderResult r = span_search(b, s1, s2, x, max_depth, tol_span, bracket,
                                    [](const VField& u, const Vec2& p) { return u.f(p); });
    r.approximate = r.achieved_depth > 1 || m.approximate();
    return r;
}

} // namespace degenflow
