#include "doctest.h"

#include "degenflow/errors.hpp"
#include "degenflow/rng.hpp"
#include "degenflow/spectrum.hpp"
#include "helpers.hpp"

#include <cmath>

using namespace degenflow;
using testing_helpers::diagonal_model;

namespace {

// b1 = h(x1)(a + c x2), b2 = h(x2)(d + e x1).
ModelSpec affine_rates(double a, double c, double d, double e, double eps = 0.2) {
    ModelSpec::QTable q;
    q[0][0] = Field::constant(eps);
    q[1][1] = Field::constant(eps);
    return ModelSpec::factored("affine", Field(Poly2({{a, c}})), Field(Poly2({{d}, {e}})), q);
}

std::array<VertexSpectrum, 4> saddle_ring(const std::array<double, 4>& rho) {
    std::array<VertexSpectrum, 4> v;
    for (int k = 0; k < 4; ++k) v[k] = make_vertex_spectrum(k, 1.0, -rho[k]);
    return v;
}

ModelSpec case_study() {
    ModelSpec::QTable q;
    q[0][0] = Field::constant(0.4);
    q[1][1] = Field::constant(0.4);
    return ModelSpec::factored("cs", Field(Poly2({{-1.0, 2.0}, {2.0, -4.0}})),
                               Field(Poly2({{-1.0, 1.5}, {2.0, -5.5}})), q);
}

} // namespace

TEST_CASE("model: vertex rates are the diagonal Jacobian entries") {
    const ModelSpec m = affine_rates(0.7, 0.3, -1.3, 2.0);
    const VertexSpectrum v = linearize_vertex(m, 0);
    CHECK(v.lambda1 == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(v.lambda2 == doctest::Approx(-1.3).epsilon(1e-14));
}

TEST_CASE("model: saddle with rho 2 and a sink") {
    const VertexSpectrum s = linearize_vertex(affine_rates(1.0, 0.0, -2.0, 0.0), 0);
    CHECK(s.kind == VertexKind::Saddle);
    CHECK(s.rho == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s.orientation == 1);
    CHECK(s.lambda_plus == doctest::Approx(1.0));
    CHECK(s.lambda_minus == doctest::Approx(-2.0));

    const VertexSpectrum flipped = linearize_vertex(affine_rates(-2.0, 0.0, 1.0, 0.0), 0);
    CHECK(flipped.orientation == -1);
    CHECK(flipped.rho == doctest::Approx(2.0));

    CHECK(linearize_vertex(affine_rates(-1.0, 0.0, -1.0, 0.0), 0).kind == VertexKind::Sink);
    CHECK(linearize_vertex(affine_rates(1.0, 0.0, 0.5, 0.0), 0).kind == VertexKind::Source);
}

TEST_CASE("model: NonHyperbolic on a zero rate") {
    CHECK_THROWS_AS(linearize_vertex(affine_rates(0.0, 1.0, -1.0, 0.0), 0), NonHyperbolic);
    CHECK_THROWS_AS(linearize_vertex(affine_rates(1.0, 0.0, 5e-7, 0.0), 0), NonHyperbolic);
}

TEST_CASE("model: the other vertices read off the local charts") {
    // At O^1 = (1,0): along E^1 (x2 up) rate is b2 rate d + e, along E^0 (x1 down) rate is -(a).
    const ModelSpec m = affine_rates(0.7, 0.3, -1.3, 2.0);
    const VertexSpectrum v1 = linearize_vertex(m, 1);
    CHECK(v1.lambda1 == doctest::Approx(-1.3 + 2.0).epsilon(1e-13));
    CHECK(v1.lambda2 == doctest::Approx(-0.7).epsilon(1e-13));
}

TEST_CASE("model: stochastic cycle index") {
    const auto c = detect_stochastic_cycle(saddle_ring({2, 2, 2, 2}));
    REQUIRE(c.has_value());
    CHECK(c->pi == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(c->stable);
    CHECK(c->orientation == 1);

    CHECK_THROWS_AS(detect_stochastic_cycle(saddle_ring({0.5, 2, 0.5, 2})), NonHyperbolicCycle);

    auto v = saddle_ring({2, 2, 2, 2});
    v[2] = make_vertex_spectrum(2, -1.0, -1.0);
    CHECK_FALSE(detect_stochastic_cycle(v).has_value());

    auto mixed = saddle_ring({2, 2, 2, 2});
    mixed[1] = make_vertex_spectrum(1, -2.0, 1.0);
    CHECK_FALSE(detect_stochastic_cycle(mixed).has_value());

    const auto u = detect_stochastic_cycle(saddle_ring({0.5, 0.8, 0.5, 0.9}));
    REQUIRE(u.has_value());
    CHECK_FALSE(u->stable);
}

TEST_CASE("model: Pi is invariant under cyclic relabeling and inverted by reversal") {
    const std::array<double, 4> rho{1.3, 0.7, 2.9, 0.45};
    const double pi = detect_stochastic_cycle(saddle_ring(rho))->pi;
    CHECK(pi == doctest::Approx(rho[0] * rho[1] * rho[2] * rho[3]).epsilon(1e-12));
    for (int s = 1; s < 4; ++s) {
        std::array<double, 4> r;
        for (int k = 0; k < 4; ++k) r[k] = rho[(k + s) % 4];
        CHECK(detect_stochastic_cycle(saddle_ring(r))->pi == doctest::Approx(pi).epsilon(1e-12));
    }
    // Reversing the drift swaps the roles of lambda+ and lambda-.
    std::array<VertexSpectrum, 4> rev;
    for (int k = 0; k < 4; ++k) rev[k] = make_vertex_spectrum(k, -1.0, rho[k]);
    const auto cr = detect_stochastic_cycle(rev);
    REQUIRE(cr.has_value());
    CHECK(cr->orientation == -1);
    CHECK(cr->pi == doctest::Approx(1.0 / pi).epsilon(1e-12));
}

TEST_CASE("model: rotation permutes the vertex spectra") {
    const ModelSpec m = case_study();
    const auto base = vertex_spectra(m);
    const auto c0 = detect_stochastic_cycle(base);
    for (int s = 1; s < 4; ++s) {
        const auto rot = vertex_spectra(m.rotated(s));
        for (int k = 0; k < 4; ++k) {
            CHECK(rot[k].lambda1 == doctest::Approx(base[(k + s) % 4].lambda1).epsilon(1e-13));
            CHECK(rot[k].lambda2 == doctest::Approx(base[(k + s) % 4].lambda2).epsilon(1e-13));
            CHECK(rot[k].kind == base[(k + s) % 4].kind);
        }
        const auto cr = detect_stochastic_cycle(rot);
        REQUIRE(cr.has_value() == c0.has_value());
        if (c0) CHECK(cr->pi == doctest::Approx(c0->pi).epsilon(1e-13));
    }
}

TEST_CASE("model: scaling the drift scales the rates, not the ratios") {
    const ModelSpec m = case_study();
    const auto base = vertex_spectra(m);
    for (double c : {0.25, 3.0}) {
        const auto sc = vertex_spectra(m.scaled_drift(c));
        for (int k = 0; k < 4; ++k) {
            CHECK(sc[k].lambda1 == doctest::Approx(c * base[k].lambda1).epsilon(1e-13));
            CHECK(sc[k].lambda2 == doctest::Approx(c * base[k].lambda2).epsilon(1e-13));
            if (base[k].kind == VertexKind::Saddle) CHECK(sc[k].rho == doctest::Approx(base[k].rho).epsilon(1e-13));
        }
        const auto a = detect_stochastic_cycle(base), b = detect_stochastic_cycle(sc);
        REQUIRE(a.has_value() == b.has_value());
        if (a) CHECK(b->pi == doctest::Approx(a->pi).epsilon(1e-13));
    }
}

TEST_CASE("model: case-study preset vertex types") {
    const auto v = vertex_spectra(case_study());
    CHECK(v[0].kind == VertexKind::Sink);
    CHECK(v[0].lambda1 == doctest::Approx(-1.0));
    CHECK(v[1].kind == VertexKind::Saddle);
    CHECK(v[1].lambda1 == doctest::Approx(1.0));
    CHECK(v[1].lambda2 == doctest::Approx(-1.0));
    CHECK(v[2].kind == VertexKind::Source);
    CHECK(v[2].lambda1 == doctest::Approx(1.0));
    CHECK(v[2].lambda2 == doctest::Approx(3.0));
    CHECK(v[3].kind == VertexKind::Saddle);
    CHECK(v[3].lambda1 == doctest::Approx(-0.5));
    CHECK(v[3].lambda2 == doctest::Approx(1.0));
    CHECK_FALSE(detect_stochastic_cycle(v).has_value());
}

TEST_CASE("model: Hormander span at depth 0 for elliptic noise") {
    const auto r = hormander_span(diagonal_model(1.0, -1.0, 0.3), {0.4, 0.6});
    CHECK(r.spans);
    CHECK(r.achieved_depth == 0);
}

TEST_CASE("model: Hormander span via one bracket with the drift") {
    // sigma_1 = (h(x1), 0), sigma_2 = 0, b = (0, h(x2) x1).
    ModelSpec::QTable q;
    q[0][0] = Field::constant(1.0);
    const ModelSpec m = ModelSpec::factored("hypo", Field(), Field(Poly2({{0.0}, {1.0}})), q);
    const auto r = hormander_span(m, {0.3, 0.4});
    CHECK(r.spans);
    CHECK(r.achieved_depth == 1);
    CHECK_FALSE(r.approximate);

    // Same fields given as callables go through the finite-difference route.
    ModelSpec::QTable qf;
    qf[0][0] = Field::function([](const Vec2&) { return 1.0; });
    const ModelSpec mf = ModelSpec::factored("hypo_fd", Field::function([](const Vec2&) { return 0.0; }),
                                             Field::function([](const Vec2& x) { return x[0]; }), qf);
    const auto rf = hormander_span(mf, {0.3, 0.4});
    CHECK(rf.spans);
    CHECK(rf.achieved_depth == 1);
}

TEST_CASE("model: no span when every field vanishes") {
    const ModelSpec zero = ModelSpec::factored("zero", Field(), Field(), {});
    for (int d : {1, 2, 4}) CHECK_FALSE(hormander_span(zero, {0.5, 0.5}, d).spans);
}

TEST_CASE("model: Lie bracket is antisymmetric") {
    Rng rng(11, 0);
    auto random_poly = [&](int n) {
        std::vector<std::vector<double>> t(static_cast<std::size_t>(n + 1), std::vector<double>(static_cast<std::size_t>(n + 1)));
        for (auto& row : t)
            for (double& c : row) c = 2 * rng.uniform() - 1;
        return Poly2(t);
    };
    for (int trial = 0; trial < 20; ++trial) {
        const PolyVec u{random_poly(2), random_poly(3)}, v{random_poly(3), random_poly(2)};
        const PolyVec uv = lie_bracket(u, v), vu = lie_bracket(v, u);
        const Vec2 x{rng.uniform(), rng.uniform()};
        const Vec2 a = eval(uv, x), b = eval(vu, x);
        CHECK(std::abs(a[0] + b[0]) < 1e-10);
        CHECK(std::abs(a[1] + b[1]) < 1e-10);
    }
}
