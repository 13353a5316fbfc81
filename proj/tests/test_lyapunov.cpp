#include "doctest.h"

#include "degenflow/errors.hpp"
#include "degenflow/lyapunov.hpp"
#include "helpers.hpp"

#include <cmath>

using namespace degenflow;
using testing_helpers::diagonal_model;

namespace {

ModelSpec with_noise(const char* name, Poly2 p1, Poly2 p2, double eps) {
    ModelSpec::QTable q;
    q[0][0] = Field::constant(eps);
    q[1][1] = Field::constant(eps);
    return ModelSpec::factored(name, Field(std::move(p1)), Field(std::move(p2)), q);
}

ModelSpec case_study() {
    return with_noise("cs", Poly2({{-1.0, 2.0}, {2.0, -4.0}}), Poly2({{-1.0, 1.5}, {2.0, -5.5}}), 0.5);
}

ModelSpec scenario_three() {
    return with_noise("s3", Poly2({{1.0, 0.5}, {0.0, -3.0}}), Poly2({{1.0, 0.0}, {0.5, -3.0}}), 0.5);
}

// Central differences of the value in x.
Jet2 fd_jet(const LyapunovFn& f, const Vec2& x) {
    const double h = 1e-5;
    Jet2 j;
    j.v = f(x);
    for (int i = 0; i < 2; ++i) {
        Vec2 a = x, b = x;
        a[i] += h;
        b[i] -= h;
        j.g[i] = (f(a) - f(b)) / (2 * h);
    }
    const double h2 = 1e-4;
    auto at = [&](double d1, double d2) { return f({x[0] + d1, x[1] + d2}); };
    j.h.h11 = (at(h2, 0) - 2 * j.v + at(-h2, 0)) / (h2 * h2);
    j.h.h22 = (at(0, h2) - 2 * j.v + at(0, -h2)) / (h2 * h2);
    j.h.h12 = (at(h2, h2) - at(h2, -h2) - at(-h2, h2) + at(-h2, -h2)) / (4 * h2 * h2);
    return j;
}

} // namespace

TEST_CASE("lyapunov: closed-form values") {
    const LyapunovFn e = LyapunovFn::edge(1.0, nullptr);
    for (Vec2 x : {Vec2{0.3, 0.01}, Vec2{0.9, 0.5}, Vec2{0.5, 1e-9}}) CHECK(e(x) == doctest::Approx(std::log(x[1])).epsilon(1e-14));
    const LyapunovFn c = LyapunovFn::corner(1.0, 1.0);
    CHECK(c({std::exp(-1.0), std::exp(-1.0)}) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(c.kind() == LyapunovKind::Corner);
    CHECK(e.kind() == LyapunovKind::Edge);
}

TEST_CASE("lyapunov: rotated corner uses the local coordinates") {
    // From O^1 = (1, 0): x^1 = (x2, 1 - x1).
    const LyapunovFn c = LyapunovFn::corner(0.7, 1.3, 1);
    const Vec2 x{0.8, 0.15};
    CHECK(c(x) == doctest::Approx(-0.7 * std::log(0.15) - 1.3 * std::log(0.2)).epsilon(1e-12));
    const LyapunovFn c3 = LyapunovFn::corner(0.7, 1.3, 3);
    // From O^3 = (0, 1): x^3 = (1 - x2, x1).
    CHECK(c3(x) == doctest::Approx(-0.7 * std::log(0.85) - 1.3 * std::log(0.8)).epsilon(1e-12));
    for (int k = 0; k < 4; ++k) {
        const Vec2 y{0.3, -2.0};
        const Vec2 back = from_local_y(to_local_y(y, k), k);
        CHECK(back[0] == y[0]);
        CHECK(back[1] == y[1]);
    }
}

TEST_CASE("lyapunov: analytic x-derivatives agree with finite differences") {
    const LyapunovFn::Eval poly = [](const Vec2& y) {
        Jet2 j;
        j.v = y[0] * y[0] * y[1] + std::sin(y[1]);
        j.g = {2 * y[0] * y[1], y[0] * y[0] + std::cos(y[1])};
        j.h.h11 = 2 * y[1];
        j.h.h22 = -std::sin(y[1]);
        j.h.h12 = 2 * y[0];
        return j;
    };
    for (const LyapunovFn& f : {LyapunovFn::corner(0.4, -1.1, 2), LyapunovFn::edge(-1.7, nullptr, 3),
                                LyapunovFn::corner(1.0, 2.0, 0), LyapunovFn::extended(poly, "poly")}) {
        for (Vec2 x : {Vec2{0.3, 0.6}, Vec2{0.2, 0.85}, Vec2{0.55, 0.45}}) {
            const Jet2 a = f.eval_x(x), b = fd_jet(f, x);
            CHECK(a.v == doctest::Approx(b.v).epsilon(1e-12));
            CHECK(a.g[0] == doctest::Approx(b.g[0]).epsilon(1e-6));
            CHECK(a.g[1] == doctest::Approx(b.g[1]).epsilon(1e-6));
            CHECK(a.h.h11 == doctest::Approx(b.h.h11).epsilon(1e-4));
            CHECK(a.h.h22 == doctest::Approx(b.h.h22).epsilon(1e-4));
            CHECK(a.h.h12 == doctest::Approx(b.h.h12).epsilon(1e-4).scale(1.0));
        }
    }
}

TEST_CASE("lyapunov: corrector derivatives are mutually consistent") {
    const Corrector c = solve_corrector(case_study(), 2);
    const double h = 1e-3;
    for (double y : {-2.0, -0.5, 0.7, 1.3, 2.5}) {
        const double d1 = (c.psi_y(y + h) - c.psi_y(y - h)) / (2 * h);
        CHECK(c.psi_yy(y) == doctest::Approx(d1).epsilon(1e-5));
        // The spline carries psi itself, so its slope is only accurate to the grid.
        const double d0 = (c.psi(y + h) - c.psi(y - h)) / (2 * h);
        CHECK(c.psi_y(y) == doctest::Approx(d0).epsilon(1e-5));
    }
}

TEST_CASE("lyapunov: generator in the chart equals the generator in x") {
    const ModelSpec m = case_study();
    auto psi = std::make_shared<Corrector>(solve_corrector(m, 1));
    const LyapunovFn f = LyapunovFn::edge(3.0, psi, 1);
    for (Vec2 x : {Vec2{0.3, 0.6}, Vec2{0.8, 0.2}, Vec2{0.6, 0.7}}) {
        const double lx = m.generator_apply([&f](const Vec2& z) { return f.eval_x(z); }, x);
        const double ly = f.generator(m, {chart::y_of_x(x[0]), chart::y_of_x(x[1])});
        CHECK(ly == doctest::Approx(lx).epsilon(1e-10));
    }
}

TEST_CASE("lyapunov: corner generator tends to the linear rates at the vertex") {
    const ModelSpec m = diagonal_model(1.0, -2.0, 0.4);
    const VertexSpectrum v = linearize_vertex(m, 0);
    double target, hw;
    corner_band(v, 1.0, 1.0, target, hw);
    CHECK(target == doctest::Approx(1.0));
    CHECK(hw == doctest::Approx(1.5));
    const BandReport r = verify_generator_band(m, LyapunovFn::corner(1.0, 1.0), {BandRegion::Kind::Corner, 0, 0.2},
                                               target, hw, 1024);
    CHECK(r.satisfied);
    CHECK(r.r_found == doctest::Approx(0.2));
    // Deviation shrinks with the distance to O^0.
    CHECK(r.level_deviation.front() < 1e-9);
    for (std::size_t i = 8; i < r.levels.size(); i += 8) CHECK(r.level_deviation[i] > r.level_deviation[i - 8]);
}

TEST_CASE("lyapunov: zero weight gives a zero generator") {
    const ModelSpec m = case_study();
    const BandReport r =
        verify_generator_band(m, LyapunovFn::edge(0.0, nullptr, 1), {BandRegion::Kind::Edge, 1, 0.3}, 0.0, 1e-300, 400);
    CHECK(r.satisfied);
    CHECK(r.max_deviation == 0.0);
}

TEST_CASE("lyapunov: edge band holds near an attracting edge") {
    const ModelSpec m = case_study();
    const EdgeSpectrum s = edge_spectrum(m, 1);
    REQUIRE(s.lambda2_bar < 0.0);
    auto psi = std::make_shared<Corrector>(solve_corrector(m, 1));
    const double theta = -2.5 / s.lambda2_bar;
    double target, hw;
    edge_band(theta, s.lambda2_bar, target, hw);
    CHECK(target < -2.0);
    const BandReport r =
        verify_generator_band(m, LyapunovFn::edge(theta, psi, 1), {BandRegion::Kind::Edge, 1, 0.25}, target, hw, 2500);
    CHECK(r.r_found > 0.01);
    CHECK(r.level_deviation.front() < 1e-8);
    const BandReport inner =
        verify_generator_band(m, LyapunovFn::edge(theta, psi, 1), {BandRegion::Kind::Edge, 1, r.r_found * 0.99},
                              target, hw, 2500);
    CHECK(inner.satisfied);
}

TEST_CASE("lyapunov: edge band on the acyclic preset") {
    const ModelSpec m = scenario_three();
    for (int k : {1, 2}) {
        const EdgeSpectrum s = edge_spectrum(m, k);
        REQUIRE(s.in_S);
        REQUIRE(s.lambda2_bar > 0.0);
        auto psi = std::make_shared<Corrector>(solve_corrector(m, k));
        const double theta = -2.5 / s.lambda2_bar;
        double target, hw;
        edge_band(theta, s.lambda2_bar, target, hw);
        const BandReport r = verify_generator_band(m, LyapunovFn::edge(theta, psi, k), {BandRegion::Kind::Edge, k, 0.25},
                                                   target, hw, 2500);
        CHECK(r.r_found > 0.0);
        CHECK(r.level_deviation.front() < 1e-8);
    }
}

TEST_CASE("lyapunov: band radius must be admissible") {
    CHECK_THROWS_AS(verify_generator_band(case_study(), LyapunovFn::corner(1, 1), {BandRegion::Kind::Corner, 0, 0.0},
                                          0.0, 1.0),
                    BadParameters);
}
