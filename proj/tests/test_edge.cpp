#include "doctest.h"

#include "degenflow/edge.hpp"
#include "degenflow/errors.hpp"
#include "degenflow/quadrature.hpp"
#include "degenflow/spectrum.hpp"
#include "helpers.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace degenflow;
using testing_helpers::diagonal_model;

namespace {

// b = x(1-x)(a - (a+b) x), sigma = eps x(1-x): the density is Beta(2a/eps^2, 2b/eps^2).
ModelSpec beta_edge(double a, double b, double eps) {
    return ModelSpec::factored_1d("beta", Field(Poly2::univariate({a, -(a + b)})), Field::constant(eps));
}

double beta_pdf(double x, double p, double q) {
    return std::exp((p - 1) * std::log(x) + (q - 1) * std::log1p(-x) + std::lgamma(p + q) - std::lgamma(p) -
                    std::lgamma(q));
}

// Planar model whose E^0 restriction is beta_edge(a, b, eps) and whose transversal
// reduced drift is p2.
ModelSpec plane_over_edge(double a, double b, double eps, Field p2) {
    ModelSpec::QTable q;
    q[0][0] = Field::constant(eps);
    q[1][1] = Field::constant(eps);
    return ModelSpec::factored("plane", Field(Poly2({{a}, {-(a + b)}})), std::move(p2), q);
}

ModelSpec case_study(double eps = 0.5) {
    ModelSpec::QTable q;
    q[0][0] = Field::constant(eps);
    q[1][1] = Field::constant(eps);
    return ModelSpec::factored("cs", Field(Poly2({{-1.0, 2.0}, {2.0, -4.0}})),
                               Field(Poly2({{-1.0, 1.5}, {2.0, -5.5}})), q);
}

} // namespace

TEST_CASE("edge: restriction of a diagonal model") {
    const ModelSpec m = diagonal_model(0.7, -0.4, 0.3);
    const ModelSpec e = m.edge_restriction(0);
    REQUIRE(e.dim() == 1);
    for (double x : {0.1, 0.5, 0.85}) {
        CHECK(e.drift({x, 0.0})[0] == doctest::Approx(m.drift({x, 0.0})[0]).epsilon(1e-14));
        CHECK(e.noise(0, {x, 0.0})[0] == doctest::Approx(m.noise(0, {x, 0.0})[0]).epsilon(1e-14));
        CHECK(e.noise(1, {x, 0.0})[0] == 0.0);
    }
}

TEST_CASE("edge: restriction of the zero model is zero") {
    const ModelSpec z = ModelSpec::factored("zero", Field(), Field(), {});
    for (int k = 0; k < 4; ++k) {
        const ModelSpec e = z.edge_restriction(k);
        for (double x : {0.2, 0.6}) {
            CHECK(e.drift({x, 0.0})[0] == 0.0);
            CHECK(e.noise(0, {x, 0.0})[0] == 0.0);
        }
    }
}

TEST_CASE("edge: restriction of a product model keeps f") {
    // b1 = f(x1) = x1(1-x1)(1 + 2 x1), b2 = x2(1-x2)(x1 + x2).
    const Poly2 h1 = Poly2::x1() * (Poly2::constant(1.0) - Poly2::x1());
    const Poly2 h2 = Poly2::x2() * (Poly2::constant(1.0) - Poly2::x2());
    const Poly2 f = h1 * Poly2::univariate({1.0, 2.0});
    const Poly2 b2 = h2 * (Poly2::x1() + Poly2::x2());
    const ModelSpec m = ModelSpec::from_raw("prod", {f, b2}, {{{h1 * 0.3, Poly2()}, {Poly2(), h2 * 0.3}}});
    const ModelSpec e = m.edge_restriction(0);
    for (double x : {0.05, 0.4, 0.77}) CHECK(e.drift({x, 0.0})[0] == doctest::Approx(f(x, 0.0)).epsilon(1e-13));
}

TEST_CASE("edge: zero drift and constant diffusion give a uniform density") {
    const auto d = StationaryDensity::on_interval([](double, double& l, double& S) { l = 0.0; S = 0.64; }, -1.0, 2.0);
    for (double y : {-0.9, 0.0, 0.5, 1.99}) CHECK(d.pdf_y(y) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(d.expect([](double y) { return y; }) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.pdf_y(2.5) == 0.0);
}

TEST_CASE("edge: reflecting Brownian motion on an interval has gap (pi/L)^2 S/2") {
    const auto d = StationaryDensity::on_interval([](double, double& l, double& S) { l = 0.0; S = 2.0; }, 0.0, M_PI);
    CHECK(d.spectral_gap(2000) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("edge: density matches the Beta closed form") {
    for (auto [a, b, eps] : {std::tuple{2.0, 2.0, 0.8}, std::tuple{1.0, 3.0, 0.7}, std::tuple{0.4, 0.9, 1.1}}) {
        const auto d = StationaryDensity::for_edge(beta_edge(a, b, eps));
        const double p = 2 * a / (eps * eps), q = 2 * b / (eps * eps);
        for (double x : {0.01, 0.2, 0.5, 0.73, 0.97})
            CHECK(d.pdf_x(x) == doctest::Approx(beta_pdf(x, p, q)).epsilon(1e-9));
        CHECK(d.expect([](double y) { return chart::x_of_y(y); }) == doctest::Approx(p / (p + q)).epsilon(1e-10));
        CHECK(d.expect_adaptive([](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(d.expect([](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("edge: symmetric model has a symmetric density") {
    const auto d = StationaryDensity::for_edge(beta_edge(1.5, 1.5, 0.9));
    for (double x : {0.03, 0.2, 0.4}) CHECK(d.pdf_x(x) == doctest::Approx(d.pdf_x(1 - x)).epsilon(1e-10));
    // The y-density need not peak at 0, but it is even.
    CHECK(d.pdf_y(d.mode()) == doctest::Approx(d.pdf_y(-d.mode())).epsilon(1e-10));
}

TEST_CASE("edge: NotInS when an endpoint attracts") {
    CHECK_THROWS_AS(StationaryDensity::for_edge(beta_edge(-1.0, 2.0, 0.5)), NotInS);
    CHECK_THROWS_AS(StationaryDensity::for_edge(beta_edge(1.0, -2.0, 0.5)), NotInS);
    const ModelSpec m = plane_over_edge(-1.0, -1.0, 0.5, Field::constant(1.0));
    const EdgeSpectrum s = edge_spectrum(m, 0);
    CHECK_FALSE(s.in_S);
    CHECK_THROWS_AS(transversal_exponent(m, 0), NotInS);
    CHECK_THROWS_AS(solve_corrector(m, 0), NotInS);
}

TEST_CASE("edge: S membership agrees with the vertex tangential rates") {
    const ModelSpec m = case_study();
    const auto v = vertex_spectra(m);
    for (int k = 0; k < 4; ++k) {
        const EdgeSpectrum s = edge_spectrum_unchecked(m, k);
        CHECK(s.endpoint_rates[0] == doctest::Approx(v[k].lambda1).epsilon(1e-13));
        CHECK(s.endpoint_rates[1] == doctest::Approx(v[(k + 1) % 4].lambda2).epsilon(1e-13));
        CHECK(s.in_S == (v[k].lambda1 > 0 && v[(k + 1) % 4].lambda2 > 0));
    }
    CHECK(edge_spectrum(m, 1).in_S);
    CHECK(edge_spectrum(m, 2).in_S);
    CHECK_FALSE(edge_spectrum(m, 0).in_S);
}

TEST_CASE("edge: MC occupation histogram matches the density") {
    const ModelSpec e = beta_edge(2.0, 2.0, 0.8);
    const auto d = StationaryDensity::for_edge(e);
    McOptions o;
    o.paths = 8;
    o.horizon = 250.0;
    o.dt = 0.01;
    o.seed = 17;
    CHECK(mc_histogram_l1(e, d, 20, o) < 0.05);
}

TEST_CASE("edge: Lambda2 for diagonal noise is d2 b2") {
    // b2 = x2(1-x2)(c + x1^2): d2 b2 at x2 = 0 is c + x1^2.
    const ModelSpec m = plane_over_edge(1.0, 1.0, 0.4, Field(Poly2({{0.3}, {0.0}, {1.0}})));
    for (double x : {0.0, 0.25, 0.6, 1.0}) {
        CHECK(lambda2_pointwise(m, 0, x) == doctest::Approx(0.3 + x * x).epsilon(1e-13));
        CHECK(lambda2_chart(m, chart::from_x(x)) == doctest::Approx(0.3 + x * x).epsilon(1e-13));
    }
    const ModelSpec c = plane_over_edge(1.0, 1.0, 0.4, Field::constant(-0.8));
    for (double x : {0.1, 0.9}) CHECK(lambda2_pointwise(c, 0, x) == doctest::Approx(-0.8).epsilon(1e-14));
}

TEST_CASE("edge: Lambda2 cross term from mixed noise") {
    // sigma_11 = x1(1-x1), sigma_12 = x1 x2(1-x2); cross term (1/2) x1(1-x1).
    ModelSpec::QTable q;
    q[0][0] = Field::constant(1.0);
    q[0][1] = Field(Poly2({{0.0}, {1.0}}));
    const ModelSpec m = ModelSpec::factored("cross", Field::constant(1.0), Field(), q);
    for (double x : {0.1, 0.5, 0.8}) {
        CHECK(lambda2_pointwise(m, 0, x) == doctest::Approx(0.5 * x * (1 - x)).epsilon(1e-10));
        CHECK(lambda2_chart(m, chart::from_x(x)) == doctest::Approx(0.5 * x * (1 - x)).epsilon(1e-13));
    }
}

TEST_CASE("edge: Lambda2 by full fields and by the chart drift agree on every edge") {
    ModelSpec::QTable q;
    q[0][0] = Field(Poly2({{0.3, 0.2}, {0.1, 0.0}}));
    q[0][1] = Field(Poly2({{0.0, 0.4}, {0.5, -0.3}}));
    q[1][0] = Field(Poly2({{0.1, 0.6}, {0.0, 0.0}, {0.4, 0.0}}));
    q[1][1] = Field(Poly2({{0.6, -0.2}, {0.3, 0.1}}));
    const ModelSpec m = ModelSpec::factored("mixed", Field(Poly2({{1.0, -2.0}, {0.5, 0.3}})),
                                            Field(Poly2({{0.5, 0.2}, {1.0, -0.7}})), q);
    for (int k = 0; k < 4; ++k) {
        const ModelSpec local = m.rotated(k);
        for (double x : {0.0, 0.15, 0.5, 0.9, 1.0})
            CHECK(lambda2_pointwise(m, k, x) == doctest::Approx(lambda2_chart(local, chart::from_x(x))).epsilon(1e-12));
    }
}

TEST_CASE("edge: transversal exponent of constant and symmetric rates") {
    CHECK(transversal_exponent(plane_over_edge(1.0, 2.0, 0.6, Field::constant(0.7)), 0) ==
          doctest::Approx(0.7).epsilon(1e-12));
    // Lambda2 = x1 against a symmetric density.
    CHECK(transversal_exponent(plane_over_edge(1.2, 1.2, 0.6, Field(Poly2({{0.0}, {1.0}}))), 0) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("edge: NonHyperbolicEdge on a vanishing exponent") {
    const ModelSpec m = plane_over_edge(1.2, 1.2, 0.6, Field(Poly2({{-0.5}, {1.0}})));
    CHECK_THROWS_AS(transversal_exponent(m, 0), NonHyperbolicEdge);
    CHECK(edge_spectrum_unchecked(m, 0).lambda2_bar == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("edge: quadrature and Monte-Carlo exponents agree") {
    // Lambda2(x1) = 0.3 sin(2 pi x1) - 0.1 over the logistic edge b = 2 x(1-x)(1-2x), sigma = 0.8 x(1-x).
    const Field p2 = Field::function(
        [](const Vec2& x) { return 0.3 * std::sin(2 * M_PI * x[0]) - 0.1; },
        [](const Vec2& x) { return Vec2{0.6 * M_PI * std::cos(2 * M_PI * x[0]), 0.0}; },
        [](const Vec2& x) {
            Sym2 h;
            h.h11 = -1.2 * M_PI * M_PI * std::sin(2 * M_PI * x[0]);
            return h;
        },
        false, "sine");
    const ModelSpec m = plane_over_edge(2.0, 2.0, 0.8, p2);
    EdgeOptions opt;
    opt.monte_carlo = true;
    opt.mc.paths = 16;
    opt.mc.horizon = 200.0;
    opt.mc.seed = 5;
    const EdgeSpectrum s = edge_spectrum(m, 0, opt);
    REQUIRE(s.lambda2_mc.has_value());
    // The density is symmetric, so the sine averages out.
    CHECK(s.lambda2_bar == doctest::Approx(-0.1).epsilon(1e-10));
    CHECK(std::abs(s.lambda2_bar - s.lambda2_mc->mean) < 3 * s.lambda2_mc->se);
    CHECK(s.quad_error < 1e-9);
}

TEST_CASE("edge: grid dumps and CSV") {
    const EdgeSpectrum s = edge_spectrum(case_study(), 1);
    REQUIRE(s.grid_x.size() == 201);
    for (std::size_t i = 1; i < s.grid_x.size(); ++i) CHECK(s.grid_x[i] >= s.grid_x[i - 1]);
    for (double v : s.density_x) CHECK(v >= 0.0);
    std::ostringstream os;
    write_edge_csv(os, s, nullptr);
    CHECK(os.str().rfind("x1,y1,psi,lambda2,density\n", 0) == 0);
}

TEST_CASE("corrector: constant Lambda2 gives a constant psi") {
    const Corrector c = solve_corrector(plane_over_edge(1.0, 2.0, 0.6, Field::constant(0.7)), 0);
    CHECK(c.residual_norm() < 1e-12);
    for (double v : c.values()) CHECK(std::abs(v) < 1e-12);
    for (double y : {-20.0, -3.0, 0.0, 2.5, 30.0}) {
        CHECK(std::abs(c.psi(y)) < 1e-12);
        CHECK(std::abs(c.psi_y(y)) < 1e-12);
    }
}

TEST_CASE("corrector: residual, centering and the explicit flux formula") {
    const ModelSpec m = case_study();
    for (int k : {1, 2}) {
        const Corrector c = solve_corrector(m, k);
        CHECK(c.residual_norm() < 1e-6);
        CHECK(std::abs(c.g_centering()) < 1e-8);
        const StationaryDensity& d = c.density();
        CHECK(std::abs(d.expect([&c](double y) { return c.psi(y); })) < 1e-9);
        // psi' = -G / P with G(y) = int_{-inf}^y g pi = -int_y^inf g pi and P = S pi / 2,
        // by adaptive quadrature from the nearer tail (mass beyond lo, hi is below e^-40 of the peak).
        for (double y : {-6.0, -1.0, 0.3, 2.0, 5.0}) {
            auto gp = [&](double t) { return c.g(t) * d.pdf_y(t); };
            double G = 0.0;
            std::vector<double> cuts{d.lo(), -chart::kYHigh, chart::kYHigh, d.hi()};
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                if (y < d.mode()) {
                    const double hi = std::min(cuts[i + 1], y);
                    if (hi > cuts[i]) G += adaptive_integrate(gp, cuts[i], hi, 1e-12);
                } else {
                    const double lo = std::max(cuts[i], y);
                    if (cuts[i + 1] > lo) G -= adaptive_integrate(gp, lo, cuts[i + 1], 1e-12);
                }
            }
            double l, S;
            d.coefs()(y, l, S);
            CHECK(c.psi_y(y) == doctest::Approx(-G / (0.5 * S * d.pdf_y(y))).epsilon(1e-7));
            // Poisson equation through the exact derivatives.
            CHECK(std::abs(l * c.psi_y(y) + 0.5 * S * c.psi_yy(y) + c.g(y)) < 1e-10);
        }
        // psi' tends to -g / l at both ends.
        CHECK(c.psi_y(-60.0) == doctest::Approx(-c.g(-60.0) / d.ell_lo()).epsilon(1e-6));
        CHECK(c.psi_y(60.0) == doctest::Approx(-c.g(60.0) / d.ell_hi()).epsilon(1e-6));
    }
}

TEST_CASE("corrector: boundedness statistics are stable under refinement") {
    const ModelSpec m = case_study();
    CorrectorOptions coarse, fine;
    coarse.cells = 1500;
    fine.cells = 3000;
    const Corrector a = solve_corrector(m, 1, coarse), b = solve_corrector(m, 1, fine);
    CHECK(std::isfinite(a.max_h_dpsi()));
    CHECK(std::isfinite(a.max_h2_d2psi()));
    CHECK(b.max_h_dpsi() < 2 * a.max_h_dpsi());
    CHECK(a.max_h_dpsi() < 2 * b.max_h_dpsi());
    CHECK(b.max_h2_d2psi() < 2 * a.max_h2_d2psi());
    CHECK(a.max_h2_d2psi() < 2 * b.max_h2_d2psi());
    for (double y : {-4.0, 0.0, 1.0, 3.0}) CHECK(a.psi(y) == doctest::Approx(b.psi(y)).epsilon(1e-6).scale(1.0));
}

TEST_CASE("corrector: psi matches the truncated Monte-Carlo oracle") {
    const ModelSpec m = case_study();
    McOptions mc;
    mc.paths = 300;
    mc.dt = 0.01;
    mc.seed = 2024;
    const CorrectorReport r = solve_corrector_shifted(m, 1, mc);
    CHECK(r.gap > 0.0);
    CHECK(r.horizon == doctest::Approx(50.0 / r.gap));
    const ModelSpec edge = m.edge_restriction(1), local = m.rotated(1);
    const double mean = r.corrector.mean();
    auto g = [&](const Coord& c) { return lambda2_chart(local, c) - mean; };
    int stream = 0;
    for (double x : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        McOptions o = mc;
        o.seed = mc.seed + 1000 + static_cast<std::uint64_t>(stream++);
        const McEstimate e = mc_path_integral(edge, g, x, r.horizon, o);
        const double se = std::hypot(e.se, r.corrector.shift_se());
        CHECK(std::abs(r.corrector.psi(chart::y_of_x(x)) - e.mean) < 3 * se);
    }
}
