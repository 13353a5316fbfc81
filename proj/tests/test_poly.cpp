#include "doctest.h"

#include "degenflow/poly.hpp"
#include "degenflow/rng.hpp"

#include <cmath>

using namespace degenflow;

TEST_CASE("poly: evaluation matches the expanded sum") {
    // 1 + 2 x1 - 3 x2 + 0.5 x1^2 x2
    const Poly2 p({{1.0, -3.0}, {2.0, 0.0}, {0.0, 0.5}});
    const double x1 = 0.3, x2 = -0.7;
    const double expect = 1.0 + 2 * x1 - 3 * x2 + 0.5 * x1 * x1 * x2;
    CHECK(p(x1, x2) == doctest::Approx(expect).epsilon(1e-15));
    double v;
    Vec2 g;
    Sym2 h;
    p.eval({x1, x2}, v, &g, &h);
    CHECK(v == doctest::Approx(expect).epsilon(1e-15));
    CHECK(g[0] == doctest::Approx(2 + x1 * x2).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(-3 + 0.5 * x1 * x1).epsilon(1e-15));
    CHECK(h.h11 == doctest::Approx(x2).epsilon(1e-15));
    CHECK(h.h12 == doctest::Approx(x1).epsilon(1e-15));
    CHECK(h.h22 == 0.0);
}

TEST_CASE("poly: derivative and product rules") {
    const Poly2 a({{1.0, 2.0}, {3.0, 4.0}});
    const Poly2 b({{0.5}, {-1.0}, {2.0}});
    const Poly2 ab = a * b;
    for (double x1 : {-0.5, 0.2, 0.9})
        for (double x2 : {0.1, 0.7}) {
            CHECK(ab(x1, x2) == doctest::Approx(a(x1, x2) * b(x1, x2)).epsilon(1e-14));
            const double lhs = ab.d1()(x1, x2);
            const double rhs = a.d1()(x1, x2) * b(x1, x2) + a(x1, x2) * b.d1()(x1, x2);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
        }
}

TEST_CASE("poly: exact division by x(1-x) inverts multiplication") {
    Rng rng(7, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<double>> t(3, std::vector<double>(3));
        for (auto& row : t)
            for (auto& c : row) c = rng.uniform() * 2 - 1;
        const Poly2 p(t);
        for (int axis = 0; axis < 2; ++axis) {
            Poly2 q;
            REQUIRE(p.times_h(axis).divide_by_h(axis, q));
            CHECK((q - p).max_abs_coeff() < 1e-13);
        }
    }
}

TEST_CASE("poly: division reports a nonzero remainder") {
    Poly2 q;
    CHECK_FALSE(Poly2({{1.0}, {1.0}}).divide_by_h(0, q));      // 1 + x1
    CHECK_FALSE(Poly2({{0.0}, {1.0}}).divide_by_h(0, q));      // x1 vanishes at 0, not at 1
    CHECK(Poly2({{0.0}, {1.0}, {-1.0}}).divide_by_h(0, q));    // x1 - x1^2
    CHECK(q(0.3) == doctest::Approx(1.0));
    CHECK_FALSE(Poly2({{0.0, 1.0}}).divide_by_h(1, q));
}

TEST_CASE("poly: affine composition") {
    const Poly2 p({{1.0, 2.0}, {3.0, 0.0}, {0.0, 1.0}});
    const auto a = std::array<double, 3>{1.0, 0.0, -1.0};
    const auto b = std::array<double, 3>{0.0, 1.0, 0.0};
    const Poly2 r = p.compose_affine(a, b);
    for (double y1 : {0.1, 0.4})
        for (double y2 : {0.3, 0.8}) CHECK(r(y1, y2) == doctest::Approx(p(1 - y2, y1)).epsilon(1e-14));
}

TEST_CASE("poly: batched evaluation equals pointwise Horner") {
    const Poly2 p({{0.25, -1.5, 3.0}, {2.0, 0.125, -0.75}, {1.0, 1.0, 4.0}});
    Rng rng(11, 3);
    std::vector<double> x1(37), x2(37), out(37);
    for (std::size_t i = 0; i < x1.size(); ++i) {
        x1[i] = rng.uniform();
        x2[i] = rng.uniform();
    }
    p.eval_batch(x1.size(), x1.data(), x2.data(), out.data());
    for (std::size_t i = 0; i < x1.size(); ++i) CHECK(out[i] == p(x1[i], x2[i]));
}
