#include "doctest.h"

#include "degenflow/chart.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

using namespace degenflow;

TEST_CASE("chart: log branches") {
    CHECK(chart::y_of_x(0.1) == doctest::Approx(std::log(0.1)).epsilon(1e-15));
    CHECK(chart::y_of_x(0.9) == doctest::Approx(-std::log(0.1)).epsilon(1e-13));
    CHECK(chart::y_of_x(0.5) == 0.0);
}

TEST_CASE("chart: inverse on a grid within 1e-12") {
    double worst = 0.0;
    for (int k = 1; k < 4000; ++k) {
        const double u = k / 4000.0;
        worst = std::max(worst, std::abs(chart::x_of_y(chart::y_of_x(u)) - u));
    }
    CHECK(worst < 1e-12);
    const Coord deep = chart::from_y(-800.0);
    CHECK(deep.x == 0.0);
    CHECK(deep.xbar == 1.0);
    CHECK(deep.y == -800.0);
}

TEST_CASE("chart: strictly increasing, odd about 1/2") {
    double prev = chart::y_of_x(1e-6);
    for (int k = 1; k < 10000; ++k) {
        const double u = 1e-6 + (1 - 2e-6) * k / 10000.0;
        const double y = chart::y_of_x(u);
        CHECK(y > prev);
        prev = y;
        CHECK(chart::y_of_x(1 - u) == doctest::Approx(-y).epsilon(1e-9));
    }
    for (double u = 0.25; u <= 0.75; u += 0.001) CHECK(chart::dy(u) > 3.8);
}

TEST_CASE("chart: C2 matching at 1/4 and 3/4") {
    for (double edge : {0.25, 0.75}) {
        const double l = std::nextafter(edge, 0.0), r = std::nextafter(edge, 1.0);
        CHECK(chart::y_of_x(l) == doctest::Approx(chart::y_of_x(r)).epsilon(1e-13));
        CHECK(chart::dy(l) == doctest::Approx(chart::dy(r)).epsilon(1e-12));
        CHECK(chart::d2y(l) == doctest::Approx(chart::d2y(r)).epsilon(1e-12));
    }
}

TEST_CASE("chart: factors agree with y'h and y''h^2") {
    for (double u : {0.01, 0.2, 0.3, 0.5, 0.66, 0.8, 0.99}) {
        const Coord c = chart::from_x(u);
        double g1, g2;
        chart::factors(c, g1, g2);
        const double h = u * (1 - u);
        CHECK(g1 == doctest::Approx(chart::dy(u) * h).epsilon(1e-12));
        CHECK(g2 == doctest::Approx(chart::d2y(u) * h * h).epsilon(1e-12));
        CHECK(chart::dx_dy(c) == doctest::Approx(1.0 / chart::dy(u)).epsilon(1e-12));
        const double d = chart::dy(u);
        CHECK(chart::d2x_dy2(c) == doctest::Approx(-chart::d2y(u) / (d * d * d)).epsilon(1e-12));
        const double e = 1e-6;
        double a1, a2, b1, b2;
        chart::factors(chart::from_x(u + e), a1, a2);
        chart::factors(chart::from_x(u - e), b1, b2);
        CHECK(chart::dg1(c) == doctest::Approx((a1 - b1) / (2 * e)).epsilon(1e-6));
    }
}
