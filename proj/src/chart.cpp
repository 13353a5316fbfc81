#include "degenflow/chart.hpp"

#include <cmath>
#include <limits>

namespace degenflow {

bool Coord::on_face() const { return std::isinf(y); }

namespace chart {
namespace {

double q(double v) {
    const double v2 = v * v;
    return v * (kA + v2 * (kC + v2 * kE));
}
double q1(double v) {
    const double v2 = v * v;
    return kA + v2 * (3 * kC + v2 * 5 * kE);
}
double q2(double v) {
    const double v2 = v * v;
    return v * (6 * kC + v2 * 20 * kE);
}
double q3(double v) {
    const double v2 = v * v;
    return 6 * kC + v2 * 60 * kE;
}

// Solves q(v) = y on [-1/4, 1/4]; q is strictly increasing there.
double q_inverse(double y) {
    double lo = -0.25, hi = 0.25;
    double v = y / kA;
    if (v < lo || v > hi) v = 0.0;
    for (int it = 0; it < 100; ++it) {
        const double f = q(v) - y;
        if (f == 0.0) return v;
        if (f > 0) hi = v; else lo = v;
        double next = v - f / q1(v);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - v) <= 1e-17 + 4e-16 * std::abs(v)) return next;
        v = next;
    }
    return v;
}

} // namespace

Region region_of_x(double x) {
    if (x < kLow) return Region::Low;
    if (x > kHigh) return Region::High;
    return Region::Mid;
}

Region region_of_y(double y) {
    if (y < -kYHigh) return Region::Low;
    if (y > kYHigh) return Region::High;
    return Region::Mid;
}

double y_of_x(double x) {
    switch (region_of_x(x)) {
    case Region::Low: return std::log(x);
    case Region::High: return -std::log1p(-x);
    default: return q(x - 0.5);
    }
}

double x_of_y(double y) { return from_y(y).x; }

Coord from_x(double x) {
    Coord c;
    c.x = x;
    c.xbar = 1.0 - x;
    c.y = y_of_x(x);
    return c;
}

Coord from_y(double y) {
    Coord c;
    c.y = y;
    if (y == -std::numeric_limits<double>::infinity()) {
        c.x = 0.0;
        c.xbar = 1.0;
        return c;
    }
    if (y == std::numeric_limits<double>::infinity()) {
        c.x = 1.0;
        c.xbar = 0.0;
        return c;
    }
    switch (region_of_y(y)) {
    case Region::Low:
        c.x = std::exp(y);
        c.xbar = -std::expm1(y);
        break;
    case Region::High:
        c.xbar = std::exp(-y);
        c.x = -std::expm1(-y);
        break;
    default: {
        const double v = q_inverse(y);
        c.x = 0.5 + v;
        c.xbar = 0.5 - v;
    }
    }
    return c;
}

double dy(double x) {
    switch (region_of_x(x)) {
    case Region::Low: return 1.0 / x;
    case Region::High: return 1.0 / (1.0 - x);
    default: return q1(x - 0.5);
    }
}

double d2y(double x) {
    switch (region_of_x(x)) {
    case Region::Low: return -1.0 / (x * x);
    case Region::High: return 1.0 / ((1.0 - x) * (1.0 - x));
    default: return q2(x - 0.5);
    }
}

double d3y(double x) {
    switch (region_of_x(x)) {
    case Region::Low: return 2.0 / (x * x * x);
    case Region::High: return 2.0 / ((1.0 - x) * (1.0 - x) * (1.0 - x));
    default: return q3(x - 0.5);
    }
}

void factors(const Coord& c, double& g1, double& g2) {
    switch (region_of_x(c.x)) {
    case Region::Low:
        g1 = c.xbar;
        g2 = -c.xbar * c.xbar;
        break;
    case Region::High:
        g1 = c.x;
        g2 = c.x * c.x;
        break;
    default: {
        const double v = c.x - 0.5, h = c.x * c.xbar;
        g1 = q1(v) * h;
        g2 = q2(v) * h * h;
    }
    }
}

double dg1(const Coord& c) {
    switch (region_of_x(c.x)) {
    case Region::Low: return -1.0;
    case Region::High: return 1.0;
    default: {
        const double v = c.x - 0.5;
        return q2(v) * c.x * c.xbar + q1(v) * (c.xbar - c.x);
    }
    }
}

double dx_dy(const Coord& c) {
    switch (region_of_x(c.x)) {
    case Region::Low: return c.x;
    case Region::High: return c.xbar;
    default: return 1.0 / q1(c.x - 0.5);
    }
}

double d2x_dy2(const Coord& c) {
    switch (region_of_x(c.x)) {
    case Region::Low: return c.x;
    case Region::High: return -c.xbar;
    default: {
        const double v = c.x - 0.5, s = q1(v);
        return -q2(v) / (s * s * s);
    }
    }
}

} // namespace chart
} // namespace degenflow
