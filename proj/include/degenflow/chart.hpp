#pragma once

namespace degenflow {

/// One coordinate in both representations. xbar = 1 - x is carried
/// separately so points near x = 1 keep full relative precision, and y is
/// the log-chart value (y = -inf / +inf on the faces x = 0 / x = 1).
struct Coord {
    double x = 0.5;
    double xbar = 0.5;
    double y = 0.0;

    bool on_face() const;
};

/// Per-coordinate monotone chart y(x): ln x below 1/4, -ln(1-x) above 3/4,
/// and in between an odd quintic in v = x - 1/2 matching value, slope and
/// curvature at both ends (so y is C^2). Satisfies y(1-x) = -y(x).
namespace chart {

inline constexpr double kLow = 0.25;
inline constexpr double kHigh = 0.75;
inline constexpr double kA = 7.397207708399179641;
inline constexpr double kC = -46.90354888959124951;
inline constexpr double kE = 276.3370346700379976;
/// y at x = 3/4, i.e. ln 4.
inline constexpr double kYHigh = 1.386294361119890618;

enum class Region { Low, Mid, High };

Region region_of_x(double x);
Region region_of_y(double y);

double y_of_x(double x);
double x_of_y(double y);
Coord from_x(double x);
Coord from_y(double y);

/// y'(x), y''(x), y'''(x).
double dy(double x);
double d2y(double x);
double d3y(double x);

/// g1 = y'(x) x(1-x) and g2 = y''(x) (x(1-x))^2, evaluated without division.
void factors(const Coord& c, double& g1, double& g2);
/// dg1/dx, needed when differentiating chart-form coefficients.
double dg1(const Coord& c);

/// dx/dy and d2x/dy2 at the given point.
double dx_dy(const Coord& c);
double d2x_dy2(const Coord& c);

} // namespace chart
} // namespace degenflow
