#pragma once

#include <functional>
#include <vector>

namespace degenflow {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

/// n in {8, 16}.
const GaussRule& gauss_legendre(int n);

/// Fixed n-point rule on [a, b].
double gauss_integrate(const std::function<double(double)>& f, double a, double b, int n = 16);

/// Adaptive Gauss-Kronrod (15 points) on [a, b]; throws QuadratureFailure
/// when the error estimate stays above tol * (1 + |result|).
double adaptive_integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-11,
                          double* err = nullptr);

/// Composite nodes: [a, b] is cut at the given breakpoints, the panels are
/// shared out by length (at least one per segment) and each gets n_per nodes.
void composite_rule(double a, double b, const std::vector<double>& breaks, int panels, int n_per,
                    std::vector<double>& nodes, std::vector<double>& weights);

} // namespace degenflow
