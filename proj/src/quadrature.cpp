#include "degenflow/quadrature.hpp"

#include "degenflow/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace degenflow {

namespace {

template <unsigned N>
GaussRule make_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    GaussRule r;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = a.size(); i-- > 0;) {
        if (a[i] == 0.0) continue;
        r.x.push_back(-a[i]);
        r.w.push_back(w[i]);
    }
    if (a[0] == 0.0) {
        r.x.push_back(0.0);
        r.w.push_back(w[0]);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        r.x.push_back(a[i]);
        r.w.push_back(w[i]);
    }
    return r;
}

} // namespace

const GaussRule& gauss_legendre(int n) {
    static const GaussRule r8 = make_rule<8>();
    static const GaussRule r16 = make_rule<16>();
    if (n == 8) return r8;
    if (n == 16) return r16;
    throw BadParameters("Gauss-Legendre rule with " + std::to_string(n) + " points is not tabulated");
}

double gauss_integrate(const std::function<double(double)>& f, double a, double b, int n) {
    const GaussRule& r = gauss_legendre(n);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(c + h * r.x[i]);
    return s * h;
}

double adaptive_integrate(const std::function<double(double)>& f, double a, double b, double tol, double* err) {
    double e = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 15, tol, &e);
    if (err) *err = e;
    if (!std::isfinite(v) || e > 100 * tol * (1.0 + std::abs(v))) {
        std::ostringstream os;
        os << "adaptive quadrature on [" << a << ", " << b << "] stalled with error " << e;
        throw QuadratureFailure(os.str());
    }
    return v;
}

void composite_rule(double a, double b, const std::vector<double>& breaks, int panels, int n_per,
                    std::vector<double>& nodes, std::vector<double>& weights) {
    std::vector<double> cuts{a};
    for (double c : breaks)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    const std::size_t nseg = cuts.size() - 1;
    panels = std::max(panels, static_cast<int>(nseg));
    std::vector<int> per(nseg, 1);
    int left = panels - static_cast<int>(nseg);
    // Largest-remainder share of the remaining panels by segment length.
    std::vector<double> want(nseg);
    for (std::size_t s = 0; s < nseg; ++s) want[s] = left * (cuts[s + 1] - cuts[s]) / (b - a);
    for (std::size_t s = 0; s < nseg; ++s) {
        const int w = static_cast<int>(std::floor(want[s]));
        per[s] += w;
        left -= w;
        want[s] -= w;
    }
    while (left-- > 0) {
        const auto it = std::max_element(want.begin(), want.end());
        per[static_cast<std::size_t>(it - want.begin())] += 1;
        *it = -1.0;
    }
    const GaussRule& r = gauss_legendre(n_per);
    nodes.clear();
    weights.clear();
    for (std::size_t s = 0; s < nseg; ++s) {
        const double h = (cuts[s + 1] - cuts[s]) / per[s];
        for (int p = 0; p < per[s]; ++p) {
            const double lo = cuts[s] + p * h, c = lo + 0.5 * h;
            for (std::size_t i = 0; i < r.x.size(); ++i) {
                nodes.push_back(c + 0.5 * h * r.x[i]);
                weights.push_back(0.5 * h * r.w[i]);
            }
        }
    }
}

} // namespace degenflow
