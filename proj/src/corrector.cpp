#include "degenflow/edge.hpp"

#include "degenflow/errors.hpp"
#include "degenflow/quadrature.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace degenflow {

struct Corrector::Interp {
    boost::math::interpolators::cardinal_cubic_b_spline<double> s;
};

Corrector Corrector::solve(std::shared_ptr<const StationaryDensity> d, std::function<double(double)> f,
                           const Options& opt) {
    if (!d) throw BadParameters("corrector needs a density");
    if (opt.cells < 8) throw BadParameters("corrector needs at least 8 cells");
    Corrector c;
    c.d_ = std::move(d);
    c.f_ = std::move(f);
    const StationaryDensity& den = *c.d_;
    c.mean_ = den.expect(c.f_);

    const auto n = static_cast<std::size_t>(opt.cells);
    const double lo = den.lo(), hi = den.hi();
    c.dy_ = (hi - lo) / opt.cells;
    c.y_.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) c.y_[j] = lo + static_cast<double>(j) * c.dy_;
    c.y_[n] = hi;

    auto gp = [&c, &den](double y) { return c.g(y) * den.pdf_y(y); };
    auto P = [&den](double y) {
        double l, S;
        den.coefs()(y, l, S);
        return 0.5 * S * den.pdf_y(y);
    };
    auto closure = [&](double y) {
        if (!den.whole_line()) return 0.0;
        double l, S;
        den.coefs()(y, l, S);
        return -0.5 * S * den.pdf_y(y) * c.g(y) / l;
    };

    std::vector<double> src(n), mass(n);
    for (std::size_t j = 0; j < n; ++j) {
        src[j] = gauss_integrate(gp, c.y_[j], c.y_[j + 1], 8);
        mass[j] = gauss_integrate([&den](double y) { return den.pdf_y(y); }, c.y_[j], c.y_[j + 1], 8);
    }
    // Flux F = P psi' obeys F' = -g pi. Integrate from both tails towards the mode.
    const double mode = den.mode();
    c.mode_cell_ = std::min(n - 1, static_cast<std::size_t>(std::max(0.0, std::floor((mode - lo) / c.dy_))));
    const std::size_t mc = c.mode_cell_;
    c.flux_.assign(n + 1, 0.0);
    c.flux_[0] = closure(lo);
    c.flux_[n] = closure(hi);
    for (std::size_t j = 0; j < mc; ++j) c.flux_[j + 1] = c.flux_[j] - src[j];
    for (std::size_t j = n - 1; j > mc; --j) c.flux_[j] = c.flux_[j + 1] + src[j];

    // Conservation defect per cell, with sources recomputed by the 16-point rule.
    c.residual_ = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double s16 = gauss_integrate(gp, c.y_[j], c.y_[j + 1], 16);
        const double r = std::abs(c.flux_[j + 1] - c.flux_[j] + s16) / mass[j];
        if (std::isfinite(r)) c.residual_ = std::max(c.residual_, r);
    }

    // psi by Simpson on psi' = F / P, with the midpoint flux from the nearer face.
    c.psi_.assign(n + 1, 0.0);
    std::vector<double> slope(n + 1);
    for (std::size_t j = 0; j <= n; ++j) slope[j] = c.flux_[j] / P(c.y_[j]);
    for (std::size_t j = 0; j < n; ++j) {
        const double a = c.y_[j], b = c.y_[j + 1], m = 0.5 * (a + b);
        const double fm = j < mc ? c.flux_[j] - gauss_integrate(gp, a, m, 8) : c.flux_[j + 1] + gauss_integrate(gp, m, b, 8);
        c.psi_[j + 1] = c.psi_[j] + (b - a) / 6.0 * (slope[j] + 4.0 * fm / P(m) + slope[j + 1]);
    }
    auto interp = std::make_shared<Interp>(Interp{boost::math::interpolators::cardinal_cubic_b_spline<double>(
        c.psi_.begin(), c.psi_.end(), lo, c.dy_, slope[0], slope[n])});
    c.spline_ = interp;
    const double center = den.expect([&c](double y) { return c.spline_value(y); });
    for (double& v : c.psi_) v -= center;
    c.spline_ = std::make_shared<Interp>(Interp{boost::math::interpolators::cardinal_cubic_b_spline<double>(
        c.psi_.begin(), c.psi_.end(), lo, c.dy_, slope[0], slope[n])});

    c.g_centering_ = den.expect_adaptive(c.f_) - c.mean_;

    c.spline_residual_ = 0.0;
    c.max_h_dpsi_ = c.max_h2_d2psi_ = c.max_psi_y_ = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double y = c.y_[j];
        const double py = slope[j], pyy = c.psi_yy(y);
        c.max_psi_y_ = std::max(c.max_psi_y_, std::abs(py));
        if (den.whole_line()) {
            double g1, g2;
            chart::factors(chart::from_y(y), g1, g2);
            c.max_h_dpsi_ = std::max(c.max_h_dpsi_, std::abs(g1 * py));
            c.max_h2_d2psi_ = std::max(c.max_h2_d2psi_, std::abs(g1 * g1 * pyy + g2 * py));
        }
        if (j < n) {
            const double m = y + 0.5 * c.dy_;
            double l, S;
            den.coefs()(m, l, S);
            const double r = l * c.spline_->s.prime(m) + 0.5 * S * c.spline_->s.double_prime(m) + c.g(m);
            c.spline_residual_ = std::max(c.spline_residual_, std::abs(r));
        }
    }
    if (!(c.residual_ <= 1e-6)) {
        std::ostringstream os;
        os << "Poisson residual " << c.residual_ << " exceeds 1e-6";
        throw SolverFailure(os.str());
    }
    return c;
}

double Corrector::spline_value(double y) const { return spline_->s(y); }

double Corrector::flux(double y) const {
    const StationaryDensity& den = *d_;
    const std::size_t n = y_.size() - 1;
    double l, S;
    den.coefs()(y, l, S);
    auto gp = [this, &den](double t) { return g(t) * den.pdf_y(t); };
    const auto j = std::min(n - 1, static_cast<std::size_t>(std::max(0.0, std::floor((y - y_[0]) / dy_))));
    if (j < mode_cell_) return flux_[j] - gauss_integrate(gp, y_[j], y, 8);
    return flux_[j + 1] + gauss_integrate(gp, y, y_[j + 1], 8);
}

double Corrector::psi_y(double y) const {
    const StationaryDensity& den = *d_;
    if (y <= den.lo() || y >= den.hi()) {
        if (!den.whole_line()) y = std::clamp(y, den.lo(), den.hi());
        else {
            double l, S;
            den.coefs()(y, l, S);
            return -g(y) / l;
        }
    }
    double l, S;
    den.coefs()(y, l, S);
    return flux(y) / (0.5 * S * den.pdf_y(y));
}

double Corrector::psi_yy(double y) const {
    const StationaryDensity& den = *d_;
    if (den.whole_line() && (y <= den.lo() || y >= den.hi())) return 0.0;
    y = std::clamp(y, den.lo(), den.hi());
    double l, S;
    den.coefs()(y, l, S);
    return (-g(y) - l * psi_y(y)) / (0.5 * S);
}

double Corrector::psi(double y) const {
    const StationaryDensity& den = *d_;
    if (y < den.lo()) {
        if (!den.whole_line()) return psi_.front() + shift_;
        return psi_.front() + psi_y(den.lo()) * (y - den.lo()) + shift_;
    }
    if (y > den.hi()) {
        if (!den.whole_line()) return psi_.back() + shift_;
        return psi_.back() + psi_y(den.hi()) * (y - den.hi()) + shift_;
    }
    return spline_value(y) + shift_;
}

std::vector<double> Corrector::g_values() const {
    std::vector<double> out(y_.size());
    for (std::size_t j = 0; j < y_.size(); ++j) out[j] = g(y_[j]);
    return out;
}

Corrector solve_corrector(const ModelSpec& m, int k, const Corrector::Options& opt) {
    if (m.dim() != 2) throw BadParameters("the edge corrector needs a planar model");
    const ModelSpec edge = m.edge_restriction(k);
    auto d = std::make_shared<StationaryDensity>(StationaryDensity::for_edge(edge));
    const ModelSpec local = m.rotated(k);
    return Corrector::solve(d, [local](double y) { return lambda2_chart(local, chart::from_y(y)); }, opt);
}

CorrectorReport solve_corrector_shifted(const ModelSpec& m, int k, const McOptions& mc, const Corrector::Options& opt) {
    CorrectorReport r{solve_corrector(m, k, opt), 0.0, 0.0, {}};
    const ModelSpec edge = m.edge_restriction(k);
    const ModelSpec local = m.rotated(k);
    r.gap = r.corrector.density().spectral_gap();
    r.horizon = 50.0 / r.gap;
    const double mean = r.corrector.mean();
    auto g = [local, mean](const Coord& c) { return lambda2_chart(local, c) - mean; };
    const double ym = r.corrector.density().mode();
    r.at_mode = mc_path_integral(edge, g, chart::x_of_y(ym), r.horizon, mc);
    r.corrector.set_shift(r.at_mode.mean - (r.corrector.psi(ym) - r.corrector.shift()), r.at_mode.se);
    return r;
}

} // namespace degenflow
