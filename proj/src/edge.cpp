#include "degenflow/edge.hpp"

#include "degenflow/errors.hpp"
#include "degenflow/parallel.hpp"
#include "degenflow/quadrature.hpp"
#include "degenflow/simulate.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace degenflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double drift_ratio(const StationaryDensity::Coefs& c, double y) {
    double l, S;
    c(y, l, S);
    return 2.0 * l / S;
}

bool near(double v, double lim, double tol) { return std::abs(v - lim) <= tol * std::abs(lim); }

} // namespace

StationaryDensity StationaryDensity::on_interval(Coefs c, double lo, double hi, std::vector<double> breaks,
                                                 const Options& opt) {
    if (!(lo < hi)) throw BadParameters("empty interval");
    StationaryDensity d;
    d.coefs_ = std::move(c);
    d.lo_ = lo;
    d.hi_ = hi;
    d.breaks_ = std::move(breaks);
    std::sort(d.breaks_.begin(), d.breaks_.end());
    d.knots_.push_back(lo);
    d.A_.push_back(0.0);
    d.zero_ = 0;
    double cur = lo;
    while (cur < hi) {
        double next = std::min(hi, cur + opt.knot_step);
        for (double b : d.breaks_)
            if (b > cur && b < next) next = b;
        const double a = adaptive_integrate([&](double y) { return drift_ratio(d.coefs_, y); }, cur, next, opt.tol);
        d.A_.push_back(d.A_.back() + a);
        d.knots_.push_back(next);
        cur = next;
    }
    d.finish(opt);
    return d;
}

StationaryDensity StationaryDensity::for_edge(const ModelSpec& edge, const Options& opt) {
    if (edge.dim() != 1) throw BadParameters("edge densities need a one-dimensional model");
    StationaryDensity d;
    d.whole_line_ = true;
    d.coefs_ = [edge](double y, double& l, double& S) {
        Coord c[2] = {chart::from_y(y), chart::from_y(-kInf)};
        ChartCoeffs cc;
        edge.chart_coeffs(c, cc);
        l = cc.ell[0];
        S = cc.s[0][0] * cc.s[0][0] + cc.s[1][0] * cc.s[1][0];
    };
    d.coefs_(-kInf, d.ell_lo_, d.S_lo_);
    d.coefs_(kInf, d.ell_hi_, d.S_hi_);
    if (!(d.ell_lo_ > 0.0) || !(d.ell_hi_ < 0.0)) {
        std::ostringstream os;
        os << "edge endpoints are not both repelling (rates " << d.ell_lo_ << ", " << -d.ell_hi_ << ")";
        throw NotInS(os.str());
    }
    if (!(d.S_lo_ > 0.0) || !(d.S_hi_ > 0.0))
        throw AssumptionViolated("edge noise degenerates at an endpoint; the restricted diffusion is not elliptic");
    d.slope_lo_ = 2.0 * d.ell_lo_ / d.S_lo_;
    d.slope_hi_ = 2.0 * d.ell_hi_ / d.S_hi_;
    d.breaks_ = {-chart::kYHigh, chart::kYHigh};

    auto step_from = [&](double cur, int dir) {
        const double a = std::abs(cur);
        double w = a < 16.0 ? opt.knot_step : 2.0;
        double next = cur + dir * w;
        for (double b : d.breaks_)
            if ((b - cur) * dir > 0 && (next - b) * dir > 0) next = b;
        return next;
    };
    auto U_at = [&](double y, double A) {
        double l, S;
        d.coefs_(y, l, S);
        if (!(S > 0.0)) {
            std::ostringstream os;
            os << "edge noise vanishes at y = " << y;
            throw AssumptionViolated(os.str());
        }
        return A - std::log(S);
    };
    auto settled = [&](double y, int dir) {
        double l, S;
        d.coefs_(y, l, S);
        return dir > 0 ? near(l, d.ell_hi_, opt.const_tol) && near(S, d.S_hi_, opt.const_tol)
                       : near(l, d.ell_lo_, opt.const_tol) && near(S, d.S_lo_, opt.const_tol);
    };

    std::vector<double> ry{0.0}, ra{0.0}, ly{0.0}, la{0.0};
    std::vector<double> ru{U_at(0.0, 0.0)}, lu{ru[0]};
    double umax = ru[0];
    auto extend = [&](std::vector<double>& ys, std::vector<double>& as, std::vector<double>& us, int dir) {
        const double cur = ys.back(), next = step_from(cur, dir);
        const double lo = std::min(cur, next), hi = std::max(cur, next);
        const double a = adaptive_integrate([&](double y) { return drift_ratio(d.coefs_, y); }, lo, hi, opt.tol);
        ys.push_back(next);
        as.push_back(as.back() + dir * a);
        us.push_back(U_at(next, as.back()));
        umax = std::max(umax, us.back());
        if (std::abs(next) > opt.y_cap) throw QuadratureFailure("edge density tails reach the y cap");
    };
    auto done = [&](const std::vector<double>& ys, const std::vector<double>& us, int dir) {
        return us.back() < umax - opt.tail_drop && settled(ys.back(), dir);
    };
    for (bool moved = true; moved;) {
        moved = false;
        while (!done(ry, ru, 1)) {
            extend(ry, ra, ru, 1);
            moved = true;
        }
        while (!done(ly, lu, -1)) {
            extend(ly, la, lu, -1);
            moved = true;
        }
    }
    for (std::size_t i = ly.size(); i-- > 1;) {
        d.knots_.push_back(ly[i]);
        d.A_.push_back(la[i]);
    }
    d.zero_ = d.knots_.size();
    d.knots_.insert(d.knots_.end(), ry.begin(), ry.end());
    d.A_.insert(d.A_.end(), ra.begin(), ra.end());
    d.lo_ = d.knots_.front();
    d.hi_ = d.knots_.back();
    d.finish(opt);
    return d;
}

double StationaryDensity::potential(double y) const {
    if (y > hi_) return whole_line_ ? A_.back() + slope_hi_ * (y - hi_) : -kInf;
    if (y < lo_) return whole_line_ ? A_.front() + slope_lo_ * (y - lo_) : -kInf;
    auto ratio = [this](double t) { return drift_ratio(coefs_, t); };
    if (y >= knots_[zero_]) {
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), y);
        const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
        return y == knots_[i] ? A_[i] : A_[i] + gauss_integrate(ratio, knots_[i], y, 16);
    }
    const auto it = std::lower_bound(knots_.begin(), knots_.end(), y);
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
    return y == knots_[i] ? A_[i] : A_[i] - gauss_integrate(ratio, y, knots_[i], 16);
}

double StationaryDensity::log_pdf_y(double y) const {
    const double A = potential(y);
    if (A == -kInf) return -kInf;
    double l, S;
    coefs_(y, l, S);
    return A - std::log(S) - log_z_;
}

double StationaryDensity::pdf_y(double y) const { return std::exp(log_pdf_y(y)); }

double StationaryDensity::pdf_x(double x) const {
    if (!(x > 0.0 && x < 1.0)) return 0.0;
    return pdf_y(chart::y_of_x(x)) * chart::dy(x);
}

void StationaryDensity::finish(const Options& opt) {
    std::vector<double> w;
    composite_rule(lo_, hi_, breaks_, opt.panels, 16, qy_, w);
    std::vector<double> u(qy_.size());
    double umax = -kInf;
    for (std::size_t i = 0; i < qy_.size(); ++i) {
        double l, S;
        coefs_(qy_[i], l, S);
        if (!(S > 0.0)) throw AssumptionViolated("diffusion coefficient vanishes inside the domain");
        u[i] = potential(qy_[i]) - std::log(S);
        umax = std::max(umax, u[i]);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < qy_.size(); ++i) z += w[i] * std::exp(u[i] - umax);
    log_z_ = umax + std::log(z);
    qw_.resize(qy_.size());
    for (std::size_t i = 0; i < qy_.size(); ++i) qw_[i] = w[i] * std::exp(u[i] - log_z_);

    const std::size_t imax = static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());
    const double a = imax > 0 ? qy_[imax - 1] : lo_;
    const double b = imax + 1 < qy_.size() ? qy_[imax + 1] : hi_;
    mode_ = boost::math::tools::brent_find_minima([this](double y) { return -log_pdf_y(y); }, a, b, 40).first;
}

double StationaryDensity::mass(double a, double b) const {
    a = std::max(a, lo_);
    b = std::min(b, hi_);
    if (!(a < b)) return 0.0;
    std::vector<double> cuts{a};
    for (double c : breaks_)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        s += adaptive_integrate([this](double y) { return pdf_y(y); }, cuts[i], cuts[i + 1], 1e-11);
    return s;
}

double StationaryDensity::expect(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < qy_.size(); ++i) s += qw_[i] * f(qy_[i]);
    return s;
}

double StationaryDensity::expect_adaptive(const std::function<double(double)>& f) const {
    std::vector<double> cuts{lo_};
    for (double c : breaks_)
        if (c > lo_ && c < hi_) cuts.push_back(c);
    cuts.push_back(hi_);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        s += adaptive_integrate([&](double y) { return f(y) * pdf_y(y); }, cuts[i], cuts[i + 1], 1e-11);
    return s;
}

double StationaryDensity::spectral_gap(int cells) const {
    if (cells < 4) throw BadParameters("spectral gap needs at least 4 cells");
    const auto n = static_cast<std::size_t>(cells);
    const double h = (hi_ - lo_) / cells;
    std::vector<double> pc(n), pf(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) pc[j] = pdf_y(lo_ + (static_cast<double>(j) + 0.5) * h);
    for (std::size_t j = 1; j < n; ++j) {
        const double y = lo_ + static_cast<double>(j) * h;
        double l, S;
        coefs_(y, l, S);
        pf[j] = 0.5 * S * pdf_y(y);
    }
    Eigen::VectorXd diag(static_cast<Eigen::Index>(n)), sub(static_cast<Eigen::Index>(n - 1));
    for (std::size_t j = 0; j < n; ++j) {
        diag[static_cast<Eigen::Index>(j)] = -(pf[j] + pf[j + 1]) / (h * h * pc[j]);
        if (j + 1 < n) sub[static_cast<Eigen::Index>(j)] = pf[j + 1] / (h * h * std::sqrt(pc[j] * pc[j + 1]));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SolverFailure("tridiagonal eigenvalue iteration did not converge");
    const auto& ev = es.eigenvalues();
    return -ev[static_cast<Eigen::Index>(n) - 2];
}

double lambda2_pointwise(const ModelSpec& m, int k, double x1) {
    if (m.dim() != 2) throw BadParameters("transversal rates need a planar model");
    const ModelSpec local = m.rotated(k);
    const Vec2 x{x1, 0.0};
    double v = local.drift_jacobian(x)[1][1];
    for (int c = 0; c < 2; ++c) v += 0.5 * local.noise(c, x)[0] * local.noise_mixed_second(c, 1, x);
    return v;
}

double lambda2_chart(const ModelSpec& local, const Coord& c1) {
    Coord c[2] = {c1, chart::from_y(-kInf)};
    ChartCoeffs cc;
    local.chart_coeffs(c, cc);
    return cc.ell[1];
}

namespace {

void check_mc(const McOptions& o) {
    if (o.paths < 2 || !(o.dt > 0.0) || !(o.horizon > 0.0) || !(o.burn_in >= 0.0))
        throw BadParameters("Monte-Carlo options need at least 2 paths and positive dt, horizon");
}

McEstimate mean_se(const std::vector<double>& v) {
    McEstimate e;
    for (double x : v) e.mean += x;
    e.mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return e;
}

// Runs burn-in then calls obs(coord) after each of the n steps of size dt.
template <class Obs>
void stationary_run(const ModelSpec& m, const McOptions& o, std::uint64_t path, Obs&& obs) {
    Rng rng(o.seed, path);
    State s = state_from_x(m, {0.5, 0.0});
    const auto nb = static_cast<std::uint64_t>(std::llround(o.burn_in / o.dt));
    for (std::uint64_t i = 0; i < nb; ++i) advance(m, s, o.dt, rng);
    const auto n = static_cast<std::uint64_t>(std::llround(o.horizon / o.dt));
    for (std::uint64_t i = 0; i < n; ++i) {
        advance(m, s, o.dt, rng);
        obs(s.c[0]);
    }
}

} // namespace

McEstimate mc_time_average(const ModelSpec& m, const std::function<double(const Coord&)>& f, const McOptions& o) {
    check_mc(o);
    std::vector<double> means(static_cast<std::size_t>(o.paths));
    parallel_for(means.size(), [&](std::size_t p) {
        double s = 0.0;
        std::uint64_t n = 0;
        stationary_run(m, o, p, [&](const Coord& c) {
            s += f(c);
            ++n;
        });
        means[p] = s / static_cast<double>(n);
    });
    return mean_se(means);
}

double mc_histogram_l1(const ModelSpec& m, const StationaryDensity& d, int bins, const McOptions& o) {
    check_mc(o);
    if (bins < 1) throw BadParameters("need at least one bin");
    const auto nb = static_cast<std::size_t>(bins);
    std::vector<std::vector<double>> counts(static_cast<std::size_t>(o.paths), std::vector<double>(nb, 0.0));
    parallel_for(counts.size(), [&](std::size_t p) {
        stationary_run(m, o, p, [&](const Coord& c) {
            const auto b = std::min(nb - 1, static_cast<std::size_t>(c.x * bins));
            counts[p][b] += 1.0;
        });
    });
    std::vector<double> tot(nb, 0.0);
    double all = 0.0;
    for (const auto& c : counts)
        for (std::size_t b = 0; b < nb; ++b) {
            tot[b] += c[b];
            all += c[b];
        }
    double l1 = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        const double xa = static_cast<double>(b) / bins, xb = static_cast<double>(b + 1) / bins;
        const double ya = xa == 0.0 ? -kInf : chart::y_of_x(xa), yb = xb >= 1.0 ? kInf : chart::y_of_x(xb);
        l1 += std::abs(tot[b] / all - d.mass(ya, yb));
    }
    return l1;
}

McEstimate mc_path_integral(const ModelSpec& m, const std::function<double(const Coord&)>& f, double x0, double T,
                            const McOptions& o) {
    check_mc(o);
    if (!(T > 0.0)) throw BadParameters("horizon must be positive");
    const auto n = static_cast<std::uint64_t>(std::ceil(T / o.dt - 1e-9));
    const double dt = T / static_cast<double>(n);
    std::vector<double> vals(static_cast<std::size_t>(o.paths));
    parallel_for(vals.size(), [&](std::size_t p) {
        Rng rng(o.seed, p);
        State s = state_from_x(m, {x0, 0.0});
        double prev = f(s.c[0]), acc = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
            advance(m, s, dt, rng);
            const double cur = f(s.c[0]);
            acc += 0.5 * (prev + cur) * dt;
            prev = cur;
        }
        vals[p] = acc;
    });
    return mean_se(vals);
}

EdgeSpectrum edge_spectrum_unchecked(const ModelSpec& m, int k, const EdgeOptions& opt) {
    if (m.dim() != 2) throw BadParameters("edge spectra need a planar model");
    EdgeSpectrum s;
    s.k = ((k % 4) + 4) % 4;
    const ModelSpec local = m.rotated(s.k);
    const ModelSpec edge = m.edge_restriction(s.k);
    s.endpoint_rates = {edge.p(0).value({0.0, 0.0}), -edge.p(0).value({1.0, 0.0})};
    s.in_S = s.endpoint_rates[0] > 0.0 && s.endpoint_rates[1] > 0.0;
    if (!s.in_S) return s;
    auto d = std::make_shared<StationaryDensity>(StationaryDensity::for_edge(edge, opt.quad));
    s.density = d;
    auto lam = [&local](double y) { return lambda2_chart(local, chart::from_y(y)); };
    s.lambda2_bar = d->expect(lam);
    s.quad_error = std::abs(s.lambda2_bar - d->expect_adaptive(lam));
    const int n = std::max(2, opt.grid_points);
    for (int i = 0; i < n; ++i) {
        const double y = d->lo() + (d->hi() - d->lo()) * i / (n - 1);
        const Coord c = chart::from_y(y);
        s.grid_y.push_back(y);
        s.grid_x.push_back(c.x);
        s.density_x.push_back(d->pdf_x(c.x));
        s.lambda2.push_back(lambda2_chart(local, c));
    }
    if (opt.monte_carlo)
        s.lambda2_mc = mc_time_average(edge, [&local](const Coord& c) { return lambda2_chart(local, c); }, opt.mc);
    return s;
}

EdgeSpectrum edge_spectrum(const ModelSpec& m, int k, const EdgeOptions& opt) {
    EdgeSpectrum s = edge_spectrum_unchecked(m, k, opt);
    if (!s.in_S) return s;
    const double thr = opt.tol_hyp + s.quad_error + (s.lambda2_mc ? 3.0 * s.lambda2_mc->se : 0.0);
    if (std::abs(s.lambda2_bar) < thr) {
        std::ostringstream os;
        os << "edge E" << s.k << " has transversal exponent " << s.lambda2_bar << " within " << thr << " of 0";
        throw NonHyperbolicEdge(os.str());
    }
    return s;
}

double transversal_exponent(const ModelSpec& m, int k, const EdgeOptions& opt) {
    const EdgeSpectrum s = edge_spectrum(m, k, opt);
    if (!s.in_S) {
        std::ostringstream os;
        os << "edge E" << s.k << " carries no invariant measure (endpoint rates " << s.endpoint_rates[0] << ", "
           << s.endpoint_rates[1] << ")";
        throw NotInS(os.str());
    }
    return s.lambda2_bar;
}

void write_edge_csv(std::ostream& os, const EdgeSpectrum& s, const Corrector* c) {
    os << "x1,y1,psi,lambda2,density\n";
    os << std::setprecision(12);
    for (std::size_t i = 0; i < s.grid_x.size(); ++i) {
        const double y = s.grid_y[i];
        os << s.grid_x[i] << ',' << y << ',';
        if (c) os << c->psi(y);
        os << ',' << s.lambda2[i] << ',' << s.density_x[i] << '\n';
    }
}

} // namespace degenflow
