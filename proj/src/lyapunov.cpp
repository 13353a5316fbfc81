#include "degenflow/lyapunov.hpp"

#include "degenflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace degenflow {

const char* to_string(LyapunovKind k) {
    switch (k) {
    case LyapunovKind::Corner: return "corner";
    case LyapunovKind::Edge: return "edge";
    default: return "extended";
    }
}

namespace {

int norm_k(int k) { return ((k % 4) + 4) % 4; }

} // namespace

Jet2 pull_back(const Jet2& loc, int k) {
    Jet2 j = loc;
    for (int s = 0; s < norm_k(k); ++s) {
        // One quarter turn: u = (y2, -y1), so d/dy1 = -d/du2, d/dy2 = d/du1.
        Jet2 r;
        r.v = j.v;
        r.g = {-j.g[1], j.g[0]};
        r.h.h11 = j.h.h22;
        r.h.h22 = j.h.h11;
        r.h.h12 = -j.h.h12;
        j = r;
    }
    return j;
}

Vec2 to_local_y(const Vec2& y, int k) {
    Vec2 u = y;
    for (int s = 0; s < norm_k(k); ++s) u = {u[1], -u[0]};
    return u;
}

Vec2 from_local_y(const Vec2& yk, int k) {
    Vec2 u = yk;
    for (int s = 0; s < norm_k(k); ++s) u = {-u[1], u[0]};
    return u;
}

void log_x_jet(double y, double& v, double& d1, double& d2) {
    if (y <= -chart::kYHigh) {
        v = y;
        d1 = 1.0;
        d2 = 0.0;
        return;
    }
    const Coord c = chart::from_y(y);
    v = std::log(c.x);
    d1 = chart::dx_dy(c) / c.x;
    d2 = chart::d2x_dy2(c) / c.x - d1 * d1;
}

LyapunovFn LyapunovFn::corner(double alpha, double beta, int k) {
    if (!std::isfinite(alpha) || !std::isfinite(beta)) throw BadParameters("corner weights must be finite");
    LyapunovFn L;
    L.kind_ = LyapunovKind::Corner;
    L.k_ = norm_k(k);
    L.a_ = alpha;
    L.b_ = beta;
    L.desc_ = "corner O" + std::to_string(L.k_);
    const int kk = L.k_;
    L.f_ = [alpha, beta, kk](const Vec2& y) {
        const Vec2 u = to_local_y(y, kk);
        double v1, a1, b1, v2, a2, b2;
        log_x_jet(u[0], v1, a1, b1);
        log_x_jet(u[1], v2, a2, b2);
        Jet2 j;
        j.v = -alpha * v1 - beta * v2;
        j.g = {-alpha * a1, -beta * a2};
        j.h.h11 = -alpha * b1;
        j.h.h22 = -beta * b2;
        return pull_back(j, kk);
    };
    return L;
}

LyapunovFn LyapunovFn::edge(double theta, std::shared_ptr<const Corrector> psi, int k) {
    if (!std::isfinite(theta)) throw BadParameters("edge weight must be finite");
    LyapunovFn L;
    L.kind_ = LyapunovKind::Edge;
    L.k_ = norm_k(k);
    L.a_ = theta;
    L.desc_ = "edge E" + std::to_string(L.k_);
    const int kk = L.k_;
    L.f_ = [theta, psi, kk](const Vec2& y) {
        const Vec2 u = to_local_y(y, kk);
        double v2, a2, b2;
        log_x_jet(u[1], v2, a2, b2);
        Jet2 j;
        j.v = theta * v2;
        j.g = {0.0, theta * a2};
        j.h.h22 = theta * b2;
        if (psi) {
            j.v += theta * psi->psi(u[0]);
            j.g[0] = theta * psi->psi_y(u[0]);
            j.h.h11 = theta * psi->psi_yy(u[0]);
        }
        return pull_back(j, kk);
    };
    return L;
}

LyapunovFn LyapunovFn::extended(Eval f, std::string description) {
    LyapunovFn L;
    L.kind_ = LyapunovKind::Extended;
    L.desc_ = std::move(description);
    L.f_ = std::move(f);
    return L;
}

Jet2 LyapunovFn::eval_x(const Vec2& x) const {
    const Vec2 y{chart::y_of_x(x[0]), chart::y_of_x(x[1])};
    const Jet2 j = f_(y);
    const double d1[2] = {chart::dy(x[0]), chart::dy(x[1])};
    const double d2[2] = {chart::d2y(x[0]), chart::d2y(x[1])};
    Jet2 r;
    r.v = j.v;
    r.g = {j.g[0] * d1[0], j.g[1] * d1[1]};
    r.h.h11 = j.h.h11 * d1[0] * d1[0] + j.g[0] * d2[0];
    r.h.h22 = j.h.h22 * d1[1] * d1[1] + j.g[1] * d2[1];
    r.h.h12 = j.h.h12 * d1[0] * d1[1];
    return r;
}

double LyapunovFn::generator(const ModelSpec& m, const Vec2& y) const { return m.generator_apply_y(f_, y); }

BandReport verify_generator_band(const ModelSpec& m, const LyapunovFn& phi, const BandRegion& region, double target,
                                 double halfwidth, int samples) {
    if (!(region.r_max > 0.0 && region.r_max <= 0.5)) throw BadParameters("band radius must lie in (0, 1/2]");
    BandReport rep;
    rep.target = target;
    rep.halfwidth = halfwidth;
    const int n = std::max(4, static_cast<int>(std::lround(std::sqrt(static_cast<double>(samples)))));
    const double dmin = 1e-12;
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = dmin * std::pow(region.r_max / dmin, (i + 0.5) / n);

    struct Sample {
        double d, dev;
    };
    std::vector<Sample> all;
    all.reserve(static_cast<std::size_t>(n * n));
    for (double d : dist) {
        double worst = 0.0;
        for (int j = 0; j < n; ++j) {
            Vec2 yk;
            if (region.kind == BandRegion::Kind::Edge) {
                // Along the edge: uniform in the chart coordinate over a wide window.
                yk = {-30.0 + 60.0 * (j + 0.5) / n, chart::y_of_x(d)};
            } else {
                const double a = 1.5707963267948966 * (j + 0.5) / n;
                yk = {chart::y_of_x(d * std::cos(a)), chart::y_of_x(d * std::sin(a))};
            }
            const Vec2 y = from_local_y(yk, region.k);
            const double dev = std::abs(phi.generator(m, y) - target);
            all.push_back({d, dev});
            worst = std::max(worst, std::isfinite(dev) ? dev : INFINITY);
        }
        rep.levels.push_back(d);
        rep.level_deviation.push_back(worst);
    }
    rep.samples = all.size();
    rep.r_found = region.r_max;
    for (const Sample& s : all) {
        rep.max_deviation = std::max(rep.max_deviation, s.dev);
        if (!(s.dev <= halfwidth)) {
            ++rep.violations;
            rep.r_found = std::min(rep.r_found, s.d);
        }
    }
    rep.satisfied = rep.violations == 0;
    return rep;
}

void corner_band(const VertexSpectrum& v, double alpha, double beta, double& target, double& halfwidth) {
    target = -(alpha * v.lambda1 + beta * v.lambda2);
    halfwidth = 0.5 * std::abs(alpha) * std::abs(v.lambda1) + 0.5 * std::abs(beta) * std::abs(v.lambda2);
}

void edge_band(double theta, double lambda2_bar, double& target, double& halfwidth) {
    target = theta * lambda2_bar;
    halfwidth = 0.5 * std::abs(theta) * std::abs(lambda2_bar);
}

} // namespace degenflow
