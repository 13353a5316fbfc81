#include "degenflow/hitting.hpp"

#include "degenflow/errors.hpp"
#include "degenflow/parallel.hpp"
#include "degenflow/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace degenflow {

const char* to_string(EdgeRole e) {
    switch (e) {
    case EdgeRole::Direct: return "direct";
    case EdgeRole::Indirect: return "indirect";
    default: return "attracting";
    }
}

const char* to_string(Region r) {
    switch (r) {
    case Region::R: return "R";
    case Region::Inner: return "Sigma_i";
    case Region::Outer: return "Sigma_o";
    default: return "Q";
    }
}

namespace {

int md(int k) { return ((k % 4) + 4) % 4; }
std::size_t ui(int k) { return static_cast<std::size_t>(md(k)); }

// Quintic smoothstep and its derivatives on [0, 1].
void smoothstep(double s, double& v, double& d1, double& d2) {
    if (s <= 0.0) {
        v = d1 = d2 = 0.0;
        return;
    }
    if (s >= 1.0) {
        v = 1.0;
        d1 = d2 = 0.0;
        return;
    }
    v = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    d1 = 30.0 * s * s * (1.0 - s) * (1.0 - s);
    d2 = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
}

// One-variable jet.
struct J1 {
    double v = 0.0, d1 = 0.0, d2 = 0.0;
};
J1 operator+(const J1& a, const J1& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
J1 operator*(const J1& a, const J1& b) { return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2}; }
J1 operator*(double c, const J1& a) { return {c * a.v, c * a.d1, c * a.d2}; }
J1 one_minus(const J1& a) { return {1.0 - a.v, -a.d1, -a.d2}; }

J1 log_x(double y) {
    J1 j;
    log_x_jet(y, j.v, j.d1, j.d2);
    return j;
}
// ln(1 - x(y)) = ln x(-y).
J1 log_1mx(double y) {
    J1 j = log_x(-y);
    j.d1 = -j.d1;
    return j;
}

} // namespace

// ---------------------------------------------------------------------------

bool RegionGeometry::in_R(const Vec2& y) const {
    bool strip = false;
    for (int k = 0; k < 4; ++k) {
        const Vec2 u = to_local_y(y, k);
        if (u[1] < log_r_prime) strip = true;
        if (vertex_attracting[ui(k)] && u[0] <= log_r && u[1] <= log_r) return true;
        if (edge[ui(k)] == EdgeRole::Attracting && u[0] >= log_r && u[0] <= -log_r && u[1] <= log_r) return true;
    }
    return !strip;
}

bool RegionGeometry::in_outer(const Vec2& y) const {
    for (int k = 0; k < 4; ++k) {
        const Vec2 u = to_local_y(y, k);
        if (!vertex_attracting[ui(k)] && u[0] < outer[ui(k)][0] && u[1] < outer[ui(k)][1]) return true;
        const double a = log_r + log_eps;
        if (edge[ui(k)] == EdgeRole::Indirect && u[0] > a && u[0] < -a && u[1] < log_r) return true;
    }
    return false;
}

bool RegionGeometry::in_inner(const Vec2& y) const {
    for (int k = 0; k < 4; ++k) {
        const Vec2 u = to_local_y(y, k);
        if (!vertex_attracting[ui(k)] && u[0] < inner[ui(k)][0] && u[1] < inner[ui(k)][1]) return true;
        if (edge[ui(k)] == EdgeRole::Indirect && u[0] > log_r && u[0] < -log_r && u[1] < log_r + log_delta) return true;
    }
    return false;
}

Region RegionGeometry::classify(const Vec2& y) const {
    if (in_R(y)) return Region::R;
    if (in_inner(y)) return Region::Inner;
    if (in_outer(y)) return Region::Outer;
    return Region::Q;
}

void RegionGeometry::xi(double y1, double& v, double& d1, double& d2) const {
    const J1 l = log_x(y1);
    const double u = std::exp(l.v), du = u * l.d1, ddu = u * (l.d2 + l.d1 * l.d1);
    const double w = 1.0 - 2.0 * r;
    double s, s1, s2;
    smoothstep((u - r) / w, s, s1, s2);
    v = 1.0 - s;
    d1 = -s1 * du / w;
    d2 = -s2 * du * du / (w * w) - s1 * ddu / w;
}

void RegionGeometry::chi(double y1, double& v, double& d1, double& d2) const {
    const double len = -log_eps;
    double s, s1, s2;
    smoothstep((y1 - (2.0 * log_eps + log_r)) / len, s, s1, s2);
    v = 1.0 - s;
    d1 = -s1 / len;
    d2 = -s2 / (len * len);
}

std::string RegionGeometry::describe() const {
    std::ostringstream os;
    os << "r=" << r << " ln(eps)=" << log_eps << " ln(delta)=" << log_delta << " ln(r')=" << log_r_prime << ";";
    for (int k = 0; k < 4; ++k) os << " E" << k << ":" << to_string(edge[ui(k)]);
    for (int k = 0; k < 4; ++k)
        if (vertex_attracting[ui(k)]) os << " O" << k << ":attracting";
    return os.str();
}

RegionGeometry build_geometry(const Scenario& s, const GeometryParams& p) {
    if (s.kind == ScenarioCase::StableCycle) throw ScenarioMismatch("region construction needs scenario I or III");
    if (!s.betas) throw ScenarioMismatch("scenario carries no beta assignment");
    if (!(p.r > 0.0 && p.r < 0.25)) throw BadParameters("r must lie in (0, 1/4)");
    if (!(p.log_eps < 0.0) || !std::isfinite(p.log_eps)) throw BadParameters("eps must lie in (0, 1)");
    if (!(p.log_delta <= 0.0) || !std::isfinite(p.log_delta)) throw BadParameters("delta must lie in (0, 1]");
    RegionGeometry g;
    g.r = p.r;
    g.log_r = std::log(p.r);
    g.log_eps = p.log_eps;
    g.log_delta = p.log_delta;
    const double max_rp = p.log_delta + 2.0 * p.log_eps + g.log_r;
    g.log_r_prime = std::isnan(p.log_r_prime) ? max_rp : p.log_r_prime;
    if (!(g.log_r_prime <= max_rp + 1e-12)) throw BadParameters("need r' <= delta eps^2 r");
    for (int k = 0; k < 4; ++k) {
        const VertexSpectrum& v = s.vertices[ui(k)];
        g.vertex_rates[ui(k)] = {v.lambda1, v.lambda2};
        g.vertex_attracting[ui(k)] = false;
        g.edge[ui(k)] = s.edges[ui(k)].in_S ? EdgeRole::Indirect : EdgeRole::Direct;
    }
    for (const AttractorMember& a : s.attractors.members) {
        if (a.type == AttractorMember::Type::Vertex) g.vertex_attracting[ui(a.k)] = true;
        else g.edge[ui(a.k)] = EdgeRole::Attracting;
    }
    const double deep = g.log_r + 2.0 * g.log_eps;
    for (int k = 0; k < 4; ++k) {
        auto& o = g.outer[ui(k)];
        o[0] = g.edge[ui(k)] == EdgeRole::Indirect ? deep : g.log_r;
        o[1] = g.edge[ui(k - 1)] == EdgeRole::Indirect ? deep : g.log_r;
        for (std::size_t i = 0; i < 2; ++i)
            g.inner[ui(k)][i] = o[i] + (g.vertex_rates[ui(k)][i] < 0.0 ? g.log_eps : g.log_delta);
    }
    return g;
}

// ---------------------------------------------------------------------------

namespace {

struct Glue {
    std::array<double, 4> beta{};
    CorrectorSet psi;
    RegionGeometry g;

    J1 corner_part(int k, double y1) const { return -beta[ui(k - 1)] * log_x(y1); }
    J1 end_part(int k, double y1) const { return -beta[ui(k + 1)] * log_1mx(y1); }
    J1 edge_part(int k, double y1) const {
        const Corrector& c = *psi[ui(k)];
        return -beta[ui(k)] * J1{c.psi(y1), c.psi_y(y1), c.psi_yy(y1)};
    }
    J1 direct(int k, double y1) const {
        J1 w;
        g.xi(y1, w.v, w.d1, w.d2);
        return w * corner_part(k, y1) + one_minus(w) * end_part(k, y1);
    }
    J1 indirect(int k, double y1) const {
        J1 c, cb;
        g.chi(y1, c.v, c.d1, c.d2);
        g.chi(-y1, cb.v, cb.d1, cb.d2);
        cb.d1 = -cb.d1;
        J1 out = c * corner_part(k, y1) + cb * end_part(k, y1);
        const J1 mid = one_minus(c) * one_minus(cb);
        if (mid.v != 0.0 || mid.d1 != 0.0 || mid.d2 != 0.0) out = out + mid * edge_part(k, y1);
        return out;
    }
    // Phi = f(y1^k) - beta_k ln x2^k in the chart of E^k / O^k.
    Jet2 assemble(int k, const J1& f, double y2) const {
        const J1 l = log_x(y2);
        Jet2 j;
        j.v = f.v - beta[ui(k)] * l.v;
        j.g = {f.d1, -beta[ui(k)] * l.d1};
        j.h.h11 = f.d2;
        j.h.h22 = -beta[ui(k)] * l.d2;
        return pull_back(j, k);
    }

    Jet2 eval(const Vec2& y) const {
        for (int k = 0; k < 4; ++k) {
            const Vec2 u = to_local_y(y, k);
            if (!g.vertex_attracting[ui(k)] && u[0] < g.outer[ui(k)][0] && u[1] < g.outer[ui(k)][1])
                return assemble(k, corner_part(k, u[0]), u[1]);
        }
        const double a = g.log_r + g.log_eps;
        for (int k = 0; k < 4; ++k) {
            const Vec2 u = to_local_y(y, k);
            if (g.edge[ui(k)] == EdgeRole::Indirect && u[0] > a && u[0] < -a && u[1] < g.log_r)
                return assemble(k, edge_part(k, u[0]), u[1]);
        }
        int best = -1;
        double depth = g.log_r_prime;
        for (int k = 0; k < 4; ++k) {
            const double d = to_local_y(y, k)[1];
            if (d < depth) {
                depth = d;
                best = k;
            }
        }
        if (best >= 0) {
            const Vec2 u = to_local_y(y, best);
            switch (g.edge[ui(best)]) {
            case EdgeRole::Direct: return assemble(best, direct(best, u[0]), u[1]);
            case EdgeRole::Indirect: return assemble(best, indirect(best, u[0]), u[1]);
            default: break;
            }
        }
        Jet2 nan;
        nan.v = std::numeric_limits<double>::quiet_NaN();
        return nan;
    }
};

Glue make_glue(const BetaAssignment& b, const CorrectorSet& psi, const RegionGeometry& g) {
    Glue gl;
    gl.beta = b.beta;
    gl.psi = psi;
    gl.g = g;
    for (int k = 0; k < 4; ++k)
        if (g.edge[ui(k)] == EdgeRole::Indirect && !psi[ui(k)])
            throw MissingCorrector("no corrector for edge E" + std::to_string(k));
    return gl;
}

} // namespace

LyapunovFn extended_lyapunov(const BetaAssignment& b, const CorrectorSet& psi, const RegionGeometry& g, double shift) {
    const Glue gl = make_glue(b, psi, g);
    return LyapunovFn::extended(
        [gl, shift](const Vec2& y) {
            Jet2 j = gl.eval(y);
            j.v += shift;
            return j;
        },
        "extended: " + g.describe());
}

double extended_lower_bound(const BetaAssignment& b, const CorrectorSet& psi, const RegionGeometry& g) {
    make_glue(b, psi, g);
    double lb = INFINITY;
    const double deep = g.log_r + 2.0 * g.log_eps;
    for (int k = 0; k < 4; ++k) {
        const auto uk = ui(k);
        if (!g.vertex_attracting[uk])
            lb = std::min(lb, -b.beta[ui(k - 1)] * g.outer[uk][0] - b.beta[uk] * g.outer[uk][1]);
        if (g.edge[uk] == EdgeRole::Attracting) continue;
        double psi_max = 0.0;
        if (g.edge[uk] == EdgeRole::Indirect) {
            const int n = 2000;
            for (int i = 0; i <= n; ++i) psi_max = std::max(psi_max, psi[uk]->psi(deep - 2.0 * deep * i / n));
            lb = std::min(lb, b.beta[uk] * (-g.log_r - psi_max));
        }
        lb = std::min(lb, b.beta[uk] * (-g.log_r_prime - psi_max));
    }
    return lb;
}

HittingSpec make_hitting_spec(const ModelSpec& m, const Scenario& s, const GeometryParams& p) {
    HittingSpec h;
    h.geometry = build_geometry(s, p);
    h.betas = *s.betas;
    for (int k = 0; k < 4; ++k)
        if (h.geometry.edge[ui(k)] == EdgeRole::Indirect)
            h.correctors[ui(k)] = std::make_shared<const Corrector>(solve_corrector(m, k));
    const double lb = extended_lower_bound(h.betas, h.correctors, h.geometry);
    h.shift = std::max(0.0, 1.0 - lb);
    h.phi = extended_lyapunov(h.betas, h.correctors, h.geometry, h.shift);
    return h;
}

// ---------------------------------------------------------------------------

bool ConditionReport::all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ConditionRow& r) { return r.pass; });
}

namespace {

struct Estimate {
    double mean = 0.0, se = 0.0;
    std::size_t capped = 0;
};

// Mean of min(stop time, cap) over paths from y0; `stop` is checked at the
// start and after every step.
Estimate stopping_time(const ModelSpec& m, const Vec2& y0, const std::function<bool(const Vec2&)>& stop, double cap,
                       double dt, std::size_t runs, std::uint64_t seed, std::uint64_t stream0, int threads) {
    Estimate e;
    if (stop(y0)) return e;
    std::vector<double> t(runs, 0.0);
    std::vector<char> capped(runs, 0);
    parallel_for(
        runs,
        [&](std::size_t i) {
            Rng rng(seed, stream0 + i);
            bool hit = false;
            const State end = run_path(m, state_from_y(m, y0), cap, dt, rng, [&](const State& s) {
                hit = stop(s.y());
                return !hit;
            });
            t[i] = end.t;
            capped[i] = hit ? 0 : 1;
        },
        threads);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < runs; ++i) {
        s += t[i];
        s2 += t[i] * t[i];
        e.capped += static_cast<std::size_t>(capped[i]);
    }
    const double n = static_cast<double>(runs);
    e.mean = s / n;
    e.se = runs > 1 ? std::sqrt(std::max(0.0, s2 / n - e.mean * e.mean) / (n - 1.0)) : 0.0;
    return e;
}

struct GridMax {
    double value = -INFINITY;
    Vec2 worst{0.0, 0.0};
    std::size_t points = 0;
};

GridMax generator_max(const ModelSpec& m, const LyapunovFn& phi, const std::vector<Vec2>& pts, int threads) {
    std::vector<double> v(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) { v[i] = phi.generator(m, pts[i]); }, threads);
    GridMax g;
    g.points = pts.size();
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (v[i] > g.value || std::isnan(v[i])) {
            g.value = std::isnan(v[i]) ? INFINITY : v[i];
            g.worst = pts[i];
            if (std::isnan(v[i])) break;
        }
    return g;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * (i + 0.5) / n);
    return v;
}

std::vector<Vec2> outer_grid(const RegionGeometry& g, const ConditionOptions& o) {
    std::vector<Vec2> pts;
    const double D = o.depth_span;
    for (int k = 0; k < 4; ++k) {
        const auto uk = ui(k);
        if (!g.vertex_attracting[uk]) {
            const int n = 2 * o.across;
            for (double a : linspace(g.outer[uk][0] - D, g.outer[uk][0], n))
                for (double b : linspace(g.outer[uk][1] - D, g.outer[uk][1], n)) pts.push_back(from_local_y({a, b}, k));
        }
        if (g.edge[uk] == EdgeRole::Indirect) {
            const double a0 = g.log_r + g.log_eps;
            for (double a : linspace(a0, -a0, o.along))
                for (double b : linspace(g.log_r - D, g.log_r, o.across)) pts.push_back(from_local_y({a, b}, k));
        }
    }
    return pts;
}

// Q points of strip k, grouped into runs of consecutive edge positions.
std::vector<std::vector<Vec2>> q_grid(const RegionGeometry& g, const ConditionOptions& o, int k,
                                      std::vector<std::pair<double, double>>& intervals) {
    const double a0 = g.log_r + 2.0 * g.log_eps - 0.5;
    const std::vector<double> along = linspace(a0, -a0, 2 * o.along);
    const std::vector<double> across = linspace(g.log_r_prime - o.depth_span, g.log_r_prime, o.across);
    std::vector<std::vector<Vec2>> groups;
    bool open = false;
    for (double a : along) {
        std::vector<Vec2> col;
        for (double b : across) {
            const Vec2 y = from_local_y({a, b}, k);
            if (g.classify(y) == Region::Q) col.push_back(y);
        }
        if (col.empty()) {
            open = false;
            continue;
        }
        if (!open) {
            groups.emplace_back();
            intervals.push_back({a, a});
            open = true;
        }
        groups.back().insert(groups.back().end(), col.begin(), col.end());
        intervals.back().second = a;
    }
    return groups;
}

std::vector<Vec2> q_starts(const RegionGeometry& g, const ConditionOptions& o) {
    std::vector<Vec2> starts;
    for (int k = 0; k < 4; ++k) {
        std::vector<std::pair<double, double>> iv;
        q_grid(g, o, k, iv);
        for (const auto& [lo, hi] : iv)
            for (double a : {lo, 0.5 * (lo + hi), hi})
                for (double d : {0.5, 0.5 * o.depth_span}) {
                    const Vec2 y = from_local_y({a, g.log_r_prime - d}, k);
                    if (g.classify(y) == Region::Q) starts.push_back(y);
                }
    }
    return starts;
}

std::vector<Vec2> inner_starts(const RegionGeometry& g, const ConditionOptions& o) {
    std::vector<Vec2> starts;
    const double h = 0.05, D = 0.5 * o.depth_span;
    for (int k = 0; k < 4; ++k) {
        const auto uk = ui(k);
        if (!g.vertex_attracting[uk]) {
            const auto& in = g.inner[uk];
            for (const Vec2& u : {Vec2{in[0] - h, in[1] - h}, Vec2{in[0] - D, in[1] - h}, Vec2{in[0] - h, in[1] - D}})
                starts.push_back(from_local_y(u, k));
        }
        if (g.edge[uk] == EdgeRole::Indirect)
            for (double a : {g.log_r + h, 0.0, -g.log_r - h})
                for (double d : {h, D}) starts.push_back(from_local_y({a, g.log_r + g.log_delta - d}, k));
    }
    return starts;
}

ConditionRow row_c(const HittingSpec& spec, const ModelSpec& m, const std::vector<Vec2>& starts, double cap,
                   std::size_t runs, double dt, std::uint64_t seed, int threads, std::size_t& capped) {
    const RegionGeometry& g = spec.geometry;
    auto stop = [&g](const Vec2& y) { return g.in_R(y) || g.in_inner(y); };
    ConditionRow row;
    row.name = "c";
    row.value = -INFINITY;
    row.points = starts.size();
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const Estimate e = stopping_time(m, starts[i], stop, cap, dt, runs, seed, i * runs, threads);
        capped += e.capped;
        if (e.mean > row.value) {
            row.value = e.mean;
            row.se = e.se;
            row.worst = starts[i];
        }
    }
    return row;
}

} // namespace

ConditionRow check_exit_condition(const HittingSpec& spec, const ModelSpec& m, const ConditionOptions& opt) {
    const RegionGeometry& g = spec.geometry;
    const std::vector<Vec2> starts = inner_starts(g, opt);
    const double bound = spec.T * (2.0 * spec.K + 1.0);
    auto stop = [&g](const Vec2& y) { return !g.in_outer(y); };
    ConditionRow row;
    row.name = "d";
    row.bound = bound;
    row.value = INFINITY;
    row.points = starts.size();
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const Estimate e =
            stopping_time(m, starts[i], stop, 2.0 * bound, opt.dt, opt.runs, opt.seed + 2, i * opt.runs, opt.threads);
        if (e.mean < row.value) {
            row.value = e.mean;
            row.se = e.se;
            row.worst = starts[i];
        }
    }
    row.margin = row.value - bound;
    row.pass = row.margin > 0.0;
    row.conditional = row.pass && row.value - 3.0 * row.se <= bound;
    return row;
}

ConditionReport verify_conditions(HittingSpec& spec, const ModelSpec& m, const ConditionOptions& opt) {
    if (opt.runs < 2 || !(opt.dt > 0.0) || opt.along < 2 || opt.across < 2) throw BadParameters("bad condition options");
    const RegionGeometry& g = spec.geometry;
    ConditionReport rep;

    const GridMax a = generator_max(m, spec.phi, outer_grid(g, opt), opt.threads);
    ConditionRow& ra = rep.rows[0];
    ra.name = "a";
    ra.value = a.value;
    ra.bound = -1.0;
    ra.margin = -1.0 - a.value;
    ra.pass = ra.margin > 0.0;
    ra.points = a.points;
    ra.worst = a.worst;

    std::vector<Vec2> qpts;
    for (int k = 0; k < 4; ++k) {
        std::vector<std::pair<double, double>> iv;
        for (const auto& grp : q_grid(g, opt, k, iv)) qpts.insert(qpts.end(), grp.begin(), grp.end());
    }
    const GridMax b = generator_max(m, spec.phi, qpts, opt.threads);
    spec.K = std::isnan(opt.K) ? std::max(1.0, 1.25 * b.value + 0.25) : opt.K;
    if (qpts.empty() && std::isnan(opt.K)) spec.K = 1.0;
    ConditionRow& rb = rep.rows[1];
    rb.name = "b";
    rb.value = qpts.empty() ? -INFINITY : b.value;
    rb.bound = spec.K;
    rb.margin = spec.K - rb.value;
    rb.pass = spec.K >= 1.0 && rb.margin > 0.0;
    rb.points = qpts.size();
    rb.worst = b.worst;

    const std::vector<Vec2> starts = q_starts(g, opt);
    if (std::isnan(opt.T)) {
        std::size_t pilot_capped = 0;
        const ConditionRow pilot = row_c(spec, m, starts, 1e3, std::max<std::size_t>(20, opt.runs / 2), opt.dt,
                                         opt.seed + 1, opt.threads, pilot_capped);
        spec.T = starts.empty() ? 1.0 : 1.5 * pilot.value;
    } else {
        spec.T = opt.T;
    }
    if (!(spec.T > 0.0)) throw BadParameters("T must be positive");
    ConditionRow rc = row_c(spec, m, starts, opt.cap_factor * spec.T, opt.runs, opt.dt, opt.seed, opt.threads, rep.capped);
    if (starts.empty()) rc.value = 0.0;
    rc.bound = spec.T;
    rc.margin = spec.T - rc.value;
    rc.pass = rc.margin > 0.0 && rep.capped == 0;
    rc.conditional = rc.pass && rc.value + 3.0 * rc.se >= spec.T;
    rep.rows[2] = rc;

    rep.rows[3] = check_exit_condition(spec, m, opt);
    rep.K = spec.K;
    rep.T = spec.T;
    return rep;
}

DeltaSearch tune_delta(const ModelSpec& m, const Scenario& s, GeometryParams p, double K, double T,
                       const ConditionOptions& opt, int bisections, int max_doublings) {
    if (!(K >= 1.0 && T > 0.0)) throw BadParameters("need K >= 1 and T > 0");
    DeltaSearch out;
    p.log_r_prime = std::numeric_limits<double>::quiet_NaN();
    auto margin = [&](double ld) {
        p.log_delta = ld;
        HittingSpec h = make_hitting_spec(m, s, p);
        h.K = K;
        h.T = T;
        const double mg = check_exit_condition(h, m, opt).margin;
        out.trials.push_back({ld, mg});
        return mg;
    };
    double lo = p.log_delta;  // failing side (closer to 0)
    if (!(lo < 0.0)) lo = -1.0;
    if (margin(lo) > 0.0) {
        out.log_delta = lo;
        return out;
    }
    double hi = lo;
    bool found = false;
    for (int i = 0; i < max_doublings && !found; ++i) {
        lo = hi;
        hi *= 2.0;
        found = margin(hi) > 0.0;
    }
    if (!found) throw Infeasible("no delta found for condition (d) within the doubling budget");
    for (int i = 0; i < bisections; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (margin(mid) > 0.0) hi = mid;
        else lo = mid;
    }
    out.log_delta = hi;
    return out;
}

// ---------------------------------------------------------------------------

std::vector<Vec2> boundary_starts(const RegionGeometry& g, const std::vector<double>& depths) {
    int k = -1;
    for (int i = 0; i < 4 && k < 0; ++i)
        if (g.edge[ui(i)] != EdgeRole::Attracting) k = i;
    if (k < 0) throw BadParameters("every edge is attracting");
    std::vector<Vec2> out;
    for (double d : depths) out.push_back(from_local_y({0.0, g.log_r_prime - d}, k));
    return out;
}

std::vector<BoundRow> validate_bound(const HittingSpec& spec, const ModelSpec& m, const std::vector<Vec2>& starts_y,
                                     const BoundOptions& opt) {
    const RegionGeometry& g = spec.geometry;
    auto stop = [&g](const Vec2& y) { return g.in_R(y); };
    std::vector<BoundRow> rows;
    for (std::size_t i = 0; i < starts_y.size(); ++i) {
        BoundRow row;
        row.y = starts_y[i];
        row.runs = opt.runs;
        row.phi = g.in_R(row.y) ? 0.0 : spec.phi.eval_y(row.y).v;
        row.bound = 3.0 * row.phi + 2.0 * spec.K * spec.T;
        const Estimate e = stopping_time(m, row.y, stop, opt.cap, opt.dt, opt.runs, opt.seed, i * opt.runs, opt.threads);
        row.mean = e.mean;
        row.se = e.se;
        row.capped = e.capped;
        if (static_cast<double>(e.capped) > opt.max_capped_fraction * static_cast<double>(opt.runs))
            throw HorizonExceeded(std::to_string(e.capped) + " of " + std::to_string(opt.runs) +
                                  " paths did not reach R before the cap");
        row.pass = row.mean <= row.bound + 3.0 * row.se;
        rows.push_back(row);
    }
    return rows;
}

ClassicalReport validate_classical(const ModelSpec& m, const LyapunovFn& phi, int k, double r,
                                   const std::vector<Vec2>& starts_y, const BoundOptions& opt, double depth_span) {
    if (!(r > 0.0 && r < 0.25)) throw BadParameters("r must lie in (0, 1/4)");
    const double lr = std::log(r);
    auto inside = [k, lr](const Vec2& y) {
        const Vec2 u = to_local_y(y, k);
        return u[0] < lr && u[1] < lr;
    };
    ClassicalReport rep;
    std::vector<Vec2> pts;
    for (double a : linspace(lr - depth_span, lr, 48))
        for (double b : linspace(lr - depth_span, lr, 48)) pts.push_back(from_local_y({a, b}, k));
    rep.max_generator = generator_max(m, phi, pts, opt.threads).value;
    rep.min_phi = INFINITY;
    for (const Vec2& y : pts) rep.min_phi = std::min(rep.min_phi, phi.eval_y(y).v);
    rep.conditions = rep.max_generator <= -1.0 && rep.min_phi >= 0.0;
    for (std::size_t i = 0; i < starts_y.size(); ++i) {
        BoundRow row;
        row.y = starts_y[i];
        row.runs = opt.runs;
        row.phi = inside(row.y) ? phi.eval_y(row.y).v : 0.0;
        row.bound = row.phi;
        const Estimate e = stopping_time(m, row.y, [&](const Vec2& y) { return !inside(y); }, opt.cap, opt.dt, opt.runs,
                                         opt.seed, i * opt.runs, opt.threads);
        row.mean = e.mean;
        row.se = e.se;
        row.capped = e.capped;
        if (static_cast<double>(e.capped) > opt.max_capped_fraction * static_cast<double>(opt.runs))
            throw HorizonExceeded(std::to_string(e.capped) + " paths stayed in the box past the cap");
        row.pass = row.mean <= row.bound + 3.0 * row.se;
        rep.rows.push_back(row);
    }
    return rep;
}

McEstimate dynkin_check(const ModelSpec& m, const LyapunovFn& phi, const Vec2& y0,
                        const std::function<bool(const Vec2&)>& inside, double horizon, std::size_t runs, double dt,
                        std::uint64_t seed) {
    if (runs < 2) throw BadParameters("need at least two runs");
    std::vector<double> d(runs);
    const double phi0 = phi.eval_y(y0).v;
    const double gen0 = phi.generator(m, y0);
    parallel_for(runs, [&](std::size_t i) {
        Rng rng(seed, i);
        double integral = 0.0, prev_t = 0.0, prev_gen = gen0;
        const State end = run_path(m, state_from_y(m, y0), horizon, dt, rng, [&](const State& s) {
            integral += prev_gen * (s.t - prev_t);
            prev_t = s.t;
            const Vec2 y = s.y();
            if (!inside(y)) return false;
            prev_gen = phi.generator(m, y);
            return true;
        });
        d[i] = phi.eval_y(end.y()).v - phi0 - integral;
    });
    double s = 0.0, s2 = 0.0;
    for (double v : d) {
        s += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(runs);
    McEstimate e;
    e.mean = s / n;
    e.se = std::sqrt(std::max(0.0, s2 / n - e.mean * e.mean) / (n - 1.0));
    return e;
}

} // namespace degenflow
