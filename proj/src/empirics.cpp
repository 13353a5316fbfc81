#include "degenflow/empirics.hpp"

#include "degenflow/errors.hpp"
#include "degenflow/lyapunov.hpp"
#include "degenflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace degenflow {

namespace {

int md(int k) { return ((k % 4) + 4) % 4; }

int bin_of(double x, int bins) { return std::clamp(static_cast<int>(std::floor(x * bins)), 0, bins - 1); }

// Corner index of the box U_r^k containing y, or -1; ly = y(r).
int corner_of(const Vec2& y, double ly) {
    for (int k = 0; k < 4; ++k) {
        const Vec2 u = to_local_y(y, k);
        if (u[0] < ly && u[1] < ly) return k;
    }
    return -1;
}

int strip_of(const Vec2& y, double ly) {
    for (int k = 0; k < 4; ++k) {
        const Vec2 u = to_local_y(y, k);
        if (u[1] < ly && u[0] > ly && u[0] < -ly) return k;
    }
    return -1;
}

} // namespace

double EmpiricalMeasure::total() const { return std::accumulate(w.begin(), w.end(), 0.0); }

double EmpiricalMeasure::l1(const EmpiricalMeasure& o) const {
    if (o.w.size() != w.size()) throw BadParameters("measures live on different grids");
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += std::abs(w[i] - o.w[i]);
    return s;
}

EmpiricalMeasure EmpiricalMeasure::combine(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    if (a.w.size() != b.w.size() || a.dim != b.dim) throw BadParameters("measures live on different grids");
    EmpiricalMeasure c = a;
    const double sa = a.span(), sb = b.span(), s = sa + sb;
    c.t0 = std::min(a.t0, b.t0);
    c.t1 = std::max(a.t1, b.t1);
    for (std::size_t i = 0; i < c.w.size(); ++i) c.w[i] = (a.w[i] * sa + b.w[i] * sb) / s;
    for (std::size_t k = 0; k < 4; ++k) {
        c.vertex_mass[k] = (a.vertex_mass[k] * sa + b.vertex_mass[k] * sb) / s;
        c.edge_mass[k] = (a.edge_mass[k] * sa + b.edge_mass[k] * sb) / s;
    }
    return c;
}

EmpiricalMeasure empirical_measure(const Trajectory& tr, int bins, double r0, std::size_t begin, std::size_t end) {
    if (bins < 1) throw BadParameters("bins must be positive");
    if (!(r0 > 0.0 && r0 < 0.25)) throw BadParameters("r0 must lie in (0, 1/4)");
    end = std::min(end, tr.size());
    if (begin >= end) throw BadParameters("empty trajectory stretch");
    EmpiricalMeasure e;
    e.dim = tr.dim;
    e.bins = bins;
    e.r0 = r0;
    e.t0 = tr.t[begin];
    e.t1 = tr.t[end - 1];
    e.w.assign(static_cast<std::size_t>(tr.dim == 2 ? bins * bins : bins), 0.0);
    const double ly = chart::y_of_x(r0);
    auto deposit = [&](std::size_t i, double h) {
        const Vec2& x = tr.x[i];
        const Vec2& y = tr.y[i];
        if (tr.dim == 2) {
            e.at(bin_of(x[0], bins), bin_of(x[1], bins)) += h;
            const int c = corner_of(y, ly);
            if (c >= 0) e.vertex_mass[static_cast<std::size_t>(c)] += h;
            else {
                const int s = strip_of(y, ly);
                if (s >= 0) e.edge_mass[static_cast<std::size_t>(s)] += h;
            }
        } else {
            e.at(bin_of(x[0], bins)) += h;
            if (y[0] < ly) e.vertex_mass[0] += h;
            else if (y[0] > -ly) e.vertex_mass[1] += h;
        }
    };
    if (end - begin == 1) {
        // A single instant: unit mass at that point.
        deposit(begin, 1.0);
        return e;
    }
    for (std::size_t i = begin; i + 1 < end; ++i) {
        const double h = 0.5 * (tr.t[i + 1] - tr.t[i]);
        deposit(i, h);
        deposit(i + 1, h);
    }
    const double span = e.span();
    for (double& v : e.w) v /= span;
    for (std::size_t k = 0; k < 4; ++k) {
        e.vertex_mass[k] /= span;
        e.edge_mass[k] /= span;
    }
    return e;
}

// ---------------------------------------------------------------------------

double ConvergenceEstimate::probability(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return p[i];
    throw BadParameters("no attractor named " + name);
}

double ConvergenceEstimate::std_error(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return se[i];
    throw BadParameters("no attractor named " + name);
}

namespace {

struct Trap {
    std::string name;
    // Depth of the point relative to the trap (max local log coordinate); in
    // trap when below ly.
    std::function<double(const Vec2& y)> depth;
    // Closeness used for near_fraction.
    std::function<bool(const Vec2& y)> near;
};

void check_options(const ConvergenceOptions& o) {
    if (o.runs == 0) throw BadParameters("runs must be positive");
    if (!(o.horizon > 0.0 && o.dt > 0.0 && o.dt <= o.horizon)) throw BadParameters("need 0 < dt <= horizon");
    if (!(o.trap_radius > 0.0 && o.trap_radius < 0.25)) throw BadParameters("trap radius must lie in (0, 1/4)");
    if (!(o.final_fraction > 0.0 && o.final_fraction <= 1.0)) throw BadParameters("final fraction must lie in (0, 1]");
}

ConvergenceEstimate run_traps(const ModelSpec& m, const State& s0, const std::vector<Trap>& traps,
                              const ConvergenceOptions& o) {
    check_options(o);
    ConvergenceEstimate est;
    est.options = o;
    est.runs = o.runs;
    for (const Trap& t : traps) est.names.push_back(t.name);
    est.outcome.assign(o.runs, -1);
    est.near_fraction.assign(o.runs, 0.0);
    const double ly = chart::y_of_x(o.trap_radius);
    const double t_final = o.horizon * (1.0 - o.final_fraction);
    parallel_for(
        o.runs,
        [&](std::size_t r) {
            Rng rng(o.seed, r);
            std::vector<char> inside(traps.size(), 1);
            std::vector<double> near(traps.size(), 0.0);
            double prev_t = s0.t;
            std::vector<char> prev_near(traps.size(), 0);
            for (std::size_t j = 0; j < traps.size(); ++j) prev_near[j] = traps[j].near(s0.y());
            const State end = run_path(m, s0, o.horizon, o.dt, rng, [&](const State& s) {
                const Vec2 y = s.y();
                for (std::size_t j = 0; j < traps.size(); ++j) {
                    const bool nj = traps[j].near(y);
                    near[j] += 0.5 * (s.t - prev_t) * (static_cast<double>(nj) + static_cast<double>(prev_near[j]));
                    prev_near[j] = nj;
                    if (s.t >= t_final && !(traps[j].depth(y) < ly)) inside[j] = 0;
                }
                prev_t = s.t;
                return true;
            });
            for (std::size_t j = 0; j < traps.size(); ++j) {
                if (inside[j] && traps[j].depth(end.y()) <= o.depth_threshold) {
                    est.outcome[r] = static_cast<int>(j);
                    est.near_fraction[r] = near[j] / o.horizon;
                    break;
                }
            }
        },
        o.threads);
    est.counts.assign(traps.size(), 0);
    for (int v : est.outcome) {
        if (v < 0) ++est.unresolved;
        else ++est.counts[static_cast<std::size_t>(v)];
    }
    const double n = static_cast<double>(o.runs);
    for (std::size_t c : est.counts) {
        const double p = static_cast<double>(c) / n;
        est.p.push_back(p);
        est.se.push_back(std::sqrt(p * (1.0 - p) / n));
    }
    est.unresolved_fraction = static_cast<double>(est.unresolved) / n;
    return est;
}

} // namespace

ConvergenceEstimate estimate_convergence(const ModelSpec& m, const Vec2& x0, const Scenario& s,
                                         const ConvergenceOptions& opt) {
    if (m.dim() != 2) throw BadParameters("planar model expected");
    if (s.kind != ScenarioCase::AttractorSet) throw ScenarioMismatch("convergence estimates need scenario I, got " + s.label());
    const double r = opt.trap_radius;
    std::vector<Trap> traps;
    for (const AttractorMember& a : s.attractors.members) {
        const int k = a.k;
        if (a.type == AttractorMember::Type::Vertex) {
            traps.push_back({a.name(),
                             [k](const Vec2& y) {
                                 const Vec2 u = to_local_y(y, k);
                                 return std::max(u[0], u[1]);
                             },
                             [k, r](const Vec2& y) {
                                 const Vec2 u = to_local_y(y, k);
                                 const double a1 = chart::x_of_y(u[0]), a2 = chart::x_of_y(u[1]);
                                 return a1 * a1 + a2 * a2 < r * r;
                             }});
        } else {
            const double ly = chart::y_of_x(r);
            traps.push_back({a.name(), [k](const Vec2& y) { return to_local_y(y, k)[1]; },
                             [k, ly](const Vec2& y) { return to_local_y(y, k)[1] < ly; }});
        }
    }
    return run_traps(m, state_from_x(m, x0), traps, opt);
}

ConvergenceEstimate estimate_convergence(const ModelSpec& m, double x0, const Scenario1d& s,
                                         const ConvergenceOptions& opt) {
    if (m.dim() != 1) throw BadParameters("one-dimensional model expected");
    if (s.sinks.empty()) throw ScenarioMismatch("no sink to converge to");
    const double ly = chart::y_of_x(opt.trap_radius);
    std::vector<Trap> traps;
    for (int e : s.sinks) {
        if (e == 0)
            traps.push_back({"0", [](const Vec2& y) { return y[0]; }, [ly](const Vec2& y) { return y[0] < ly; }});
        else
            traps.push_back({"1", [](const Vec2& y) { return -y[0]; }, [ly](const Vec2& y) { return y[0] > -ly; }});
    }
    return run_traps(m, state_from_x(m, {x0, 0.5}), traps, opt);
}

// ---------------------------------------------------------------------------

CyclingRecord detect_cycling(const Trajectory& tr, double r, double r_prime, int orientation) {
    if (tr.dim != 2) throw BadParameters("cycling needs a planar trajectory");
    if (!(r_prime > 0.0 && r_prime < r && r < 0.25)) throw BadParameters("need 0 < r' < r < 1/4");
    if (orientation != 1 && orientation != -1) throw BadParameters("orientation must be +1 or -1");
    CyclingRecord rec;
    rec.r = r;
    rec.r_prime = r_prime;
    rec.orientation = orientation;
    const double ly = chart::y_of_x(r), lyp = chart::y_of_x(r_prime);
    auto frame = [orientation](const Vec2& y) { return orientation > 0 ? y : Vec2{y[1], y[0]}; };
    auto vertex = [orientation](int k) { return orientation > 0 ? k : md(-k); };

    std::size_t i0 = tr.size();
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const Vec2 y = frame(tr.y[i]);
        bool in = false;
        for (int k = 0; k < 4 && !in; ++k) in = to_local_y(y, k)[1] < lyp;
        if (in) {
            i0 = i;
            break;
        }
    }
    if (i0 == tr.size()) return rec;
    rec.eta0 = tr.t[i0];

    int cur = -1;  // label in the positively oriented frame
    for (std::size_t i = i0; i + 1 < tr.size(); ++i) {
        const Vec2 ya = frame(tr.y[i]), yb = frame(tr.y[i + 1]);
        double best = 2.0, depth = 0.0;
        int hit = -1;
        for (int k = 0; k < 4; ++k) {
            if (k == cur) continue;
            const Vec2 a = to_local_y(ya, k), b = to_local_y(yb, k);
            const double sa = a[0] - ly, sb = b[0] - ly;
            if ((sa < 0.0) == (sb < 0.0)) continue;
            const double th = sa / (sa - sb);
            const double y2 = a[1] + th * (b[1] - a[1]);
            if (y2 < ly && th < best) {
                best = th;
                hit = k;
                depth = y2;
            }
        }
        if (cur >= 0) {
            // Corner time towards the next vertex, trapezoid in time.
            const int target = md(cur + 1);
            auto in_box = [&](const Vec2& y) {
                const Vec2 u = to_local_y(y, target);
                return u[0] < ly && u[1] < ly ? 1.0 : 0.0;
            };
            rec.corner_time.back() += 0.5 * (tr.t[i + 1] - tr.t[i]) * (in_box(ya) + in_box(yb));
        }
        if (hit >= 0) {
            cur = hit;
            rec.eta.push_back(tr.t[i] + best * (tr.t[i + 1] - tr.t[i]));
            rec.label.push_back(vertex(hit));
            rec.depth.push_back(depth);
            rec.corner_time.push_back(0.0);
        }
    }
    return rec;
}

CyclingStats cycling_stats(const CyclingRecord& rec, const std::array<double, 4>& rho, double warmup, double tol) {
    CyclingStats st;
    st.epochs = rec.size();
    for (std::size_t n = 0; n + 1 < rec.size(); ++n) st.ratios.push_back(rec.depth[n + 1] / rec.depth[n]);
    const auto first = static_cast<std::size_t>(std::ceil(warmup * static_cast<double>(rec.size())));
    std::size_t pairs = 0, bad = 0, good = 0;
    for (std::size_t n = first; n + 1 < rec.size(); ++n) {
        ++pairs;
        const int next = rec.label[n + 1];
        if (next != md(rec.label[n] + rec.orientation)) ++bad;
        const double want = rho[static_cast<std::size_t>(next)];
        if (std::abs(st.ratios[n] - want) <= tol * want) ++good;
    }
    st.late = pairs;
    st.advance_exceptions = pairs ? static_cast<double>(bad) / static_cast<double>(pairs) : 1.0;
    st.ratio_ok = pairs ? static_cast<double>(good) / static_cast<double>(pairs) : 0.0;
    return st;
}

// ---------------------------------------------------------------------------

namespace {

// Cumulative trapezoidal time in each corner box, per sample.
std::vector<std::array<double, 4>> corner_cumulative(const Trajectory& tr, double r0) {
    if (tr.dim != 2) throw BadParameters("corner occupation needs a planar trajectory");
    if (!(r0 > 0.0 && r0 < 0.25)) throw BadParameters("r0 must lie in (0, 1/4)");
    const double ly = chart::y_of_x(r0);
    std::vector<std::array<double, 4>> cum(tr.size(), std::array<double, 4>{});
    int prev = tr.size() ? corner_of(tr.y[0], ly) : -1;
    for (std::size_t i = 1; i < tr.size(); ++i) {
        const int c = corner_of(tr.y[i], ly);
        cum[i] = cum[i - 1];
        const double h = 0.5 * (tr.t[i] - tr.t[i - 1]);
        if (prev >= 0) cum[i][static_cast<std::size_t>(prev)] += h;
        if (c >= 0) cum[i][static_cast<std::size_t>(c)] += h;
        prev = c;
    }
    return cum;
}

double sum4(const std::array<double, 4>& a) { return a[0] + a[1] + a[2] + a[3]; }

} // namespace

OccupationSeries corner_occupation(const Trajectory& tr, double r0, std::size_t points) {
    const auto cum = corner_cumulative(tr, r0);
    OccupationSeries s;
    if (tr.size() < 2) return s;
    points = std::max<std::size_t>(2, std::min(points, tr.size() - 1));
    for (std::size_t p = 1; p <= points; ++p) {
        const std::size_t i = p * (tr.size() - 1) / points;
        const double span = tr.t[i] - tr.t[0];
        s.t.push_back(tr.t[i]);
        s.fraction.push_back(span > 0.0 ? sum4(cum[i]) / span : 0.0);
    }
    return s;
}

double window_corner_fraction(const Trajectory& tr, double r0, double window) {
    if (!(window > 0.0 && window <= 1.0)) throw BadParameters("window must lie in (0, 1]");
    const auto cum = corner_cumulative(tr, r0);
    if (tr.size() < 2) return 0.0;
    const double t_start = tr.t.back() - window * (tr.t.back() - tr.t.front());
    const auto it = std::lower_bound(tr.t.begin(), tr.t.end(), t_start);
    const auto i = static_cast<std::size_t>(it - tr.t.begin());
    const double span = tr.t.back() - tr.t[i];
    return span > 0.0 ? (sum4(cum.back()) - sum4(cum[i])) / span : 0.0;
}

double gamma_distance(const std::array<double, 4>& v, const LimitQuadrilateral& q) {
    double best = INFINITY;
    for (int k = 0; k < 4; ++k) {
        const auto& a = q.mu[static_cast<std::size_t>(k)];
        const auto& b = q.mu[static_cast<std::size_t>(md(k + 1))];
        // Piecewise linear convex in s: the minimum sits at an endpoint or a kink.
        std::vector<double> cand{0.0, 1.0};
        for (std::size_t i = 0; i < 4; ++i)
            if (b[i] != a[i]) cand.push_back(std::clamp((v[i] - a[i]) / (b[i] - a[i]), 0.0, 1.0));
        for (double s : cand) {
            double d = 0.0;
            for (std::size_t i = 0; i < 4; ++i) d += std::abs(v[i] - (a[i] + s * (b[i] - a[i])));
            best = std::min(best, d);
        }
    }
    return best;
}

GammaSeries gamma_distance(const Trajectory& tr, const LimitQuadrilateral& q, double r0, std::size_t points) {
    const auto cum = corner_cumulative(tr, r0);
    GammaSeries g;
    if (tr.size() < 2 || points < 2) return g;
    const double T = tr.t.back() - tr.t.front();
    const double tmin = T * 1e-3;
    for (std::size_t p = 0; p < points; ++p) {
        const double tt = tr.t.front() + tmin * std::pow(T / tmin, static_cast<double>(p) / static_cast<double>(points - 1));
        auto it = std::lower_bound(tr.t.begin(), tr.t.end(), tt);
        if (it == tr.t.end()) --it;
        const auto i = static_cast<std::size_t>(it - tr.t.begin());
        const double span = tr.t[i] - tr.t.front();
        const double tot = sum4(cum[i]);
        if (!(span > 0.0) || !(tot > 0.0)) continue;
        std::array<double, 4> v{};
        for (std::size_t k = 0; k < 4; ++k) v[k] = cum[i][k] / tot;
        g.t.push_back(tr.t[i]);
        g.vertex_mass.push_back(v);
        g.non_corner.push_back(1.0 - tot / span);
        g.distance.push_back(gamma_distance(v, q));
    }
    return g;
}

bool running_median_decreases(const std::vector<double>& v, std::size_t window) {
    if (window == 0 || v.size() < 2 * window) return false;
    // Medians of consecutive blocks; the last must be below the first and at
    // least half of the block-to-block moves must be downward.
    std::vector<double> med;
    for (std::size_t s = 0; s + window <= v.size(); s += window) {
        std::vector<double> b(v.begin() + static_cast<std::ptrdiff_t>(s), v.begin() + static_cast<std::ptrdiff_t>(s + window));
        std::nth_element(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(window / 2), b.end());
        med.push_back(b[window / 2]);
    }
    std::size_t down = 0;
    for (std::size_t i = 1; i < med.size(); ++i) down += med[i] <= med[i - 1] ? 1 : 0;
    return med.back() < med.front() && 2 * down >= med.size() - 1;
}

// ---------------------------------------------------------------------------

double marginal_w1(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    if (a.w.size() != b.w.size() || a.dim != b.dim) throw BadParameters("measures live on different grids");
    const int n = a.bins;
    double worst = 0.0;
    for (int axis = 0; axis < a.dim; ++axis) {
        double ca = 0.0, cb = 0.0, d = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < (a.dim == 2 ? n : 1); ++j) {
                const int ii = axis == 0 ? i : j, jj = axis == 0 ? j : i;
                ca += a.at(ii, jj);
                cb += b.at(ii, jj);
            }
            d += std::abs(ca - cb) / n;
        }
        worst = std::max(worst, d);
    }
    return worst;
}

InvarianceDefect invariance_defect(const EmpiricalMeasure& nu, const ModelSpec& m, double s, std::size_t samples,
                                   double dt, std::uint64_t seed) {
    if (!(s > 0.0)) throw BadParameters("s must be positive");
    if (samples == 0) throw BadParameters("samples must be positive");
    if (m.dim() != nu.dim) throw BadParameters("model and measure dimensions differ");
    std::vector<double> cdf(nu.w.size());
    std::partial_sum(nu.w.begin(), nu.w.end(), cdf.begin());
    const double tot = cdf.back();
    if (!(tot > 0.0)) throw BadParameters("empty measure");
    auto draw = [&](Rng& rng) {
        const double u = rng.uniform() * tot;
        const auto c = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const std::size_t idx = std::min(c, cdf.size() - 1);
        const int n = nu.bins;
        Vec2 x{0.5, 0.5};
        if (nu.dim == 2) {
            x[0] = (static_cast<double>(idx / static_cast<std::size_t>(n)) + rng.uniform()) / n;
            x[1] = (static_cast<double>(idx % static_cast<std::size_t>(n)) + rng.uniform()) / n;
        } else {
            x[0] = (static_cast<double>(idx) + rng.uniform()) / n;
        }
        return x;
    };
    auto empty_like = [&nu] {
        EmpiricalMeasure e = nu;
        std::fill(e.w.begin(), e.w.end(), 0.0);
        return e;
    };
    EmpiricalMeasure pushed = empty_like(), fresh = empty_like();
    std::vector<Vec2> ends(samples);
    parallel_for(samples, [&](std::size_t i) {
        Rng rng(seed, 2 * i);
        const Vec2 x = draw(rng);
        State st = state_from_x(m, x);
        st = run_path(m, st, s, dt, rng, [](const State&) { return true; });
        ends[i] = st.x();
    });
    const double wgt = 1.0 / static_cast<double>(samples);
    for (const Vec2& x : ends) {
        if (nu.dim == 2) pushed.at(bin_of(x[0], nu.bins), bin_of(x[1], nu.bins)) += wgt;
        else pushed.at(bin_of(x[0], nu.bins)) += wgt;
    }
    for (std::size_t i = 0; i < samples; ++i) {
        Rng rng(seed, 2 * i + 1);
        const Vec2 x = draw(rng);
        if (nu.dim == 2) fresh.at(bin_of(x[0], nu.bins), bin_of(x[1], nu.bins)) += wgt;
        else fresh.at(bin_of(x[0], nu.bins)) += wgt;
    }
    EmpiricalMeasure norm = nu;
    for (double& v : norm.w) v /= tot;
    return {marginal_w1(norm, pushed), marginal_w1(norm, fresh), samples};
}

CycleRun analyze_cycle_run(const ModelSpec& m, const Scenario& s, const CycleRunOptions& opt, std::uint64_t seed) {
    if (!s.cycle || !s.quadrilateral) throw ScenarioMismatch("cycle analysis needs a stable cycle, got scenario " + s.label());
    SimOptions so;
    so.record_stride = opt.stride;
    const Trajectory tr = simulate(m, opt.x0, opt.horizon, opt.dt, seed, so);
    CycleRun run;
    run.seed = seed;
    run.record = detect_cycling(tr, opt.r, opt.r_prime, s.cycle->orientation);
    run.stats = cycling_stats(run.record, s.cycle->rho, opt.warmup, opt.tol);
    run.window_fraction = window_corner_fraction(tr, opt.r0, opt.window);
    run.gamma = gamma_distance(tr, *s.quadrilateral, opt.r0, opt.points);
    run.median_decreases = running_median_decreases(run.gamma.distance, opt.median_window);
    run.final_distance = run.gamma.distance.empty() ? 1.0 : run.gamma.distance.back();
    return run;
}

} // namespace degenflow
