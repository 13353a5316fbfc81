#include "degenflow/simulate.hpp"

#include "degenflow/errors.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace degenflow {

State state_from_x(const ModelSpec& m, const Vec2& x) {
    State s;
    for (int i = 0; i < m.dim(); ++i) {
        if (!(x[i] >= 0.0 && x[i] <= 1.0)) throw BadParameters("initial point outside the closed cube");
        s.c[i] = chart::from_x(x[i]);
    }
    return s;
}

State state_from_y(const ModelSpec& m, const Vec2& y) {
    State s;
    for (int i = 0; i < m.dim(); ++i) s.c[i] = chart::from_y(y[i]);
    return s;
}

namespace {

bool try_step(const ModelSpec& m, State& s, double dt, const double* dW, const StepOptions& opt) {
    Reduced r;
    m.reduced(s.c.data(), r);
    std::array<Coord, 2> next = s.c;
    std::uint8_t tag = 0;
    for (int i = 0; i < m.dim(); ++i) {
        const Coord& c = s.c[i];
        if (c.on_face()) continue;
        const double noise = r.q[0][i] * dW[0] + r.q[1][i] * dW[1];
        if (opt.identity_only || (c.x >= chart::kLow && c.x <= chart::kHigh)) {
            const double dx = r.h[i] * r.B[i] * dt + r.h[i] * noise;
            if (!(std::abs(dx) <= opt.max_dx)) return false;
            if (dx == 0.0) continue;
            double xn = c.x + dx;
            if (xn < 0.0 || xn > 1.0) {
                const double over = xn < 0.0 ? -xn : xn - 1.0;
                if (over >= dt) {
                    std::ostringstream os;
                    os << std::setprecision(17) << "coordinate " << i + 1 << " left the cube by " << over
                       << " at t=" << s.t << " from x=(" << s.c[0].x << ", " << s.c[1].x << "), dt=" << dt;
                    throw AdaptiveFailure(os.str());
                }
                xn = xn < 0.0 ? 0.0 : 1.0;
            }
            next[i] = chart::from_x(xn);
        } else {
            double g1, g2;
            chart::factors(c, g1, g2);
            const double qq = r.q[0][i] * r.q[0][i] + r.q[1][i] * r.q[1][i];
            const double dy = (g1 * r.B[i] + 0.5 * g2 * qq) * dt + g1 * noise;
            if (!(std::abs(dy) <= opt.max_dy)) return false;
            tag |= static_cast<std::uint8_t>(1u << i);
            if (dy == 0.0) continue;
            next[i] = chart::from_y(c.y + dy);
        }
    }
    s.c = next;
    s.tag = tag;
    return true;
}

void advance_rec(const ModelSpec& m, State& s, double dt, const double* dW, Rng& rng, const StepOptions& opt,
                 int depth) {
    if (try_step(m, s, dt, dW, opt)) return;
    if (depth >= opt.max_halvings)
        throw AdaptiveFailure("step still rejected after " + std::to_string(depth) + " halvings at t=" +
                              std::to_string(s.t));
    double a[2] = {0.0, 0.0}, b[2] = {0.0, 0.0};
    const double sd = 0.5 * std::sqrt(dt);
    for (int k = 0; k < 2; ++k) {
        if (m.column_zero(k)) continue;
        a[k] = 0.5 * dW[k] + sd * rng.normal();
        b[k] = dW[k] - a[k];
    }
    advance_rec(m, s, 0.5 * dt, a, rng, opt, depth + 1);
    advance_rec(m, s, 0.5 * dt, b, rng, opt, depth + 1);
}

} // namespace

void step(const ModelSpec& m, State& s, double dt, const double* dW, const StepOptions& opt) {
    if (!(dt > 0.0)) throw BadParameters("dt must be positive");
    if (!try_step(m, s, dt, dW, opt)) throw StepRejected("chart displacement above the configured maximum");
    s.t += dt;
}

Vec2 step(const ModelSpec& m, const Vec2& x, double dt, const Vec2& dW, const StepOptions& opt) {
    State s = state_from_x(m, x);
    step(m, s, dt, dW.data(), opt);
    return s.x();
}

void advance_with(const ModelSpec& m, State& s, double dt, const double* dW, Rng& rng, const StepOptions& opt) {
    advance_rec(m, s, dt, dW, rng, opt, 0);
}

void advance(const ModelSpec& m, State& s, double dt, Rng& rng, const StepOptions& opt) {
    double dW[2] = {0.0, 0.0};
    const double sq = std::sqrt(dt);
    for (int k = 0; k < 2; ++k)
        if (!m.column_zero(k)) dW[k] = sq * rng.normal();
    advance_rec(m, s, dt, dW, rng, opt, 0);
}

void Trajectory::push(const State& s) {
    t.push_back(s.t);
    x.push_back(s.x());
    y.push_back(s.y());
    tag.push_back(s.tag);
}

void Trajectory::write_csv(std::ostream& os) const {
    os << (dim == 2 ? "t,x1,x2,chart_tag\n" : "t,x1,chart_tag\n");
    os << std::setprecision(17);
    for (std::size_t i = 0; i < t.size(); ++i) {
        os << t[i] << ',' << x[i][0];
        if (dim == 2) os << ',' << x[i][1];
        os << ',' << static_cast<int>(tag[i]) << '\n';
    }
}

Trajectory simulate(const ModelSpec& m, const State& x0, double horizon, double dt, std::uint64_t seed,
                    const SimOptions& opt) {
    if (!(dt > 0.0)) throw BadParameters("dt must be positive");
    if (!(horizon >= 0.0)) throw BadParameters("horizon must be nonnegative");
    Trajectory tr;
    tr.dim = m.dim();
    tr.seed = seed;
    tr.path = opt.path;
    tr.dt = dt;
    tr.push(x0);
    if (horizon == 0.0) return tr;
    Rng rng(seed, opt.path);
    const std::size_t stride = std::max<std::size_t>(1, opt.record_stride);
    std::size_t k = 0;
    const State last = run_path(
        m, x0, horizon, dt, rng,
        [&](const State& s) {
            if (++k % stride == 0) tr.push(s);
            return true;
        },
        opt.step);
    if (tr.t.back() != last.t) tr.push(last);
    return tr;
}

Trajectory simulate(const ModelSpec& m, const Vec2& x0, double horizon, double dt, std::uint64_t seed,
                    const SimOptions& opt) {
    return simulate(m, state_from_x(m, x0), horizon, dt, seed, opt);
}

} // namespace degenflow
