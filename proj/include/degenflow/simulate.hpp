#pragma once

#include "degenflow/model_spec.hpp"
#include "degenflow/rng.hpp"

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace degenflow {

/// Chart tag bits: coordinate i was advanced in its log chart.
inline constexpr std::uint8_t kLogChart1 = 1, kLogChart2 = 2;

struct State {
    double t = 0.0;
    std::array<Coord, 2> c{chart::from_x(0.5), chart::from_y(-INFINITY)};
    std::uint8_t tag = 0;

    Vec2 x() const { return {c[0].x, c[1].x}; }
    Vec2 y() const { return {c[0].y, c[1].y}; }
};

State state_from_x(const ModelSpec& m, const Vec2& x);
State state_from_y(const ModelSpec& m, const Vec2& y);

struct StepOptions {
    double max_dy = 1.0;   ///< largest accepted log-chart move per step
    double max_dx = 0.1;   ///< largest accepted identity-chart move per step
    int max_halvings = 20;
    bool identity_only = false;  ///< never switch to log charts (reference runs)
};

/// One Euler-Maruyama step of the Ito form, per coordinate in the identity
/// chart on [1/4, 3/4] and in the log chart otherwise. dW holds the Wiener
/// increments of the noise columns. Throws StepRejected on an oversized move.
void step(const ModelSpec& m, State& s, double dt, const double* dW, const StepOptions& opt = {});
/// Convenience form on plain points.
Vec2 step(const ModelSpec& m, const Vec2& x, double dt, const Vec2& dW, const StepOptions& opt = {});

/// Advances by dt, drawing increments from rng; rejected steps are split in
/// two with a Brownian bridge draw, up to opt.max_halvings levels deep.
/// Throws AdaptiveFailure beyond that.
void advance(const ModelSpec& m, State& s, double dt, Rng& rng, const StepOptions& opt = {});
/// Same with the increments over dt given; rng is only used for bridge draws.
void advance_with(const ModelSpec& m, State& s, double dt, const double* dW, Rng& rng, const StepOptions& opt = {});

/// Runs to `horizon` in steps of dt (the last one shortened). obs(const State&)
/// is called after every step and stops the run by returning false.
template <class Obs>
State run_path(const ModelSpec& m, State s, double horizon, double dt, Rng& rng, Obs&& obs,
               const StepOptions& opt = {}) {
    const double t0 = s.t;
    const auto n = static_cast<std::uint64_t>(std::ceil((horizon - 1e-12 * horizon) / dt));
    for (std::uint64_t k = 1; k <= n; ++k) {
        const double t_next = k == n ? t0 + horizon : t0 + static_cast<double>(k) * dt;
        advance(m, s, t_next - s.t, rng, opt);
        s.t = t_next;
        if (!obs(s)) break;
    }
    return s;
}

struct Trajectory {
    int dim = 2;
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
    double dt = 0.0;
    std::vector<double> t;
    std::vector<Vec2> x;
    std::vector<Vec2> y;  ///< log-chart values; keep depth where x underflows
    std::vector<std::uint8_t> tag;

    std::size_t size() const { return t.size(); }
    void push(const State& s);
    /// Columns t, x1[, x2], chart_tag.
    void write_csv(std::ostream& os) const;
};

struct SimOptions {
    StepOptions step;
    std::size_t record_stride = 1;  ///< keep every n-th step (the final state is always kept)
    std::uint64_t path = 0;         ///< stream index under the master seed
};

Trajectory simulate(const ModelSpec& m, const State& x0, double horizon, double dt, std::uint64_t seed,
                    const SimOptions& opt = {});
Trajectory simulate(const ModelSpec& m, const Vec2& x0, double horizon, double dt, std::uint64_t seed,
                    const SimOptions& opt = {});

} // namespace degenflow
