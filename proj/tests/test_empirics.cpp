#include "doctest.h"

#include "degenflow/empirics.hpp"
#include "degenflow/errors.hpp"
#include "degenflow/presets.hpp"

#include <cmath>
#include <numeric>

using namespace degenflow;

namespace {

Trajectory constant_path(const Vec2& x, int n, double dt) {
    const ModelSpec m = preset_model("case_study");
    Trajectory tr;
    tr.dt = dt;
    for (int i = 0; i < n; ++i) {
        State s = state_from_x(m, x);
        s.t = i * dt;
        tr.push(s);
    }
    return tr;
}

} // namespace

TEST_CASE("empirical measure of a constant path is a unit mass") {
    const Trajectory tr = constant_path({0.33, 0.71}, 50, 0.1);
    const EmpiricalMeasure e = empirical_measure(tr, 10);
    CHECK(e.total() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.at(3, 7) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::accumulate(e.vertex_mass.begin(), e.vertex_mass.end(), 0.0) == 0.0);
}

TEST_CASE("alternating path splits its mass evenly") {
    const ModelSpec m = preset_model("case_study");
    Trajectory tr;
    for (int i = 0; i <= 100; ++i) {
        State s = state_from_x(m, i % 2 ? Vec2{0.01, 0.02} : Vec2{0.55, 0.45});
        s.t = 0.5 * i;
        tr.push(s);
    }
    const EmpiricalMeasure e = empirical_measure(tr, 4);
    CHECK(e.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(e.at(2, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(e.vertex_mass[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("combining the two halves reproduces the whole") {
    const ModelSpec m = preset_model("case_study");
    const Trajectory tr = simulate(m, Vec2{0.6, 0.4}, 20.0, 0.01, 7);
    const std::size_t n = tr.size(), mid = n / 3;
    const EmpiricalMeasure all = empirical_measure(tr, 20);
    const EmpiricalMeasure a = empirical_measure(tr, 20, 0.05, 0, mid + 1);
    const EmpiricalMeasure b = empirical_measure(tr, 20, 0.05, mid, n);
    const EmpiricalMeasure c = EmpiricalMeasure::combine(a, b);
    CHECK(all.total() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.l1(all) < 1e-12);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(c.vertex_mass[k] == doctest::Approx(all.vertex_mass[k]).epsilon(1e-12));
        CHECK(c.edge_mass[k] == doctest::Approx(all.edge_mass[k]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(empirical_measure(tr, 20, 0.3), BadParameters);
}

TEST_CASE("gamma distance vanishes on the quadrilateral") {
    const Scenario s = classify(preset_model("stable_cycle_rho2"));
    REQUIRE(s.quadrilateral);
    const LimitQuadrilateral& q = *s.quadrilateral;
    for (int k = 0; k < 4; ++k) {
        CHECK(gamma_distance(q.mu[static_cast<std::size_t>(k)], q) < 1e-15);
        std::array<double, 4> mid{};
        for (std::size_t i = 0; i < 4; ++i) mid[i] = 0.5 * (q.mu[static_cast<std::size_t>(k)][i] + q.mu[static_cast<std::size_t>((k + 1) % 4)][i]);
        CHECK(gamma_distance(mid, q) < 1e-15);
    }
    const std::array<double, 4> flat{0.25, 0.25, 0.25, 0.25};
    const double d = gamma_distance(flat, q);
    CHECK(d > 0.05);
    // Relabeling the vertices cyclically relabels the segments.
    LimitQuadrilateral r = q;
    std::array<double, 4> flat_r{};
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t i = 0; i < 4; ++i) r.mu[k][i] = q.mu[(k + 1) % 4][(i + 1) % 4];
    const std::array<double, 4> v{0.4, 0.3, 0.2, 0.1};
    for (std::size_t i = 0; i < 4; ++i) flat_r[i] = v[(i + 1) % 4];
    CHECK(gamma_distance(flat_r, r) == doctest::Approx(gamma_distance(v, q)).epsilon(1e-14));
}

TEST_CASE("bulk path has no cycling epochs") {
    const Trajectory tr = constant_path({0.5, 0.5}, 100, 0.1);
    const CyclingRecord rec = detect_cycling(tr, 0.05, 0.01);
    CHECK(rec.size() == 0);
    CHECK(std::isnan(rec.eta0));
    CHECK_THROWS_AS(detect_cycling(tr, 0.01, 0.05), BadParameters);
}

TEST_CASE("stable cycle: labels advance and depths grow by rho") {
    const ModelSpec m = preset_model("stable_cycle_rho2");
    const Scenario s = classify(m);
    REQUIRE(s.cycle);
    SimOptions so;
    so.record_stride = 5;
    const Trajectory tr = simulate(m, Vec2{0.5, 0.5}, 5000.0, 0.02, 3, so);
    const CyclingRecord rec = detect_cycling(tr, 0.05, 0.01, s.cycle->orientation);
    REQUIRE(rec.size() >= 8);
    for (std::size_t n = 1; n < rec.size(); ++n) {
        CHECK(rec.eta[n] > rec.eta[n - 1]);
        CHECK(rec.depth[n] < 0.0);
    }
    const CyclingStats st = cycling_stats(rec, s.cycle->rho, 0.5, 0.2);
    CHECK(st.advance_exceptions == 0.0);
    CHECK(st.ratio_ok >= 0.8);
    const double w = window_corner_fraction(tr, 0.05, 0.1);
    CHECK(w > 0.9);
}

TEST_CASE("corner occupation of fixed points") {
    const Trajectory centre = constant_path({0.5, 0.5}, 30, 0.1);
    const Trajectory corner = constant_path({1e-4, 2e-4}, 30, 0.1);
    CHECK(corner_occupation(centre, 0.05).fraction.back() == 0.0);
    CHECK(corner_occupation(corner, 0.05).fraction.back() == doctest::Approx(1.0));
    CHECK(window_corner_fraction(corner, 0.05) == doctest::Approx(1.0));
}

TEST_CASE("running median trend") {
    std::vector<double> down, up;
    for (int i = 0; i < 100; ++i) {
        down.push_back(1.0 / (1 + i) + 0.01 * ((i * 7) % 5));
        up.push_back(static_cast<double>(i));
    }
    CHECK(running_median_decreases(down, 10));
    CHECK_FALSE(running_median_decreases(up, 10));
    CHECK_FALSE(running_median_decreases({1.0, 0.5}, 21));
}

TEST_CASE("double sink: symmetric start splits evenly") {
    const ModelSpec m = preset_model("double_sink_1d");
    const Scenario1d s = classify_1d(m);
    ConvergenceOptions o;
    o.runs = 400;
    o.horizon = 40.0;
    o.dt = 0.01;
    o.seed = 5;
    const ConvergenceEstimate e = estimate_convergence(m, 0.5, s, o);
    CHECK(e.counts[0] + e.counts[1] + e.unresolved == e.runs);
    CHECK(e.unresolved == 0);
    CHECK(std::abs(e.probability("0") - 0.5) < 4.0 * std::sqrt(0.25 / 400));
    CHECK(e.std_error("1") == doctest::Approx(std::sqrt(e.p[1] * (1 - e.p[1]) / 400)));
}

TEST_CASE("case study: runs settle on O0 or E1") {
    const ModelSpec m = preset_model("case_study");
    const Scenario s = classify(m);
    ConvergenceOptions o;
    o.runs = 100;
    o.horizon = 200.0;
    o.dt = 0.02;
    const ConvergenceEstimate e = estimate_convergence(m, Vec2{0.5, 0.5}, s, o);
    REQUIRE(e.names.size() == 2);
    CHECK(e.probability("O0") + e.probability("E1") + e.unresolved_fraction == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.unresolved_fraction < 0.05);
    CHECK(e.probability("O0") > 0.05);
    CHECK(e.probability("E1") > 0.05);
    double near = 0.0;
    std::size_t n0 = 0;
    for (std::size_t r = 0; r < e.runs; ++r)
        if (e.outcome[r] == 0) {
            near += e.near_fraction[r];
            ++n0;
        }
    CHECK(near / static_cast<double>(n0) > 0.93);
    CHECK_THROWS_AS(estimate_convergence(preset_model("stable_cycle_rho2"), Vec2{0.5, 0.5},
                                         classify(preset_model("stable_cycle_rho2")), o),
                    ScenarioMismatch);
}

TEST_CASE("invariance defect") {
    SUBCASE("unit mass at a sink stays put") {
        const ModelSpec m = preset_model("case_study");
        const Trajectory tr = constant_path({0.01, 0.01}, 10, 0.1);
        const EmpiricalMeasure nu = empirical_measure(tr, 20);
        const InvarianceDefect d = invariance_defect(nu, m, 1.0, 2000, 1e-2);
        CHECK(d.noise_floor < 1e-12);
        CHECK(d.defect < 1e-3);
    }
    SUBCASE("one-dimensional stationary density") {
        const ModelSpec m = preset_model("double_source_1d");
        EmpiricalMeasure nu;
        nu.dim = 1;
        nu.bins = 50;
        nu.t1 = 1.0;
        for (int i = 0; i < nu.bins; ++i) {
            const double a = static_cast<double>(i) / nu.bins, b = a + 1.0 / nu.bins;
            // Beta(2,2) cell masses.
            auto F = [](double x) { return 3 * x * x - 2 * x * x * x; };
            nu.w.push_back(F(b) - F(a));
        }
        const InvarianceDefect d = invariance_defect(nu, m, 0.5, 20000, 1e-2);
        CHECK(d.noise_floor > 0.0);
        CHECK(d.defect < 2.0 * d.noise_floor + 1e-3);
    }
}
