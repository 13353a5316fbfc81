#include "doctest.h"

#include "degenflow/classifier.hpp"
#include "degenflow/errors.hpp"
#include "degenflow/presets.hpp"

#include <cmath>
#include <string>

using namespace degenflow;

namespace {

std::array<VertexSpectrum, 4> spectra(const std::array<std::array<double, 2>, 4>& rates) {
    std::array<VertexSpectrum, 4> v;
    for (int k = 0; k < 4; ++k)
        v[static_cast<std::size_t>(k)] = make_vertex_spectrum(k, rates[static_cast<std::size_t>(k)][0], rates[static_cast<std::size_t>(k)][1]);
    return v;
}

// Replays alpha_k lambda1 + beta_k lambda2 > 2 and gamma_k Lambda2_bar > 2 from raw inputs.
void check_assignment(const BetaAssignment& b, const std::array<VertexSpectrum, 4>& v,
                      const std::array<std::optional<double>, 4>& l2) {
    for (int k = 0; k < 4; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        CHECK(b.beta[uk] > 0.0);
        CHECK(b.alpha[uk] == b.beta[static_cast<std::size_t>((k + 3) % 4)]);
        CHECK(b.gamma[uk] == b.beta[uk]);
        const double tilde = b.beta_tilde[static_cast<std::size_t>((k + 3) % 4)] * v[uk].lambda1 + b.beta_tilde[uk] * v[uk].lambda2;
        if (!(v[uk].lambda1 < 0 && v[uk].lambda2 < 0)) {
            CHECK(tilde > 0.0);
            CHECK(b.alpha[uk] * v[uk].lambda1 + b.beta[uk] * v[uk].lambda2 >= 2.0 + 1e-3);
        }
        if (l2[uk] && *l2[uk] > 0) CHECK(b.gamma[uk] * *l2[uk] >= 2.0 + 1e-3);
    }
    CHECK(b.min_slack() >= 1e-3);
}

ModelSpec bilinear(const std::array<double, 4>& p1, const std::array<double, 4>& p2, double eps) {
    ModelSpec::QTable q;
    q[0][0] = Field::constant(eps);
    q[1][1] = Field::constant(eps);
    return ModelSpec::factored("t", Field(Poly2({{p1[0], p1[1]}, {p1[2], p1[3]}})), Field(Poly2({{p2[0], p2[1]}, {p2[2], p2[3]}})), q);
}

} // namespace

TEST_CASE("attracting set: sinks and attracting edges") {
    std::array<EdgeSpectrum, 4> none;
    const auto sources = spectra({{{1, 2}, {1, 1}, {3, 1}, {2, 2}}});
    CHECK(attracting_set(sources, none).empty());

    const AttractingSet a = attracting_set(preset_model("case_study"));
    REQUIRE(a.members.size() == 2);
    CHECK(a.has_vertex(0));
    CHECK(a.has_edge(1));
    CHECK(a.members[1].evidence[0] == doctest::Approx(-0.5).epsilon(1e-8));

    const AttractingSet c = attracting_set(preset_model("stable_cycle_rho2"));
    CHECK(c.empty());
    for (int k = 0; k < 4; ++k) CHECK_FALSE(edge_spectrum(preset_model("stable_cycle_rho2"), k).in_S);
}

TEST_CASE("attracting set: all sources put every edge in S") {
    // p_i = 1 - 2 x_i: sources at every vertex, all edges carry a measure and repel.
    const ModelSpec m = bilinear({1, 0, -2, 0}, {1, -2, 0, 0}, 0.5);
    const Scenario s = classify(m);
    for (const VertexSpectrum& v : s.vertices) CHECK(v.kind == VertexKind::Source);
    for (const EdgeSpectrum& e : s.edges) {
        CHECK(e.in_S);
        CHECK(e.lambda2_bar > 0.0);
    }
    CHECK(s.attractors.empty());
    CHECK(s.label() == "III");
    for (double b : s.betas->beta_tilde) CHECK(b == 1.0);
}

TEST_CASE("classify: the presets") {
    const Scenario cs = classify(preset_model("case_study"));
    CHECK(cs.label() == "I");
    CHECK(cs.kind == ScenarioCase::AttractorSet);
    CHECK(cs.attractors.has_vertex(0));
    CHECK(cs.attractors.has_edge(1));
    REQUIRE(cs.betas);

    const Scenario st = classify(preset_model("stable_cycle_rho2"));
    CHECK(st.label() == "II");
    REQUIRE(st.cycle);
    CHECK(st.cycle->pi == doctest::Approx(16.0));
    REQUIRE(st.quadrilateral);
    CHECK_FALSE(st.betas);

    const Scenario un = classify(preset_model("unstable_cycle_rho_half"));
    CHECK(un.label() == "III");
    CHECK(un.detail == "unstable cycle");
    CHECK(un.cycle->pi == doctest::Approx(1.0 / 16));

    const Scenario ac = classify(preset_model("acyclic_scenario3"));
    CHECK(ac.label() == "III");
    CHECK(ac.detail == "acyclic");
    CHECK(ac.attractors.empty());
    CHECK(ac.edges[1].in_S);
    CHECK(ac.edges[2].in_S);
}

TEST_CASE("classify: hypothesis failures carry their tag") {
    auto tag_of = [](const ModelSpec& m) {
        try {
            classify(m);
        } catch (const AssumptionViolated& e) {
            return std::string(e.what()).substr(std::string("AssumptionViolated: ").size(), 2);
        }
        return std::string("none");
    };
    // p1(0,0) = 0: zero rate at O^0.
    CHECK(tag_of(bilinear({0, 1, 1, -3}, {1, -2, 0, 0}, 0.5)) == "D1");
    // Saddles with lambda+ = 1, lambda- = -1: Pi = 1.
    CHECK(tag_of(bilinear({1, -2, 0, 0}, {-1, 0, 2, 0}, 0.5)) == "D3");
    // No noise: brackets of the drift alone never span.
    CHECK(tag_of(preset_model("case_study", 0.0)) == "C2");
    CHECK_THROWS_AS(classify(preset_model("double_sink_1d")), BadParameters);
}

TEST_CASE("classify_1d: endpoint signs") {
    const Scenario1d ds = classify_1d(preset_model("double_sink_1d"));
    CHECK(ds.sinks == std::vector<int>{0, 1});
    CHECK_FALSE(ds.interior);
    CHECK(ds.lambda0 == doctest::Approx(-1.0));
    CHECK(ds.lambda1 == doctest::Approx(-1.0));

    const Scenario1d one = classify_1d(ModelSpec::factored_1d("m", Field(Poly2({{1.0}, {1.0}})), Field::constant(0.5)));
    CHECK(one.sinks == std::vector<int>{1});

    const Scenario1d src = classify_1d(preset_model("double_source_1d"));
    CHECK(src.interior);
    CHECK(src.label() == "II");
    REQUIRE(src.density);
    // Beta(2, 2) at noise 1.
    for (double x : {0.2, 0.5, 0.9}) CHECK(src.density->pdf_x(x) == doctest::Approx(6 * x * (1 - x)).epsilon(1e-8));

    CHECK_THROWS_AS(classify_1d(preset_model("arcsine")), NonHyperbolic);
}

TEST_CASE("betas: unstable cycle recursion") {
    // lambda1 < 0 < lambda2 everywhere: beta_k > rho^k beta_{k-1}.
    const auto v = spectra({{{-0.5, 1}, {-0.5, 1}, {-0.5, 1}, {-0.5, 1}}});
    BetaOptions o;
    o.eps = 0.1;
    const BetaAssignment b = choose_betas(v, {}, o);
    CHECK(b.method == "cycle");
    CHECK(b.beta_tilde[0] == doctest::Approx(1.0));
    CHECK(b.beta_tilde[1] == doctest::Approx(0.6));
    CHECK(b.beta_tilde[2] == doctest::Approx(0.36));
    CHECK(b.beta_tilde[3] == doctest::Approx(0.216));
    CHECK(b.wraparound == doctest::Approx(0.108));
    check_assignment(b, v, {});

    // Automatic eps puts the wraparound at sqrt(Pi).
    const BetaAssignment a = choose_betas(v, {});
    CHECK(a.wraparound == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(a.eps == doctest::Approx(std::cbrt(0.5) - 0.5).epsilon(1e-10));
    check_assignment(a, v, {});

    // The other orientation walks backwards.
    const auto w = spectra({{{2, -1}, {2, -1}, {2, -1}, {2, -1}}});
    check_assignment(choose_betas(w, {}), w, {});

    const auto stable = spectra({{{-2, 1}, {-2, 1}, {-2, 1}, {-2, 1}}});
    CHECK_THROWS_AS(choose_betas(stable, {}), Infeasible);
}

TEST_CASE("betas: the presets") {
    for (const char* name : {"case_study", "unstable_cycle_rho_half", "acyclic_scenario3"}) {
        CAPTURE(name);
        const Scenario s = classify(preset_model(name));
        REQUIRE(s.betas);
        std::array<std::optional<double>, 4> l2;
        for (int k = 0; k < 4; ++k)
            if (s.edges[static_cast<std::size_t>(k)].in_S) l2[static_cast<std::size_t>(k)] = s.edges[static_cast<std::size_t>(k)].lambda2_bar;
        check_assignment(*s.betas, s.vertices, l2);
    }
    // The case study chain constrains O1, O2, O3 and the repelling edge E2.
    const Scenario cs = classify(preset_model("case_study"));
    std::vector<std::string> labels;
    for (const BetaConstraint& c : cs.betas->constraints) labels.push_back(c.label);
    CHECK(labels == std::vector<std::string>{"O1", "O2", "O3", "E2"});
}

TEST_CASE("betas: randomized admissible spectra") {
    Rng rng(99, 3);
    int done = 0, cycles = 0;
    while (done < 100) {
        std::array<std::array<double, 2>, 4> r{};
        for (auto& x : r)
            for (double& y : x) y = (rng.uniform() < 0.5 ? -1 : 1) * (0.1 + 3 * rng.uniform());
        const auto v = spectra(r);
        const auto cyc = detect_stochastic_cycle(v, 0.0);
        if (cyc && cyc->pi >= 0.99) continue;
        std::array<std::optional<double>, 4> l2;
        for (int k = 0; k < 4; ++k) {
            const bool in_s = v[static_cast<std::size_t>(k)].lambda1 > 0 && v[static_cast<std::size_t>((k + 1) % 4)].lambda2 > 0;
            if (in_s) l2[static_cast<std::size_t>(k)] = (rng.uniform() < 0.5 ? -1 : 1) * (0.1 + rng.uniform());
        }
        cycles += cyc ? 1 : 0;
        check_assignment(choose_betas(v, l2), v, l2);
        ++done;
    }
    CHECK(cycles > 0);
}

TEST_CASE("limit quadrilateral: rho = 2, lambda+ = 1") {
    CycleInfo c;
    c.orientation = 1;
    c.rho = {2, 2, 2, 2};
    c.pi = 16;
    c.stable = true;
    const LimitQuadrilateral q = limit_quadrilateral(c, {1, 1, 1, 1});
    for (int k = 0; k < 4; ++k) {
        for (int i = 0; i < 4; ++i) CHECK(q.weight(k, k - 3 + i) == doctest::Approx(std::pow(2.0, i + 1)));
        for (int i = 0; i < 4; ++i) CHECK(q.mu[static_cast<std::size_t>(k)][static_cast<std::size_t>((k + 1 + i) % 4)] == doctest::Approx(std::pow(2.0, i) / 15));
        CHECK(q.weight(k, k) / q.weight(k, k - 3) * q.rho[static_cast<std::size_t>((k + 1) % 4)] == doctest::Approx(16.0));
    }
    CHECK(q.consistency_defect() < 1e-15);
    const auto mid = q.segment_point(3, 0.5);
    CHECK(mid[0] == doctest::Approx(0.5 * (8.0 / 15 + 1.0 / 15)));
    CHECK_THROWS_AS(limit_quadrilateral({1, {0.5, 0.5, 0.5, 0.5}, 1.0 / 16, false}, {1, 1, 1, 1}), BadParameters);
}

TEST_CASE("limit quadrilateral: randomized stable cycles") {
    Rng rng(5, 1);
    for (int t = 0; t < 100; ++t) {
        CycleInfo c;
        c.orientation = t % 2 ? 1 : -1;
        std::array<double, 4> lp{};
        do {
            c.pi = 1;
            for (int k = 0; k < 4; ++k) {
                c.rho[static_cast<std::size_t>(k)] = 0.2 + 4 * rng.uniform();
                lp[static_cast<std::size_t>(k)] = 0.1 + 5 * rng.uniform();
                c.pi *= c.rho[static_cast<std::size_t>(k)];
            }
        } while (c.pi <= 1.01);
        c.stable = true;
        const LimitQuadrilateral q = limit_quadrilateral(c, lp);
        CHECK(q.consistency_defect() < 1e-10);
        // Pi from the weights: f_{k,k} / f_{k,k-3} carries three of the four rho factors.
        CHECK(q.weight(0, 0) / q.weight(0, -3) * q.lambda_plus[0] / q.lambda_plus[1] * q.rho[1] == doctest::Approx(c.pi).epsilon(1e-12));
        for (int k = 0; k < 4; ++k) {
            double sum = 0;
            for (double w : q.f[static_cast<std::size_t>(k)]) CHECK(w > 0.0);
            for (double m : q.mu[static_cast<std::size_t>(k)]) sum += m;
            CHECK(std::abs(sum - 1.0) < 1e-12);
            for (int j = k + 1; j < 4; ++j) {
                double d = 0;
                for (int v = 0; v < 4; ++v)
                    d += std::abs(q.mu[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)] - q.mu[static_cast<std::size_t>(j)][static_cast<std::size_t>(v)]);
                CHECK(d > 1e-10);
            }
        }
    }
}

TEST_CASE("classify: trichotomy on random hyperbolic models") {
    Rng rng(2024, 0);
    std::array<int, 3> counts{};
    for (int t = 0; t < 500; ++t) {
        const auto [m, s] = random_hyperbolic_model(rng);
        // Independent rederivation from the raw reduced drift at the vertices.
        auto p = [&m](int i, double a, double b) {
            double v;
            m.p(i).eval({a, b}, v, nullptr, nullptr);
            return v;
        };
        // Local rates (along E^k, along E^{k-1}) at O^0..O^3.
        const double r[4][2] = {{p(0, 0, 0), p(1, 0, 0)}, {p(1, 1, 0), -p(0, 1, 0)}, {-p(0, 1, 1), -p(1, 1, 1)}, {-p(1, 0, 1), p(0, 0, 1)}};
        bool sink = false, all_saddle = true;
        int orient = 0;
        bool consistent = true;
        double pi = 1;
        for (const auto& x : r) {
            CHECK(x[0] == doctest::Approx(s.vertices[static_cast<std::size_t>(&x - r)].lambda1));
            sink = sink || (x[0] < 0 && x[1] < 0);
            const bool saddle = x[0] * x[1] < 0;
            all_saddle = all_saddle && saddle;
            const int o = x[0] > 0 ? 1 : -1;
            if (orient == 0) orient = o;
            consistent = consistent && o == orient;
            pi *= saddle ? (x[0] > 0 ? -x[1] / x[0] : -x[0] / x[1]) : 1.0;
        }
        bool edge_attr = false;
        for (int k = 0; k < 4; ++k)
            if (r[k][0] > 0 && r[(k + 1) % 4][1] > 0) edge_attr = edge_attr || transversal_exponent(m, k) < 0;
        const bool one = sink || edge_attr;
        const bool two = !one && all_saddle && consistent && pi > 1;
        const bool three = !one && !two;
        CHECK(int(one) + int(two) + int(three) == 1);
        CHECK(s.label() == (one ? "I" : two ? "II" : "III"));
        ++counts[static_cast<std::size_t>(s.kind)];
    }
    MESSAGE("scenario counts I/II/III: " << counts[0] << " " << counts[1] << " " << counts[2]);
    CHECK(counts[0] > 0);
    CHECK(counts[2] > 0);
}

TEST_CASE("classify: drift scaling keeps the label") {
    Rng rng(11, 0);
    for (int t = 0; t < 40; ++t) {
        const auto [m, s] = random_hyperbolic_model(rng);
        for (double c : {0.25, 4.0}) CHECK(classify(m.scaled_drift(c)).label() == s.label());
    }
    for (const char* name : {"case_study", "stable_cycle_rho2", "unstable_cycle_rho_half", "acyclic_scenario3"})
        for (double c : {0.5, 3.0}) CHECK(classify(preset_model(name).scaled_drift(c)).label() == classify(preset_model(name)).label());
}
