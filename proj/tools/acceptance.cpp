// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fails.

#include "degenflow/calc_lab.hpp"
#include "degenflow/classifier.hpp"
#include "degenflow/chart.hpp"
#include "degenflow/edge.hpp"
#include "degenflow/empirics.hpp"
#include "degenflow/errors.hpp"
#include "degenflow/hitting.hpp"
#include "degenflow/lyapunov.hpp"
#include "degenflow/presets.hpp"
#include "degenflow/rng.hpp"
#include "degenflow/simulate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace degenflow;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

const double kNaN = std::nan("");

ModelSpec diagonal(double lam1, double lam2, double eps) {
    ModelSpec::QTable q;
    q[0][0] = Field::constant(eps);
    q[1][1] = Field::constant(eps);
    return ModelSpec::factored("diagonal", Field::constant(lam1), Field::constant(lam2), q);
}

// 1. Closed-form oracles and the exponential-martingale and exit-time inequalities.
void calibration(Outcome& o) {
    DriftMartingaleLab lab;
    lab.nu = 1.0, lab.A = 1.0, lab.z_upper = 2.0, lab.runs = 10000, lab.dt = 1e-3, lab.seed = 101;
    const OracleRow w = wald_mean(lab);
    o.detail << "wald " << w.estimate << "+-" << w.se << " vs " << w.oracle << "; ";
    o.require(w.pass, "wald mean");

    lab.nu = -1.0, lab.z_upper = 1.0, lab.runs = 100000, lab.dt = 1e-2, lab.cap = 50.0, lab.seed = 102;
    const OracleRow e = escape_probability(lab)[0];
    o.detail << "escape " << e.estimate << "+-" << e.se << " vs " << e.oracle << "; ";
    o.require(e.pass, "escape probability");

    lab = DriftMartingaleLab{};
    lab.runs = 100000, lab.seed = 103;
    int tails = 0;
    for (auto [t, z] : {std::pair{1.0, 0.0}, {1.0, 3.0}, {4.0, 6.0}, {1.0, 1.5}}) {
        const TailCheck c = check_exponential_martingale(lab, t, z, 200);
        o.require(c.pass, "martingale tail at t=" + std::to_string(t) + " z=" + std::to_string(z));
        tails += c.pass;
    }
    lab.member = Member::Alternating, lab.a = 0.1, lab.seed = 104;
    const TailCheck alt = check_exponential_martingale(lab, 1.0, 2.0, 200);
    o.require(alt.pass, "martingale tail, alternating member");
    o.detail << "martingale tails " << tails + alt.pass << "/5; ";

    const auto manifest = default_manifest();
    std::size_t ok = 0;
    for (const LemmaRow& r : check_exit_bounds_suite(manifest, 105)) {
        ok += r.pass;
        o.require(r.pass, r.check);
    }
    o.detail << "exit-time checks " << ok << "/" << manifest.size();
}

// 2. One-dimensional trichotomy.
void one_dimensional(Outcome& o) {
    const ModelSpec sink = preset_model("double_sink_1d");
    ConvergenceOptions c;
    c.runs = 2000, c.horizon = 40.0, c.dt = 0.01, c.seed = 201;
    const ConvergenceEstimate e = estimate_convergence(sink, 0.5, classify_1d(sink), c);
    const double se = std::sqrt(0.25 / static_cast<double>(e.runs));
    o.detail << "p0 " << e.probability("0") << " p1 " << e.probability("1") << " (3 SE " << 3 * se
             << ") unresolved " << e.unresolved_fraction << "; ";
    o.require(std::abs(e.probability("0") - 0.5) <= 3 * se, "p0");
    o.require(std::abs(e.probability("1") - 0.5) <= 3 * se, "p1");
    o.require(e.unresolved_fraction < 0.02, "unresolved");

    const ModelSpec source = preset_model("double_source_1d");
    const Scenario1d s = classify_1d(source);
    o.require(s.interior && s.density != nullptr, "double source is interior");
    if (!s.density) return;
    McOptions mc;
    mc.paths = 2, mc.horizon = 1e4, mc.burn_in = 0.0, mc.dt = 1e-3, mc.seed = 202;
    const double l1 = mc_histogram_l1(source, *s.density, 20, mc);
    o.detail << "density L1 " << l1 << " (20 bins, 2 paths)";
    o.require(l1 < 0.05, "density L1");
}

// 3. Generator against the symbolic formula, and the corner and edge bands.
void generator_bands(Outcome& o) {
    const double lam1 = -1.0, eps = 0.5;
    const ModelSpec m = diagonal(lam1, 0.7, eps);
    const TestFn ln_x1 = [](const Vec2& x) {
        Jet2 j;
        j.v = std::log(x[0]);
        j.g = {1.0 / x[0], 0.0};
        j.h.h11 = -1.0 / (x[0] * x[0]);
        return j;
    };
    double worst = 0.0;
    for (int i = 1; i < 100; ++i)
        for (double x2 : {0.1, 0.5, 0.9}) {
            const double a = i < 50 ? std::exp(-0.5 * i) : i / 100.0;
            const double expect = lam1 * (1 - a) - 0.5 * eps * eps * a * (1 - a);
            worst = std::max(worst, std::abs(m.generator_apply(ln_x1, {a, x2}) - expect));
        }
    o.detail << "generator error " << worst << "; ";
    o.require(worst < 1e-10, "generator of ln x1");

    const ModelSpec d = diagonal(1.0, -2.0, 0.4);
    double target, hw;
    corner_band(linearize_vertex(d, 0), 1.0, 1.0, target, hw);
    const BandReport corner =
        verify_generator_band(d, LyapunovFn::corner(1.0, 1.0), {BandRegion::Kind::Corner, 0, 0.2}, target, hw, 4096);
    o.detail << "corner band r " << corner.r_found << "; ";
    o.require(corner.r_found > 0.0, "corner band");

    const ModelSpec cs = preset_model("case_study");
    const EdgeSpectrum s = edge_spectrum(cs, 1);
    auto psi = std::make_shared<Corrector>(solve_corrector(cs, 1));
    const double theta = -2.5 / s.lambda2_bar;
    edge_band(theta, s.lambda2_bar, target, hw);
    const BandReport edge =
        verify_generator_band(cs, LyapunovFn::edge(theta, psi, 1), {BandRegion::Kind::Edge, 1, 0.25}, target, hw, 4096);
    o.detail << "edge band r " << edge.r_found;
    o.require(edge.r_found > 0.0, "edge band");
}

// 4. Poisson corrector: residual, Monte-Carlo oracle, refinement.
void corrector(Outcome& o) {
    const ModelSpec m = preset_model("case_study");
    McOptions mc;
    mc.paths = 300, mc.dt = 0.01, mc.seed = 401;
    const CorrectorReport rep = solve_corrector_shifted(m, 1, mc);
    const Corrector& c = rep.corrector;
    const StationaryDensity& d = c.density();
    double worst = 0.0;
    const double lo = std::max(d.lo(), -40.0), hi = std::min(d.hi(), 40.0);
    for (int i = 0; i < 512; ++i) {
        const double y = lo + (hi - lo) * (i + 0.5) / 512.0;
        double l, S;
        d.coefs()(y, l, S);
        worst = std::max(worst, std::abs(l * c.psi_y(y) + 0.5 * S * c.psi_yy(y) + c.g(y)));
    }
    o.detail << "residual " << worst << " (solver " << c.residual_norm() << "); ";
    o.require(worst < 1e-6 && c.residual_norm() < 1e-6, "Poisson residual");

    const ModelSpec edge = m.edge_restriction(1), local = m.rotated(1);
    const double mean = c.mean();
    auto g = [&](const Coord& z) { return lambda2_chart(local, z) - mean; };
    int agree = 0;
    std::uint64_t stream = 0;
    for (double x : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        McOptions p = mc;
        p.seed = mc.seed + 1000 + stream++;
        const McEstimate e = mc_path_integral(edge, g, x, rep.horizon, p);
        agree += std::abs(c.psi(chart::y_of_x(x)) - e.mean) < 3 * std::hypot(e.se, c.shift_se());
    }
    o.detail << "MC agreement " << agree << "/5; ";
    o.require(agree == 5, "Monte-Carlo oracle");

    CorrectorOptions coarse, fine;
    coarse.cells = 1500, fine.cells = 3000;
    const Corrector a = solve_corrector(m, 1, coarse), b = solve_corrector(m, 1, fine);
    const double r1 = b.max_h_dpsi() / a.max_h_dpsi(), r2 = b.max_h2_d2psi() / a.max_h2_d2psi();
    o.detail << "refinement ratios " << r1 << ", " << r2;
    o.require(r1 < 2 && 1 / r1 < 2 && r2 < 2 && 1 / r2 < 2, "boundedness under refinement");
}

// 5. Scenario I case study.
void scenario_one(Outcome& o) {
    const ModelSpec m = preset_model("case_study");
    const Scenario s = classify(m);
    o.require(s.label() == "I", "scenario label");
    ConvergenceOptions c;
    c.runs = 2000, c.horizon = 1000.0, c.dt = 0.02, c.seed = 501;
    const ConvergenceEstimate e = estimate_convergence(m, Vec2{0.5, 0.5}, s, c);
    const double p0 = e.probability("O0"), p1 = e.probability("E1");
    const double q = p0 + p1, se = std::sqrt(q * (1 - q) / static_cast<double>(e.runs));
    double near = 0.0;
    std::size_t n0 = 0;
    for (std::size_t r = 0; r < e.runs; ++r)
        if (e.outcome[r] == 0) near += e.near_fraction[r], ++n0;
    near /= static_cast<double>(std::max<std::size_t>(n0, 1));
    o.detail << "p(O0) " << p0 << " p(E1) " << p1 << " unresolved " << e.unresolved_fraction << "; mass near O0 "
             << near;
    o.require(p0 > 0 && p1 > 0, "both attractors reached");
    o.require(q >= 1 - 3 * se - e.unresolved_fraction, "probabilities sum");
    o.require(e.unresolved_fraction < 0.05, "unresolved");
    o.require(near >= 0.95, "empirical mass near O0");
}

// 6. Stable cycle, ten long runs.
void scenario_two(Outcome& o) {
    const ModelSpec m = preset_model("stable_cycle_rho2");
    const Scenario s = classify(m);
    o.require(s.quadrilateral.has_value(), "stable cycle");
    if (!s.quadrilateral) return;
    double mu_err = 0.0;
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 4; ++i)
            mu_err = std::max(mu_err, std::abs(s.quadrilateral->mu[static_cast<std::size_t>(k)]
                                                                  [static_cast<std::size_t>((k + 1 + i) % 4)] -
                                               std::pow(2.0, i) / 15.0));
    o.require(mu_err < 1e-12, "limit weights (1,2,4,8)/15");
    double min_window = 1.0, max_exc = 0.0, min_ratio = 1.0, max_final = 0.0;
    bool medians = true;
    for (std::uint64_t seed = 601; seed < 611; ++seed) {
        const CycleRun r = analyze_cycle_run(m, s, CycleRunOptions{}, seed);
        min_window = std::min(min_window, r.window_fraction);
        max_exc = std::max(max_exc, r.stats.advance_exceptions);
        min_ratio = std::min(min_ratio, r.stats.ratio_ok);
        max_final = std::max(max_final, r.final_distance);
        medians = medians && r.median_decreases;
    }
    o.detail << "worst of 10 seeds: window " << min_window << ", exceptions " << max_exc << ", ratio ok " << min_ratio
             << ", final distance " << max_final << ", medians decrease " << (medians ? "yes" : "no");
    o.require(min_window >= 0.9, "corner occupation");
    o.require(max_exc < 0.05, "label advance");
    o.require(min_ratio >= 0.8, "depth ratios");
    o.require(medians && max_final < 0.15, "distance to Gamma");
}

// 7. Limit quadrilateral algebra on random stable cycles.
void quadrilateral(Outcome& o) {
    Rng rng(701, 0);
    double worst_defect = 0.0, worst_norm = 0.0, min_weight = 1.0, min_gap = 1.0;
    for (int t = 0; t < 100; ++t) {
        CycleInfo c;
        c.orientation = t % 2 ? 1 : -1;
        std::array<double, 4> lp{};
        do {
            c.pi = 1;
            for (std::size_t k = 0; k < 4; ++k) {
                c.rho[k] = 0.2 + 4 * rng.uniform();
                lp[k] = 0.1 + 5 * rng.uniform();
                c.pi *= c.rho[k];
            }
        } while (c.pi <= 1.01);
        c.stable = true;
        const LimitQuadrilateral q = limit_quadrilateral(c, lp);
        worst_defect = std::max(worst_defect, q.consistency_defect());
        for (std::size_t k = 0; k < 4; ++k) {
            double sum = 0.0;
            for (double w : q.f[k]) min_weight = std::min(min_weight, w);
            for (double v : q.mu[k]) sum += v, min_weight = std::min(min_weight, v);
            worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
            for (std::size_t j = k + 1; j < 4; ++j) {
                double gap = 0.0;
                for (std::size_t v = 0; v < 4; ++v) gap += std::abs(q.mu[k][v] - q.mu[j][v]);
                min_gap = std::min(min_gap, gap);
            }
        }
    }
    o.detail << "identity defect " << worst_defect << ", normalization " << worst_norm << ", min weight " << min_weight
             << ", min pairwise distance " << min_gap;
    o.require(worst_defect < 1e-10, "identity");
    o.require(worst_norm < 1e-10, "normalization");
    o.require(min_weight > 0.0, "positivity");
    o.require(min_gap > 1e-10, "distinct limit measures");
}

// 8. Scenario III hitting conditions, bounds, and long-run density agreement.
void scenario_three(Outcome& o) {
    const ModelSpec m = preset_model("acyclic_scenario3");
    const Scenario s = classify(m);
    GeometryParams gp;
    gp.r = 0.02, gp.log_eps = -2.0, gp.log_delta = -120.0;
    HittingSpec h = make_hitting_spec(m, s, gp);
    ConditionOptions co;
    co.runs = 40, co.seed = 801;
    const ConditionReport rep = verify_conditions(h, m, co);
    for (const ConditionRow& r : rep.rows) {
        o.detail << "(" << r.name << ") margin " << r.margin << "; ";
        o.require(r.pass && r.margin > 0.0, "condition " + r.name);
    }
    BoundOptions bo;
    bo.runs = 100, bo.seed = 802;
    int held = 0;
    const auto bounds = validate_bound(h, m, boundary_starts(h.geometry), bo);
    for (const BoundRow& r : bounds) held += r.pass;
    o.detail << "bound holds at " << held << "/" << bounds.size() << " starts; ";
    o.require(held == 5 && bounds.size() == 5, "hitting bound");

    ModelSpec::QTable q;
    q[0][0] = Field::constant(0.5);
    q[1][1] = Field::constant(0.5);
    const ModelSpec sources =
        ModelSpec::factored("sources", Field(Poly2({{1.0}, {-2.0}})), Field(Poly2({{1.0, -2.0}})), q);
    const double lr = std::log(0.05);
    bo.runs = 200, bo.seed = 803;
    const ClassicalReport cl = validate_classical(sources, LyapunovFn::corner(1.0, 1.0, 0), 0, 0.05,
                                                  {{lr - 1.0, lr - 1.0}, {lr - 5.0, lr - 2.0}, {lr - 20.0, lr - 20.0}}, bo);
    int cheld = 0;
    for (const BoundRow& r : cl.rows) cheld += r.pass;
    o.detail << "classical bound " << cheld << "/" << cl.rows.size() << "; ";
    o.require(cl.conditions && cheld == static_cast<int>(cl.rows.size()), "classical bound");

    SimOptions so;
    so.record_stride = 10;
    const double horizon = 2e4;
    const Trajectory a = simulate(m, Vec2{0.5, 0.5}, horizon, 0.02, 804, so);
    const Trajectory b = simulate(m, Vec2{0.5, 0.5}, horizon, 0.02, 805, so);
    const std::size_t skip = a.size() / 10;
    const double l1 = empirical_measure(a, 10, 0.05, skip).l1(empirical_measure(b, 10, 0.05, skip));
    o.detail << "two-seed density L1 " << l1 << " (10x10 bins)";
    o.require(l1 < 0.1, "long-run density");
}

// 9. Weight selection on the presets and random admissible spectra.
void betas(Outcome& o) {
    auto replay = [](const BetaAssignment& b, const std::array<VertexSpectrum, 4>& v,
                     const std::array<std::optional<double>, 4>& l2) {
        double slack = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < 4; ++k) {
            if (!(b.beta[k] > 0.0)) return -1.0;
            if (!(v[k].lambda1 < 0 && v[k].lambda2 < 0))
                slack = std::min(slack, b.alpha[k] * v[k].lambda1 + b.beta[k] * v[k].lambda2 - 2.0);
            if (l2[k] && *l2[k] > 0) slack = std::min(slack, b.gamma[k] * *l2[k] - 2.0);
        }
        return std::min(slack, b.min_slack());
    };
    double worst = std::numeric_limits<double>::infinity();
    int presets_done = 0;
    for (const char* name : {"case_study", "unstable_cycle_rho_half", "acyclic_scenario3"}) {
        const Scenario s = classify(preset_model(name));
        o.require(s.betas.has_value(), std::string("weights for ") + name);
        if (!s.betas) continue;
        std::array<std::optional<double>, 4> l2;
        for (std::size_t k = 0; k < 4; ++k)
            if (s.edges[k].in_S) l2[k] = s.edges[k].lambda2_bar;
        worst = std::min(worst, replay(*s.betas, s.vertices, l2));
        ++presets_done;
    }
    Rng rng(901, 0);
    int done = 0;
    while (done < 100) {
        std::array<VertexSpectrum, 4> v;
        for (int k = 0; k < 4; ++k) {
            auto draw = [&] { return (rng.uniform() < 0.5 ? -1 : 1) * (0.1 + 3 * rng.uniform()); };
            const double l1 = draw(), l2 = draw();
            v[static_cast<std::size_t>(k)] = make_vertex_spectrum(k, l1, l2);
        }
        const auto cyc = detect_stochastic_cycle(v, 0.0);
        if (cyc && cyc->pi >= 0.99) continue;
        std::array<std::optional<double>, 4> l2;
        for (std::size_t k = 0; k < 4; ++k)
            if (v[k].lambda1 > 0 && v[(k + 1) % 4].lambda2 > 0)
                l2[k] = (rng.uniform() < 0.5 ? -1 : 1) * (0.1 + rng.uniform());
        worst = std::min(worst, replay(choose_betas(v, l2), v, l2));
        ++done;
    }
    o.detail << presets_done << " presets and " << done << " random spectra; min slack " << worst;
    o.require(worst >= 1e-3, "slack");
}

// 10. Arcsine law.
void arcsine(Outcome& o) {
    ArcsineOptions a;
    a.runs = 10000, a.n = 10000, a.long_paths = 8, a.long_horizon = 1e6, a.seed = 1001;
    const ArcsineReport r = arcsine_scenario(preset_model("arcsine", kNaN), a);
    o.detail << "KS " << r.ks << "; single path: max running fraction " << r.paths[0].max_running << ", min "
             << r.paths[0].min_running << " (other paths showing both: " << r.both_seen - r.paths[0].both() << "/"
             << r.paths.size() - 1 << ")";
    o.require(r.ks < 0.02, "KS distance");
    o.require(r.paths[0].both(), "both windows on the single path");
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
        {"calibration suite", calibration},
        {"one-dimensional classification", one_dimensional},
        {"generator and Lyapunov bands", generator_bands},
        {"Poisson corrector", corrector},
        {"scenario I case study", scenario_one},
        {"scenario II stable cycle", scenario_two},
        {"limit quadrilateral algebra", quadrilateral},
        {"scenario III hitting bound", scenario_three},
        {"weight assignment", betas},
        {"arcsine law", arcsine},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "[exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s %2zu %-32s %6.1fs  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
