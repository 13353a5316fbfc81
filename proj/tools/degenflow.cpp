// Command-line front end: degenflow <command> --config FILE [--seed N] [--out DIR] [--threads N]

#include "degenflow/calc_lab.hpp"
#include "degenflow/classifier.hpp"
#include "degenflow/config.hpp"
#include "degenflow/empirics.hpp"
#include "degenflow/errors.hpp"
#include "degenflow/hitting.hpp"
#include "degenflow/parallel.hpp"
#include "degenflow/presets.hpp"
#include "degenflow/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef DEGENFLOW_VERSION
#define DEGENFLOW_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace degenflow;

namespace {

constexpr const char* kSchemaVersion = "1";

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Comma-separated table; numbers carry 12 significant digits.
class Csv {
public:
    Csv(fs::path path, const std::vector<std::string>& header) : path_(std::move(path)), out_(path_) {
        if (!out_) throw ValidationError("out: cannot write '" + path_.string() + "'");
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
    std::ofstream out_;
};

json yaml_to_json(const YAML::Node& n) {
    if (n.IsMap()) {
        json j = json::object();
        for (const auto& kv : n) j[kv.first.Scalar()] = yaml_to_json(kv.second);
        return j;
    }
    if (n.IsSequence()) {
        json j = json::array();
        for (const auto& e : n) j.push_back(yaml_to_json(e));
        return j;
    }
    if (!n.IsScalar()) return nullptr;
    const std::string& s = n.Scalar();
    if (s == "true") return true;
    if (s == "false") return false;
    char* end = nullptr;
    const long long i = std::strtoll(s.c_str(), &end, 10);
    if (!s.empty() && *end == '\0') return i;
    const double d = std::strtod(s.c_str(), &end);
    if (!s.empty() && *end == '\0' && std::isfinite(d)) return d;
    return s;
}

struct Context {
    std::string command;
    RunConfig cfg;
    fs::path out;
    std::vector<std::string> files;

    fs::path file(const std::string& name) {
        files.push_back(name);
        return out / name;
    }
};

void write_text(Context& ctx, const std::string& name, const std::string& text) {
    std::ofstream f(ctx.file(name));
    f << text;
}

const char* kPlotHead =
    "# Generated plot script; run with python3 from this directory.\n"
    "import pandas as pd\n"
    "import matplotlib\n"
    "matplotlib.use('Agg')\n"
    "import matplotlib.pyplot as plt\n\n";

json vertex_json(const VertexSpectrum& v) {
    json j{{"k", v.k}, {"lambda1", v.lambda1}, {"lambda2", v.lambda2}, {"kind", to_string(v.kind)}};
    if (v.kind == VertexKind::Saddle) {
        j["orientation"] = v.orientation;
        j["rho"] = v.rho;
    }
    return j;
}

// --- commands ------------------------------------------------------------------

json run_classify(Context& ctx, const ModelSpec& m) {
    json r;
    if (m.dim() == 1) {
        const Scenario1d s = classify_1d(m, ctx.cfg.classify.tol_hyp);
        r["scenario"] = s.label();
        r["lambda0"] = s.lambda0;
        r["lambda1"] = s.lambda1;
        r["sinks"] = s.sinks;
        r["interior"] = s.interior;
        Csv csv(ctx.file("density.csv"), {"x", "density"});
        if (s.density)
            for (int i = 1; i < 200; ++i) {
                const double x = i / 200.0;
                csv.row({num(x), num(s.density->pdf_x(x))});
            }
        write_text(ctx, "plot.py",
                   std::string(kPlotHead) +
                       "d = pd.read_csv('density.csv')\n"
                       "if len(d):\n    plt.plot(d.x, d.density)\n    plt.xlabel('x'); plt.ylabel('stationary density')\n"
                       "    plt.savefig('density.png', dpi=120)\n");
        return r;
    }
    ClassifierOptions opt;
    opt.tol_hyp = ctx.cfg.classify.tol_hyp;
    const Scenario s = classify(m, opt);
    r["scenario"] = s.label();
    r["detail"] = s.detail;
    json att = json::array();
    for (const auto& a : s.attractors.members) att.push_back(a.name());
    r["attractors"] = att;
    json vs = json::array(), es = json::array();
    Csv vc(ctx.file("vertices.csv"), {"k", "lambda1", "lambda2", "kind"});
    for (const auto& v : s.vertices) {
        vs.push_back(vertex_json(v));
        vc.row({std::to_string(v.k), num(v.lambda1), num(v.lambda2), to_string(v.kind)});
    }
    Csv ec(ctx.file("edges.csv"), {"k", "in_S", "lambda2_bar", "quad_error"});
    Csv pc(ctx.file("edge_profiles.csv"), {"k", "x1", "density", "lambda2"});
    for (const auto& e : s.edges) {
        json j{{"k", e.k}, {"in_S", e.in_S}, {"endpoint_rates", e.endpoint_rates}};
        if (e.in_S) {
            j["lambda2_bar"] = e.lambda2_bar;
            j["quad_error"] = e.quad_error;
            for (std::size_t i = 0; i < e.grid_x.size(); ++i)
                pc.row({std::to_string(e.k), num(e.grid_x[i]), num(e.density_x[i]), num(e.lambda2[i])});
        }
        es.push_back(j);
        ec.row({std::to_string(e.k), e.in_S ? "1" : "0", num(e.in_S ? e.lambda2_bar : NAN),
                num(e.in_S ? e.quad_error : NAN)});
    }
    r["vertices"] = vs;
    r["edges"] = es;
    if (s.cycle) {
        r["cycle"] = {{"orientation", s.cycle->orientation}, {"rho", s.cycle->rho}, {"pi", s.cycle->pi},
                      {"stable", s.cycle->stable}};
    }
    if (s.quadrilateral) {
        r["limit_measures"] = s.quadrilateral->mu;
        r["visit_order"] = s.quadrilateral->vertex;
    }
    if (s.betas) {
        const BetaAssignment& b = *s.betas;
        json cons = json::array();
        for (const auto& c : b.constraints) cons.push_back({{"label", c.label}, {"value", c.value}, {"slack", c.slack}});
        r["betas"] = {{"method", b.method}, {"beta", b.beta}, {"alpha", b.alpha}, {"gamma", b.gamma},
                      {"min_slack", b.min_slack()}, {"constraints", cons}};
    }
    write_text(ctx, "plot.py",
               std::string(kPlotHead) +
                   "d = pd.read_csv('edge_profiles.csv')\n"
                   "fig, ax = plt.subplots(1, 2, figsize=(10, 4))\n"
                   "for k, g in d.groupby('k'):\n"
                   "    ax[0].plot(g.x1, g.density, label=f'E{k}')\n"
                   "    ax[1].plot(g.x1, g.lambda2, label=f'E{k}')\n"
                   "ax[0].set_title('edge density'); ax[1].set_title('normal rate')\n"
                   "ax[0].legend(); fig.savefig('edges.png', dpi=120)\n");
    return r;
}

json run_simulate(Context& ctx, const ModelSpec& m) {
    const auto& o = ctx.cfg.simulate;
    SimOptions so;
    so.record_stride = o.stride;
    const Vec2 x0{o.x0[0], o.x0.size() > 1 ? o.x0[1] : 0.0};
    const Trajectory tr = simulate(m, x0, o.horizon, o.dt, ctx.cfg.seed, so);
    {
        std::ofstream f(ctx.file("trajectory.csv"));
        tr.write_csv(f);
    }
    json r{{"samples", tr.size()}, {"final_t", tr.t.back()}, {"final_x", tr.x.back()}, {"final_y", tr.y.back()}};
    if (m.dim() == 2) r["corner_fraction_last_10pct"] = window_corner_fraction(tr, 0.05, 0.1);
    write_text(ctx, "plot.py",
               std::string(kPlotHead) +
                   "d = pd.read_csv('trajectory.csv')\n"
                   "cols = [c for c in d.columns if c.startswith('x')]\n"
                   "fig, ax = plt.subplots(1, 2, figsize=(10, 4))\n"
                   "for c in cols:\n    ax[0].plot(d.t, d[c], label=c, lw=0.5)\n"
                   "ax[0].legend()\n"
                   "if len(cols) == 2:\n    ax[1].plot(d.x1, d.x2, lw=0.3); ax[1].set_xlim(0, 1); ax[1].set_ylim(0, 1)\n"
                   "fig.savefig('trajectory.png', dpi=120)\n");
    return r;
}

json run_convergence(Context& ctx, const ModelSpec& m) {
    const auto& o = ctx.cfg.convergence;
    ConvergenceOptions opt;
    opt.runs = o.runs;
    opt.horizon = o.horizon;
    opt.dt = o.dt;
    opt.trap_radius = o.trap_radius;
    opt.depth_threshold = o.depth_threshold;
    opt.final_fraction = o.final_fraction;
    opt.seed = ctx.cfg.seed;
    opt.threads = ctx.cfg.threads;
    ConvergenceEstimate est;
    json r;
    if (m.dim() == 1) {
        const Scenario1d s = classify_1d(m);
        r["scenario"] = s.label();
        est = estimate_convergence(m, o.x0[0], s, opt);
    } else {
        const Scenario s = classify(m);
        r["scenario"] = s.label();
        est = estimate_convergence(m, Vec2{o.x0[0], o.x0[1]}, s, opt);
    }
    json rows = json::array();
    for (std::size_t i = 0; i < est.names.size(); ++i) {
        double near = 0.0;
        std::size_t cnt = 0;
        for (std::size_t j = 0; j < est.outcome.size(); ++j)
            if (est.outcome[j] == static_cast<int>(i)) near += est.near_fraction[j], ++cnt;
        rows.push_back({{"attractor", est.names[i]}, {"count", est.counts[i]}, {"p", est.p[i]}, {"se", est.se[i]},
                        {"mean_near_fraction", cnt ? near / static_cast<double>(cnt) : NAN}});
    }
    r["runs"] = est.runs;
    r["attractors"] = rows;
    r["unresolved"] = est.unresolved;
    r["unresolved_fraction"] = est.unresolved_fraction;
    Csv csv(ctx.file("outcomes.csv"), {"run", "outcome", "near_fraction"});
    for (std::size_t j = 0; j < est.outcome.size(); ++j)
        csv.row({std::to_string(j), est.outcome[j] < 0 ? "unresolved" : est.names[static_cast<std::size_t>(est.outcome[j])],
                 num(est.near_fraction[j])});
    write_text(ctx, "plot.py",
               std::string(kPlotHead) +
                   "d = pd.read_csv('outcomes.csv')\n"
                   "d.outcome.value_counts().plot.bar()\n"
                   "plt.ylabel('runs'); plt.tight_layout(); plt.savefig('outcomes.png', dpi=120)\n");
    return r;
}

json run_cycle(Context& ctx, const ModelSpec& m) {
    const auto& o = ctx.cfg.cycle;
    const Scenario s = classify(m);
    CycleRunOptions opt;
    opt.x0 = {o.x0[0], o.x0[1]};
    opt.horizon = o.horizon;
    opt.dt = o.dt;
    opt.stride = o.stride;
    opt.r = o.r;
    opt.r_prime = o.r_prime;
    opt.r0 = o.r0;
    opt.warmup = o.warmup;
    opt.tol = o.tol;
    opt.points = o.points;
    std::vector<CycleRun> runs(o.seeds);
    parallel_for(
        o.seeds, [&](std::size_t i) { runs[i] = analyze_cycle_run(m, s, opt, ctx.cfg.seed + i); }, ctx.cfg.threads);
    Csv ep(ctx.file("epochs.csv"), {"seed", "n", "eta", "label", "depth", "corner_time"});
    Csv gm(ctx.file("gamma.csv"), {"seed", "t", "distance", "non_corner", "m0", "m1", "m2", "m3"});
    json rows = json::array();
    for (const CycleRun& run : runs) {
        const auto& rec = run.record;
        for (std::size_t n = 0; n < rec.size(); ++n)
            ep.row({std::to_string(run.seed), std::to_string(n), num(rec.eta[n]), std::to_string(rec.label[n]),
                    num(rec.depth[n]), num(n < rec.corner_time.size() ? rec.corner_time[n] : NAN)});
        const auto& g = run.gamma;
        for (std::size_t i = 0; i < g.t.size(); ++i)
            gm.row({std::to_string(run.seed), num(g.t[i]), num(g.distance[i]), num(g.non_corner[i]),
                    num(g.vertex_mass[i][0]), num(g.vertex_mass[i][1]), num(g.vertex_mass[i][2]),
                    num(g.vertex_mass[i][3])});
        rows.push_back({{"seed", run.seed},
                        {"epochs", run.stats.epochs},
                        {"late_epochs", run.stats.late},
                        {"advance_exceptions", run.stats.advance_exceptions},
                        {"ratio_ok", run.stats.ratio_ok},
                        {"depth_ratios", run.stats.ratios},
                        {"window_corner_fraction", run.window_fraction},
                        {"median_decreases", run.median_decreases},
                        {"final_gamma_distance", run.final_distance}});
    }
    json r{{"scenario", s.label()}, {"detail", s.detail}, {"rho", s.cycle->rho}, {"orientation", s.cycle->orientation},
           {"limit_measures", s.quadrilateral->mu}, {"runs", rows}};
    write_text(ctx, "plot.py",
               std::string(kPlotHead) +
                   "g = pd.read_csv('gamma.csv')\n"
                   "e = pd.read_csv('epochs.csv')\n"
                   "fig, ax = plt.subplots(1, 2, figsize=(10, 4))\n"
                   "for seed, d in g.groupby('seed'):\n    ax[0].loglog(d.t, d.distance, lw=0.7)\n"
                   "ax[0].set_xlabel('t'); ax[0].set_ylabel('distance to Gamma')\n"
                   "for seed, d in e.groupby('seed'):\n    ax[1].semilogy(d.n, -d.depth, marker='o', lw=0.7)\n"
                   "ax[1].set_xlabel('epoch'); ax[1].set_ylabel('-depth')\n"
                   "fig.savefig('cycle.png', dpi=120)\n");
    return r;
}

json row_json(const ConditionRow& c) {
    return {{"name", c.name},   {"value", c.value}, {"se", c.se},           {"bound", c.bound}, {"margin", c.margin},
            {"pass", c.pass}, {"conditional", c.conditional}, {"points", c.points}, {"worst_y", c.worst}};
}

json run_hitting(Context& ctx, const ModelSpec& m) {
    const auto& o = ctx.cfg.hitting;
    const Scenario s = classify(m);
    GeometryParams gp;
    gp.r = o.r;
    gp.log_eps = o.log_eps;
    gp.log_delta = o.log_delta;
    if (o.log_r_prime) gp.log_r_prime = *o.log_r_prime;
    HittingSpec spec = make_hitting_spec(m, s, gp);
    ConditionOptions co;
    co.runs = o.runs;
    co.dt = o.dt;
    if (o.K) co.K = *o.K;
    if (o.T) co.T = *o.T;
    co.seed = ctx.cfg.seed;
    co.threads = ctx.cfg.threads;
    const ConditionReport rep = verify_conditions(spec, m, co);
    BoundOptions bo;
    bo.runs = o.bound_runs;
    bo.dt = o.dt;
    bo.cap = o.cap;
    bo.seed = ctx.cfg.seed + 17;
    bo.threads = ctx.cfg.threads;
    const auto starts = boundary_starts(spec.geometry);
    const auto bounds = validate_bound(spec, m, starts, bo);

    Csv cc(ctx.file("conditions.csv"), {"condition", "value", "se", "bound", "margin", "pass"});
    json conds = json::array();
    for (const auto& c : rep.rows) {
        conds.push_back(row_json(c));
        cc.row({c.name, num(c.value), num(c.se), num(c.bound), num(c.margin), c.pass ? "1" : "0"});
    }
    Csv bc(ctx.file("bounds.csv"), {"y1", "y2", "phi", "mean", "se", "bound", "runs", "capped", "pass"});
    json bj = json::array();
    bool bounds_ok = true;
    for (const auto& b : bounds) {
        bounds_ok = bounds_ok && b.pass;
        bj.push_back({{"y", b.y}, {"phi", b.phi}, {"mean", b.mean}, {"se", b.se}, {"bound", b.bound}, {"pass", b.pass}});
        bc.row({num(b.y[0]), num(b.y[1]), num(b.phi), num(b.mean), num(b.se), num(b.bound), std::to_string(b.runs),
                std::to_string(b.capped), b.pass ? "1" : "0"});
    }
    json r{{"scenario", s.label()},
           {"detail", s.detail},
           {"geometry", spec.geometry.describe()},
           {"betas", spec.betas.beta},
           {"shift", spec.shift},
           {"K", rep.K},
           {"T", rep.T},
           {"conditions", conds},
           {"all_conditions_pass", rep.all_pass()},
           {"bounds", bj},
           {"all_bounds_pass", bounds_ok}};
    write_text(ctx, "plot.py",
               std::string(kPlotHead) +
                   "b = pd.read_csv('bounds.csv')\n"
                   "plt.errorbar(-b.y2, b['mean'], yerr=3 * b.se, fmt='o', label='mean exit time')\n"
                   "plt.plot(-b.y2, b.bound, 's', label='bound')\n"
                   "plt.xscale('log'); plt.yscale('log'); plt.xlabel('depth'); plt.legend()\n"
                   "plt.savefig('bounds.png', dpi=120)\n");
    return r;
}

std::string xml_escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '&') o += "&amp;";
        else if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '"') o += "&quot;";
        else o += c;
    }
    return o;
}

json run_calc(Context& ctx, const ModelSpec& m) {
    const auto& o = ctx.cfg.calc;
    const std::uint64_t seed = ctx.cfg.seed;
    struct Row {
        std::string group, name;
        double stat, se, ref;
        bool pass;
        std::string detail;
    };
    std::vector<Row> rows;

    DriftMartingaleLab lab;
    lab.threads = ctx.cfg.threads;
    lab.nu = 1.0, lab.A = 1.0, lab.z_upper = 2.0, lab.runs = o.wald_runs, lab.dt = o.dt, lab.seed = seed;
    const OracleRow wald = wald_mean(lab);
    rows.push_back({"oracle", wald.name, wald.estimate, wald.se, wald.oracle, wald.pass, "nu=1, A=1, z*=2"});
    lab.nu = -1.0, lab.z_upper = 1.0, lab.runs = o.escape_runs, lab.dt = o.escape_dt, lab.cap = 50.0, lab.seed = seed + 1;
    for (const auto& e : escape_probability(lab))
        rows.push_back({"oracle", e.name, e.estimate, e.se, e.oracle, e.pass, "nu=-1, A=1, z*=1"});
    lab.nu = 0.0, lab.z_lower = -3.0, lab.runs = o.wald_runs, lab.dt = o.dt, lab.cap = 100.0, lab.seed = seed + 2;
    const OracleRow ruin = gamblers_ruin(lab);
    rows.push_back({"oracle", ruin.name, ruin.estimate, ruin.se, ruin.oracle, ruin.pass, "nu=0, z*=1, z_*=-3"});

    lab.runs = o.tail_runs;
    lab.seed = seed + 3;
    for (auto [t, z] : {std::pair{1.0, 0.0}, {1.0, 3.0}, {4.0, 6.0}}) {
        if (t == 4.0) lab.seed = seed + 4;
        const TailCheck c = check_exponential_martingale(lab, t, z, 200);
        std::ostringstream d;
        d << "t=" << t << ", z=" << z;
        rows.push_back({"martingale_bound", "sup_tail", c.tail, c.se, c.bound, c.pass, d.str()});
        const bool agree = std::abs(c.tail - c.reflection) <= 3.0 * c.se || (z == 0.0 && c.tail == 1.0);
        rows.push_back({"oracle", "reflection", c.tail, c.se, c.reflection, agree, d.str()});
    }

    const auto manifest = o.manifest.empty() ? default_manifest() : o.manifest;
    for (const LemmaRow& l : check_exit_bounds_suite(manifest, seed + 5, ctx.cfg.threads))
        rows.push_back({"exit_time", l.check, l.statistic, l.se, l.bound, l.pass, l.params + "; " + l.note});

    ArcsineOptions ao;
    ao.runs = o.arcsine_runs;
    ao.n = o.arcsine_n;
    ao.long_paths = o.long_paths;
    ao.long_horizon = o.long_horizon;
    ao.seed = seed + 6;
    ao.threads = ctx.cfg.threads;
    const ModelSpec arc = m.dim() == 1 && m.name() == "arcsine" ? m : preset_model("arcsine", std::nan(""));
    const ArcsineReport ar = arcsine_scenario(arc, ao);
    rows.push_back({"arcsine", "ks_distance", ar.ks, 0.0, 0.02, ar.ks < 0.02, "exact Brownian logit"});
    rows.push_back({"arcsine", "both_windows", ar.paths[0].both() ? 1.0 : 0.0, 0.0, 1.0, ar.paths[0].both(),
                    "first long path; " + std::to_string(ar.both_seen) + " of " + std::to_string(ar.paths.size()) +
                        " paths show both"});
    {
        Csv hs(ctx.file("arcsine_samples.csv"), {"run", "H"});
        for (std::size_t i = 0; i < ar.h.size(); ++i) hs.row({std::to_string(i), num(ar.h[i])});
        Csv lp(ctx.file("arcsine_paths.csv"), {"path", "max_running", "t_max", "min_running", "t_min"});
        for (std::size_t i = 0; i < ar.paths.size(); ++i)
            lp.row({std::to_string(i), num(ar.paths[i].max_running), num(ar.paths[i].t_max),
                    num(ar.paths[i].min_running), num(ar.paths[i].t_min)});
    }

    Csv csv(ctx.file("calc_rows.csv"), {"group", "name", "statistic", "se", "reference", "pass"});
    json jr = json::array();
    std::size_t failures = 0;
    std::ostringstream xml;
    for (const Row& r : rows) {
        csv.row({r.group, r.name, num(r.stat), num(r.se), num(r.ref), r.pass ? "1" : "0"});
        jr.push_back({{"group", r.group}, {"name", r.name}, {"statistic", r.stat}, {"se", r.se}, {"reference", r.ref},
                      {"pass", r.pass}, {"detail", r.detail}});
        failures += r.pass ? 0 : 1;
        xml << "  <testcase classname=\"" << r.group << "\" name=\"" << xml_escape(r.name + " [" + r.detail + "]")
            << "\">";
        if (!r.pass)
            xml << "<failure message=\"statistic " << num(r.stat) << " (se " << num(r.se) << ") vs " << num(r.ref)
                << "\"/>";
        xml << "</testcase>\n";
    }
    write_text(ctx, "junit.xml",
               "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<testsuite name=\"calc-tests\" tests=\"" +
                   std::to_string(rows.size()) + "\" failures=\"" + std::to_string(failures) + "\">\n" + xml.str() +
                   "</testsuite>\n");
    write_text(ctx, "plot.py",
               std::string(kPlotHead) +
                   "import numpy as np\n"
                   "h = pd.read_csv('arcsine_samples.csv').H.sort_values().to_numpy()\n"
                   "u = np.linspace(0, 1, 400)\n"
                   "plt.step(h, np.arange(1, len(h) + 1) / len(h), label='empirical')\n"
                   "plt.plot(u, 2 / np.pi * np.arcsin(np.sqrt(u)), label='arcsine')\n"
                   "plt.legend(); plt.xlabel('H_n'); plt.savefig('arcsine.png', dpi=120)\n");
    return {{"rows", jr}, {"failures", failures}, {"all_pass", failures == 0}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"degenflow: degenerate diffusions on the square"};
    app.require_subcommand(1);
    app.set_version_flag("--version", DEGENFLOW_VERSION);
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = -1;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"classify", "vertex and edge spectra, attracting set and scenario"},
        {"simulate", "one trajectory to CSV"},
        {"cycle-analysis", "epochs and vertex-mass statistics of a stable cycle"},
        {"convergence", "which attractor each run is trapped by"},
        {"hitting-verify", "region conditions and exit-time bounds"},
        {"calc-tests", "closed-form and inequality checks for drift-plus-martingale processes"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        CLI::App* sc = app.add_subcommand(name, help);
        sc->add_option("--config", config_path, "YAML run configuration")->required();
        sc->add_option("--seed", seed, "master seed (overrides the config)");
        sc->add_option("--out", out_dir, "output directory (overrides the config and DEGENFLOW_OUT)");
        sc->add_option("--threads", threads, "worker cap, 0 = all cores");
        subs.push_back(sc);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    Context ctx;
    for (CLI::App* sc : subs)
        if (sc->parsed()) ctx.command = sc->get_name();
    auto fail = [&](const std::string& kind, const std::string& what, int code) {
        json err{{"status", "error"}, {"command", ctx.command}, {"kind", kind}, {"message", what}, {"exit_code", code}};
        std::cerr << err.dump() << "\n";
        if (!ctx.out.empty()) {
            std::error_code ec;
            fs::create_directories(ctx.out, ec);
            std::ofstream(ctx.out / "error.json") << err.dump(2) << "\n";
        }
        return code;
    };
    if (!out_dir.empty()) ctx.out = out_dir;
    try {
        ctx.cfg = load_config(config_path);
        if (!ctx.cfg.command.empty() && ctx.cfg.command != ctx.command)
            throw ValidationError("command: config is for '" + ctx.cfg.command + "', not '" + ctx.command + "'");
        for (CLI::App* sc : subs) {
            if (!sc->parsed()) continue;
            if (sc->count("--seed")) ctx.cfg.seed = seed;
            if (sc->count("--threads")) ctx.cfg.threads = threads;
        }
        validate_config(ctx.cfg);
        if (!out_dir.empty())
            ctx.out = out_dir;
        else if (!ctx.cfg.out.empty())
            ctx.out = ctx.cfg.out;
        else if (const char* env = std::getenv("DEGENFLOW_OUT"))
            ctx.out = env;
        else
            ctx.out = "degenflow_out";
        fs::create_directories(ctx.out);
        if (ctx.cfg.threads > 0) default_threads() = ctx.cfg.threads;

        const ModelSpec m = build_model(ctx.cfg.model);
        json meta{{"schema", "degenflow." + ctx.command + "/" + kSchemaVersion},
                  {"version", DEGENFLOW_VERSION},
                  {"command", ctx.command},
                  {"seed", ctx.cfg.seed},
                  {"model", {{"name", m.name()}, {"dim", m.dim()}, {"unsafe_model", ctx.cfg.model.unsafe_model}}},
                  {"config", yaml_to_json(YAML::Load(emit_config(ctx.cfg)))}};
        if (ctx.cfg.model.unsafe_model) meta["model"]["tangency_defect"] = m.tangency_defect();
        write_text(ctx, "config.yaml", emit_config(ctx.cfg));

        json result;
        if (ctx.command == "classify") result = run_classify(ctx, m);
        else if (ctx.command == "simulate") result = run_simulate(ctx, m);
        else if (ctx.command == "convergence") result = run_convergence(ctx, m);
        else if (ctx.command == "cycle-analysis") result = run_cycle(ctx, m);
        else if (ctx.command == "hitting-verify") result = run_hitting(ctx, m);
        else result = run_calc(ctx, m);

        ctx.files.push_back("report.json");
        meta["outputs"] = ctx.files;
        json report{{"status", "ok"}, {"metadata", meta}, {"result", result}};
        std::ofstream(ctx.out / "report.json") << report.dump(2) << "\n";
        std::cout << (ctx.out / "report.json").string() << "\n";
        return 0;
    } catch (const ParseError& e) {
        return fail(e.kind(), e.what(), 1);
    } catch (const Error& e) {
        return fail(e.kind(), e.what(), e.assumption() ? 2 : 1);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
}
