#include "degenflow/classifier.hpp"

#include "degenflow/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace degenflow {

namespace {

int md(int k) { return ((k % 4) + 4) % 4; }

} // namespace

std::string AttractorMember::name() const { return (type == Type::Vertex ? "O" : "E") + std::to_string(k); }

bool AttractingSet::has_vertex(int k) const {
    return std::any_of(members.begin(), members.end(),
                       [k](const AttractorMember& a) { return a.type == AttractorMember::Type::Vertex && a.k == k; });
}

bool AttractingSet::has_edge(int k) const {
    return std::any_of(members.begin(), members.end(),
                       [k](const AttractorMember& a) { return a.type == AttractorMember::Type::Edge && a.k == k; });
}

AttractingSet attracting_set(const std::array<VertexSpectrum, 4>& v, const std::array<EdgeSpectrum, 4>& e) {
    AttractingSet a;
    for (int k = 0; k < 4; ++k) {
        const VertexSpectrum& s = v[static_cast<std::size_t>(k)];
        if (s.lambda1 < 0.0 && s.lambda2 < 0.0) a.members.push_back({AttractorMember::Type::Vertex, k, {s.lambda1, s.lambda2}});
    }
    for (int k = 0; k < 4; ++k) {
        const EdgeSpectrum& s = e[static_cast<std::size_t>(k)];
        if (s.in_S && s.lambda2_bar < 0.0) a.members.push_back({AttractorMember::Type::Edge, k, {s.lambda2_bar, s.quad_error}});
    }
    return a;
}

AttractingSet attracting_set(const ModelSpec& m, double tol_hyp, const EdgeOptions& eopt) {
    const auto v = vertex_spectra(m, tol_hyp);
    std::array<EdgeSpectrum, 4> e;
    for (int k = 0; k < 4; ++k) e[static_cast<std::size_t>(k)] = edge_spectrum(m, k, eopt);
    return attracting_set(v, e);
}

// ---------------------------------------------------------------------------

double LimitQuadrilateral::weight(int k, int j) const {
    return f[static_cast<std::size_t>(md(k))][static_cast<std::size_t>(md(j - (k - 3)))];
}

double LimitQuadrilateral::consistency_defect() const {
    double worst = 0.0;
    for (int k = 0; k < 4; ++k) {
        for (int j = k - 2; j <= k + 1; ++j) {
            const double lhs = rho[static_cast<std::size_t>(md(k - 3))] * weight(k + 1, j);
            const double rhs = (md(j) == md(k + 1) ? pi : 1.0) * weight(k, j);
            worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
        }
    }
    return worst;
}

std::array<double, 4> LimitQuadrilateral::segment_point(int k, double s) const {
    const auto& a = mu[static_cast<std::size_t>(md(k))];
    const auto& b = mu[static_cast<std::size_t>(md(k + 1))];
    std::array<double, 4> out{};
    for (std::size_t v = 0; v < 4; ++v) out[v] = (1.0 - s) * a[v] + s * b[v];
    return out;
}

LimitQuadrilateral limit_quadrilateral(const CycleInfo& cycle, const std::array<double, 4>& lambdas_plus) {
    if (!(cycle.pi > 1.0)) throw BadParameters("limit quadrilateral needs a stable cycle (Pi > 1)");
    LimitQuadrilateral q;
    q.pi = cycle.pi;
    for (int p = 0; p < 4; ++p) {
        const int v = cycle.orientation > 0 ? p : md(-p);
        q.vertex[static_cast<std::size_t>(p)] = v;
        q.rho[static_cast<std::size_t>(p)] = cycle.rho[static_cast<std::size_t>(v)];
        q.lambda_plus[static_cast<std::size_t>(p)] = lambdas_plus[static_cast<std::size_t>(v)];
        if (!(q.lambda_plus[static_cast<std::size_t>(p)] > 0.0)) throw BadParameters("lambda_plus must be positive");
    }
    for (int k = 0; k < 4; ++k) {
        double prod = 1.0, total = 0.0;
        auto& fk = q.f[static_cast<std::size_t>(k)];
        for (int i = 0; i < 4; ++i) {
            const int j = k - 3 + i;
            prod *= q.rho[static_cast<std::size_t>(md(j))];
            fk[static_cast<std::size_t>(i)] = prod / q.lambda_plus[static_cast<std::size_t>(md(j))];
            total += fk[static_cast<std::size_t>(i)];
        }
        auto& mk = q.mu[static_cast<std::size_t>(k)];
        mk.fill(0.0);
        for (int i = 0; i < 4; ++i) {
            const int v = q.vertex[static_cast<std::size_t>(md(k - 3 + i))];
            mk[static_cast<std::size_t>(v)] += fk[static_cast<std::size_t>(i)] / total;
        }
    }
    return q;
}

// ---------------------------------------------------------------------------

double BetaAssignment::min_slack() const {
    double s = INFINITY;
    for (const BetaConstraint& c : constraints) s = std::min(s, c.slack);
    return s;
}

namespace {

bool consistent_cycle(const std::array<VertexSpectrum, 4>& v) {
    for (const VertexSpectrum& s : v)
        if (s.kind != VertexKind::Saddle || s.orientation != v[0].orientation) return false;
    return true;
}

// Cycle of consistently oriented saddles with Pi < 1. With lambda1 < 0 < lambda2
// every vertex asks beta_k > rho^k beta_{k-1}; the other orientation reverses the order.
void cycle_betas(const std::array<VertexSpectrum, 4>& v, const BetaOptions& opt, BetaAssignment& out) {
    double pi = 1.0;
    for (const VertexSpectrum& s : v) pi *= s.rho;
    if (!(pi < 1.0)) {
        std::ostringstream os;
        os << "stable cycle (Pi = " << pi << ") admits no weights";
        throw Infeasible(os.str());
    }
    const bool forward = v[0].lambda1 < 0.0;
    // Positions walked from beta_0; order[i] is the edge index assigned at step i.
    std::array<int, 4> order{};
    std::array<double, 4> rho{};  // rho of the vertex linking order[i-1] to order[i]
    for (int i = 0; i < 4; ++i) {
        order[static_cast<std::size_t>(i)] = forward ? i : md(-i);
        const int vk = forward ? i : md(1 - i);
        rho[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(vk)].rho;
    }
    // rho[0] is the wraparound vertex.
    auto wrap = [&rho](double e) {
        double p = rho[0];
        for (int i = 1; i < 4; ++i) p *= rho[static_cast<std::size_t>(i)] + e;
        return p;
    };
    double eps = opt.eps;
    if (std::isnan(eps)) {
        const double target = std::sqrt(pi);
        double hi = 1.0;
        while (wrap(hi) < target) hi *= 2.0;
        boost::uintmax_t iters = 200;
        const auto r = boost::math::tools::bisect([&](double e) { return wrap(e) - target; }, 0.0, hi,
                                                  boost::math::tools::eps_tolerance<double>(50), iters);
        eps = 0.5 * (r.first + r.second);
    }
    if (!(eps > 0.0)) throw BadParameters("cycle eps must be positive");
    out.eps = eps;
    out.wraparound = wrap(eps);
    if (!(out.wraparound < 1.0)) {
        std::ostringstream os;
        os << "wraparound product " << out.wraparound << " >= 1 for eps = " << eps;
        throw Infeasible(os.str());
    }
    out.beta_tilde[static_cast<std::size_t>(order[0])] = 1.0;
    for (int i = 1; i < 4; ++i)
        out.beta_tilde[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
            (rho[static_cast<std::size_t>(i)] + eps) * out.beta_tilde[static_cast<std::size_t>(order[static_cast<std::size_t>(i - 1)])];
}

// Arcs between edges meeting at a saddle, oriented like the saddle; an arc a -> b
// bounds beta_b < c beta_a. Roots get 1, the rest the tightest bound over slack.
void graph_betas(const std::array<VertexSpectrum, 4>& v, const BetaOptions& opt, BetaAssignment& out) {
    struct Arc {
        int from, to;
        double c;
    };
    std::vector<Arc> arcs;
    for (int k = 0; k < 4; ++k) {
        const VertexSpectrum& s = v[static_cast<std::size_t>(k)];
        if (s.lambda1 > 0.0 && s.lambda2 < 0.0) arcs.push_back({md(k - 1), k, s.lambda1 / -s.lambda2});
        else if (s.lambda1 < 0.0 && s.lambda2 > 0.0) arcs.push_back({k, md(k - 1), s.lambda2 / -s.lambda1});
    }
    std::array<int, 4> indeg{};
    for (const Arc& a : arcs) ++indeg[static_cast<std::size_t>(a.to)];
    std::array<bool, 4> done{};
    out.beta_tilde.fill(0.0);
    for (int round = 0; round < 4; ++round) {
        int pick = -1;
        for (int e = 0; e < 4 && pick < 0; ++e)
            if (!done[static_cast<std::size_t>(e)] && indeg[static_cast<std::size_t>(e)] == 0) pick = e;
        if (pick < 0) throw Infeasible("saddle graph has a directed cycle");
        double b = INFINITY;
        for (const Arc& a : arcs)
            if (a.to == pick) b = std::min(b, a.c * out.beta_tilde[static_cast<std::size_t>(a.from)] / opt.slack_factor);
        out.beta_tilde[static_cast<std::size_t>(pick)] = std::isfinite(b) ? b : 1.0;
        done[static_cast<std::size_t>(pick)] = true;
        for (const Arc& a : arcs)
            if (a.from == pick) --indeg[static_cast<std::size_t>(a.to)];
    }
}

} // namespace

BetaAssignment choose_betas(const std::array<VertexSpectrum, 4>& v, const std::array<std::optional<double>, 4>& lambda2_bar,
                            const BetaOptions& opt) {
    if (!(opt.slack_factor > 1.0)) throw BadParameters("slack factor must exceed 1");
    BetaAssignment out;
    if (consistent_cycle(v)) {
        out.method = "cycle";
        cycle_betas(v, opt, out);
    } else {
        out.method = "graph";
        graph_betas(v, opt, out);
    }
    // Combinations that must be positive, before scaling.
    struct Req {
        std::string label;
        double c;
    };
    std::vector<Req> req;
    const auto& bt = out.beta_tilde;
    for (int k = 0; k < 4; ++k) {
        const VertexSpectrum& s = v[static_cast<std::size_t>(k)];
        if (s.lambda1 < 0.0 && s.lambda2 < 0.0) continue;
        req.push_back({"O" + std::to_string(k),
                       bt[static_cast<std::size_t>(md(k - 1))] * s.lambda1 + bt[static_cast<std::size_t>(k)] * s.lambda2});
    }
    for (int k = 0; k < 4; ++k) {
        const auto& l = lambda2_bar[static_cast<std::size_t>(k)];
        if (l && *l > 0.0) req.push_back({"E" + std::to_string(k), bt[static_cast<std::size_t>(k)] * *l});
    }
    double cmin = INFINITY;
    for (const Req& r : req) cmin = std::min(cmin, r.c);
    if (!(cmin > 0.0)) {
        std::ostringstream os;
        os << "no admissible weights: smallest combination " << cmin;
        throw Infeasible(os.str());
    }
    out.scale = std::isfinite(cmin) ? 2.0 * opt.slack_factor / cmin : 1.0;
    for (int k = 0; k < 4; ++k) {
        out.beta[static_cast<std::size_t>(k)] = out.scale * bt[static_cast<std::size_t>(k)];
        out.gamma[static_cast<std::size_t>(k)] = out.beta[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < 4; ++k) out.alpha[static_cast<std::size_t>(k)] = out.beta[static_cast<std::size_t>(md(k - 1))];
    for (const Req& r : req) out.constraints.push_back({r.label, out.scale * r.c, out.scale * r.c - 2.0});
    if (!out.constraints.empty() && out.min_slack() < opt.min_slack) {
        std::ostringstream os;
        os << "constraint slack " << out.min_slack() << " below " << opt.min_slack;
        throw Infeasible(os.str());
    }
    return out;
}

// ---------------------------------------------------------------------------

const char* to_string(ScenarioCase c) {
    switch (c) {
    case ScenarioCase::AttractorSet: return "attractor_set";
    case ScenarioCase::StableCycle: return "stable_cycle";
    default: return "interior_recurrent";
    }
}

std::string Scenario::label() const {
    switch (kind) {
    case ScenarioCase::AttractorSet: return "I";
    case ScenarioCase::StableCycle: return "II";
    default: return "III";
    }
}

namespace {

[[noreturn]] void rethrow_tagged(const char* tag, const Error& e) { throw AssumptionViolated(std::string(tag) + ": " + e.what()); }

} // namespace

Scenario classify(const ModelSpec& m, const ClassifierOptions& opt) {
    if (m.dim() != 2) throw BadParameters("classify needs a planar model; use classify_1d");
    const double tdef = m.tangency_defect();
    if (!(tdef <= 1e-9)) {
        std::ostringstream os;
        os << "I0: fields not tangent to the boundary (defect " << tdef << ")";
        throw AssumptionViolated(os.str());
    }
    if (opt.check_hormander) {
        bool ok = false;
        for (Vec2 x : {Vec2{0.37, 0.61}, Vec2{0.52, 0.29}, Vec2{0.81, 0.77}})
            if (hormander_span(m, x).spans) {
                ok = true;
                break;
            }
        if (!ok) throw AssumptionViolated("C2: brackets do not span at the sampled interior points");
    }
    Scenario sc;
    try {
        sc.vertices = vertex_spectra(m, opt.tol_hyp);
    } catch (const NonHyperbolic& e) {
        rethrow_tagged("D1", e);
    }
    try {
        sc.cycle = detect_stochastic_cycle(sc.vertices, opt.tol_pi);
    } catch (const NonHyperbolicCycle& e) {
        rethrow_tagged("D3", e);
    }
    for (int k = 0; k < 4; ++k) {
        try {
            sc.edges[static_cast<std::size_t>(k)] = edge_spectrum(m, k, opt.edge);
        } catch (const NonHyperbolicEdge& e) {
            rethrow_tagged("D2", e);
        } catch (const AssumptionViolated& e) {
            rethrow_tagged("A2", e);
        }
    }
    sc.attractors = attracting_set(sc.vertices, sc.edges);
    std::array<std::optional<double>, 4> l2;
    for (int k = 0; k < 4; ++k)
        if (sc.edges[static_cast<std::size_t>(k)].in_S) l2[static_cast<std::size_t>(k)] = sc.edges[static_cast<std::size_t>(k)].lambda2_bar;

    if (!sc.attractors.empty()) {
        sc.kind = ScenarioCase::AttractorSet;
        sc.detail = "attractor";
    } else if (sc.cycle && sc.cycle->stable) {
        sc.kind = ScenarioCase::StableCycle;
        sc.detail = "stable cycle";
        std::array<double, 4> lp{};
        for (int k = 0; k < 4; ++k) lp[static_cast<std::size_t>(k)] = sc.vertices[static_cast<std::size_t>(k)].lambda_plus;
        sc.quadrilateral = limit_quadrilateral(*sc.cycle, lp);
        return sc;
    } else {
        sc.kind = ScenarioCase::InteriorRecurrent;
        sc.detail = sc.cycle ? "unstable cycle" : "acyclic";
    }
    sc.betas = choose_betas(sc.vertices, l2, opt.betas);
    return sc;
}

Scenario1d classify_1d(const ModelSpec& m, double tol_hyp, const DensityOptions& dopt) {
    if (m.dim() != 1) throw BadParameters("classify_1d needs a one-dimensional model");
    Scenario1d r;
    double p0, p1;
    m.p(0).eval({0.0, 0.0}, p0, nullptr, nullptr);
    m.p(0).eval({1.0, 0.0}, p1, nullptr, nullptr);
    r.lambda0 = p0;
    r.lambda1 = -p1;
    if (std::abs(r.lambda0) < tol_hyp || std::abs(r.lambda1) < tol_hyp) {
        std::ostringstream os;
        os << "endpoint rate below " << tol_hyp << " (lambda0 = " << r.lambda0 << ", lambda1 = " << r.lambda1 << ")";
        throw NonHyperbolic(os.str());
    }
    if (r.lambda0 < 0.0) r.sinks.push_back(0);
    if (r.lambda1 < 0.0) r.sinks.push_back(1);
    if (r.sinks.empty()) {
        r.interior = true;
        r.density = std::make_shared<StationaryDensity>(StationaryDensity::for_edge(m, dopt));
    }
    return r;
}

// ---------------------------------------------------------------------------

ModelSpec random_model(Rng& rng, const RandomModelOptions& opt) {
    auto u = [&rng](double a, double b) { return a + (b - a) * rng.uniform(); };
    auto bilinear = [&] {
        return Poly2({{u(-opt.coef, opt.coef), u(-opt.coef, opt.coef)}, {u(-opt.coef, opt.coef), u(-opt.coef, opt.coef)}});
    };
    Poly2 p1 = bilinear(), p2 = bilinear();
    ModelSpec::QTable q;
    q[0][0] = Field::constant(u(opt.noise_lo, opt.noise_hi));
    q[1][1] = Field::constant(u(opt.noise_lo, opt.noise_hi));
    q[0][1] = Field::constant(u(-opt.cross, opt.cross));
    return ModelSpec::factored("random", Field(std::move(p1)), Field(std::move(p2)), q);
}

std::pair<ModelSpec, Scenario> random_hyperbolic_model(Rng& rng, const RandomModelOptions& opt,
                                                       const ClassifierOptions& copt) {
    for (int t = 0; t < opt.max_tries; ++t) {
        ModelSpec m = random_model(rng, opt);
        try {
            Scenario s = classify(m, copt);
            bool ok = !s.cycle || std::abs(s.cycle->pi - 1.0) >= opt.margin;
            for (const VertexSpectrum& v : s.vertices)
                ok = ok && std::abs(v.lambda1) >= opt.margin && std::abs(v.lambda2) >= opt.margin;
            for (const EdgeSpectrum& e : s.edges) ok = ok && (!e.in_S || std::abs(e.lambda2_bar) >= opt.margin);
            if (ok) return {std::move(m), std::move(s)};
        } catch (const Error&) {
            // Rejected draw.
        }
    }
    throw SolverFailure("no hyperbolic model drawn within the retry budget");
}

} // namespace degenflow
