#include "degenflow/config.hpp"

#include "degenflow/errors.hpp"
#include "degenflow/presets.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace degenflow {

namespace {

[[noreturn]] void parse_fail(const YAML::Mark& mark, const std::string& what) {
    if (mark.is_null()) throw ParseError(what, 0, 0);
    throw ParseError(what, mark.line + 1, mark.column + 1);
}

void only_keys(const YAML::Node& n, const std::string& path, std::initializer_list<const char*> keys) {
    if (!n.IsMap()) parse_fail(n.Mark(), (path.empty() ? std::string("config") : path) + ": expected a mapping");
    for (const auto& kv : n) {
        const std::string k = kv.first.Scalar();
        if (std::none_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; }))
            throw ValidationError((path.empty() ? k : path + "." + k) + ": unknown field");
    }
}

template <class T>
void read(const YAML::Node& n, const char* key, T& out, const std::string& path) {
    const YAML::Node v = n[key];
    if (!v) return;
    try {
        if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            // yaml-cpp would wrap negative text into a huge unsigned value.
            if (!v.IsScalar() || (!v.Scalar().empty() && v.Scalar()[0] == '-'))
                parse_fail(v.Mark(), path + "." + key + ": expected a nonnegative integer");
        }
        out = v.as<T>();
    } catch (const YAML::BadConversion& e) {
        parse_fail(v.Mark(), path + "." + key + ": malformed value '" + (v.IsScalar() ? v.Scalar() : "") + "'");
    }
}

template <class T>
void read(const YAML::Node& n, const char* key, std::optional<T>& out, const std::string& path) {
    if (!n[key]) return;
    T v{};
    read(n, key, v, path);
    out = v;
}

// A scalar stands for a constant table.
void read_table(const YAML::Node& n, const char* key, CoefTable& out, const std::string& path) {
    const YAML::Node v = n[key];
    if (!v) return;
    try {
        if (v.IsScalar())
            out = {{v.as<double>()}};
        else
            out = v.as<CoefTable>();
    } catch (const YAML::BadConversion&) {
        parse_fail(v.Mark(), path + "." + key + ": expected a number or a table of numbers");
    }
}

Member read_member(const YAML::Node& n, const std::string& path) {
    std::string s = "brownian";
    read(n, "member", s, path);
    if (s == "brownian") return Member::Brownian;
    if (s == "alternating") return Member::Alternating;
    throw ValidationError(path + ".member: expected brownian or alternating");
}

const char* kSigmaKeys[2][2] = {{"s11", "s12"}, {"s21", "s22"}};  // [m][i] -> s{m+1}{i+1}
const char* kQKeys[2][2] = {{"q11", "q12"}, {"q21", "q22"}};

void parse_model(const YAML::Node& n, ModelConfig& m) {
    const std::string path = "model";
    only_keys(n, path, {"preset", "noise", "name", "dim", "form", "p1", "p2", "q11", "q12", "q21", "q22", "b1", "b2",
                        "s11", "s12", "s21", "s22", "unsafe_model"});
    read(n, "preset", m.preset, path);
    read(n, "noise", m.noise, path);
    read(n, "name", m.name, path);
    read(n, "dim", m.dim, path);
    read(n, "form", m.form, path);
    read(n, "unsafe_model", m.unsafe_model, path);
    read_table(n, "p1", m.p[0], path);
    read_table(n, "p2", m.p[1], path);
    read_table(n, "b1", m.b[0], path);
    read_table(n, "b2", m.b[1], path);
    for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 2; ++i) {
            read_table(n, kQKeys[a][i], m.q[a][i], path);
            read_table(n, kSigmaKeys[a][i], m.sigma[a][i], path);
        }
}

void parse_vec(const YAML::Node& n, const char* key, std::vector<double>& out, const std::string& path) {
    const YAML::Node v = n[key];
    if (!v) return;
    try {
        out = v.IsScalar() ? std::vector<double>{v.as<double>()} : v.as<std::vector<double>>();
    } catch (const YAML::BadConversion&) {
        parse_fail(v.Mark(), path + "." + key + ": expected a list of numbers");
    }
}

LemmaCase parse_case(const YAML::Node& n, const std::string& path) {
    only_keys(n, path, {"check", "member", "nu", "A", "a", "z_upper", "z_lower", "kappa", "b", "L", "r", "runs", "dt",
                        "cap"});
    LemmaCase c;
    read(n, "check", c.check, path);
    c.member = read_member(n, path);
    read(n, "nu", c.nu, path);
    read(n, "A", c.A, path);
    read(n, "a", c.a, path);
    read(n, "z_upper", c.z_upper, path);
    read(n, "z_lower", c.z_lower, path);
    read(n, "kappa", c.kappa, path);
    read(n, "b", c.b, path);
    read(n, "L", c.L, path);
    read(n, "r", c.r, path);
    read(n, "runs", c.runs, path);
    read(n, "dt", c.dt, path);
    read(n, "cap", c.cap, path);
    return c;
}

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ValidationError(field + ": " + what);
}

bool open_unit(double x) { return x > 0.0 && x < 1.0; }

void check_x0(const std::vector<double>& x0, int dim, const std::string& field) {
    require(x0.size() == static_cast<std::size_t>(dim), field, "needs " + std::to_string(dim) + " coordinates");
    for (double x : x0) require(open_unit(x), field, "coordinates must lie in (0, 1)");
}

void check_table(const CoefTable& t, const std::string& field) {
    std::size_t w = t.empty() ? 0 : t[0].size();
    for (const auto& row : t) {
        require(row.size() == w && w > 0, field, "rows must be nonempty and of equal length");
        for (double v : row) require(std::isfinite(v), field, "coefficients must be finite");
    }
}

bool any_table(const ModelConfig& m) {
    bool any = !m.p[0].empty() || !m.p[1].empty() || !m.b[0].empty() || !m.b[1].empty();
    for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 2; ++i) any = any || !m.q[a][i].empty() || !m.sigma[a][i].empty();
    return any;
}

int model_dim(const ModelConfig& m) {
    if (m.preset.empty()) return m.dim;
    try {
        return preset_info(m.preset).dim;
    } catch (const ValidationError&) {
        throw ValidationError("model.preset: unknown preset '" + m.preset + "'");
    }
}

// --- emission ---------------------------------------------------------------

YAML::Node table_node(const CoefTable& t) {
    YAML::Node n(YAML::NodeType::Sequence);
    for (const auto& row : t) {
        YAML::Node r(YAML::NodeType::Sequence);
        for (double v : row) r.push_back(v);
        r.SetStyle(YAML::EmitterStyle::Flow);
        n.push_back(r);
    }
    n.SetStyle(YAML::EmitterStyle::Flow);
    return n;
}

YAML::Node vec_node(const std::vector<double>& v) {
    YAML::Node n(YAML::NodeType::Sequence);
    for (double x : v) n.push_back(x);
    n.SetStyle(YAML::EmitterStyle::Flow);
    return n;
}

} // namespace

void validate_config(const RunConfig& c) {
    static const std::set<std::string> commands{"",           "classify",       "simulate", "cycle-analysis",
                                                "convergence", "hitting-verify", "calc-tests"};
    require(commands.count(c.command) == 1, "command", "unknown command '" + c.command + "'");
    const ModelConfig& m = c.model;
    if (!m.preset.empty()) {
        require(!any_table(m), "model.preset", "a preset excludes explicit coefficient tables");
        if (m.noise) require(*m.noise >= 0.0 && std::isfinite(*m.noise), "model.noise", "must be finite and nonnegative");
    } else {
        require(m.dim == 1 || m.dim == 2, "model.dim", "must be 1 or 2");
        require(m.form == "factored" || m.form == "raw", "model.form", "must be factored or raw");
        require(!m.noise, "model.noise", "only applies to presets");
        if (m.form == "raw") {
            require(m.unsafe_model, "model.unsafe_model", "raw fields require unsafe_model: true");
            require(!m.b[0].empty(), "model.b1", "missing drift table");
            if (m.dim == 2) require(!m.b[1].empty(), "model.b2", "missing drift table");
        } else {
            require(!m.p[0].empty(), "model.p1", "missing drift table");
            if (m.dim == 2) require(!m.p[1].empty(), "model.p2", "missing drift table");
        }
        const char* pk[2] = {"model.p1", "model.p2"};
        const char* bk[2] = {"model.b1", "model.b2"};
        for (int i = 0; i < 2; ++i) {
            check_table(m.p[i], pk[i]);
            check_table(m.b[i], bk[i]);
            for (int a = 0; a < 2; ++a) {
                check_table(m.q[a][i], std::string("model.") + kQKeys[a][i]);
                check_table(m.sigma[a][i], std::string("model.") + kSigmaKeys[a][i]);
            }
        }
    }
    const int dim = model_dim(m);
    require(c.threads >= 0, "threads", "must be nonnegative");

    const auto& s = c.simulate;
    check_x0(s.x0, dim, "simulate.x0");
    require(s.horizon > 0.0 && std::isfinite(s.horizon), "simulate.horizon", "must be positive");
    require(s.dt > 0.0 && s.dt <= s.horizon, "simulate.dt", "must lie in (0, horizon]");
    require(s.stride >= 1, "simulate.stride", "must be at least 1");

    const auto& v = c.convergence;
    check_x0(v.x0, dim, "convergence.x0");
    require(v.runs >= 1, "convergence.runs", "must be at least 1");
    require(v.horizon > 0.0 && std::isfinite(v.horizon), "convergence.horizon", "must be positive");
    require(v.dt > 0.0 && v.dt <= v.horizon, "convergence.dt", "must lie in (0, horizon]");
    require(v.trap_radius > 0.0 && v.trap_radius < 0.5, "convergence.trap_radius", "must lie in (0, 1/2)");
    require(v.final_fraction > 0.0 && v.final_fraction <= 1.0, "convergence.final_fraction", "must lie in (0, 1]");
    require(v.depth_threshold < 0.0, "convergence.depth_threshold", "must be negative");

    const auto& y = c.cycle;
    check_x0(y.x0, 2, "cycle.x0");
    require(y.horizon > 0.0 && std::isfinite(y.horizon), "cycle.horizon", "must be positive");
    require(y.dt > 0.0 && y.dt <= y.horizon, "cycle.dt", "must lie in (0, horizon]");
    require(y.stride >= 1, "cycle.stride", "must be at least 1");
    require(y.seeds >= 1, "cycle.seeds", "must be at least 1");
    require(y.r > 0.0 && y.r < 0.25, "cycle.r", "must lie in (0, 1/4)");
    require(y.r_prime > 0.0, "cycle.r_prime", "must be positive");
    require(y.r_prime < y.r, "cycle.r_prime", "must be smaller than cycle.r");
    require(y.r0 > 0.0 && y.r0 < 0.5, "cycle.r0", "must lie in (0, 1/2)");
    require(y.warmup >= 0.0 && y.warmup < 1.0, "cycle.warmup", "must lie in [0, 1)");
    require(y.tol > 0.0, "cycle.tol", "must be positive");
    require(y.points >= 2, "cycle.points", "must be at least 2");

    const auto& h = c.hitting;
    require(h.r > 0.0 && h.r < 0.25, "hitting.r", "must lie in (0, 1/4)");
    require(h.log_eps < 0.0, "hitting.log_eps", "must be negative");
    require(h.log_delta <= 0.0, "hitting.log_delta", "must be nonpositive");
    if (h.log_r_prime)
        require(*h.log_r_prime <= h.log_delta + 2.0 * h.log_eps + std::log(h.r), "hitting.log_r_prime",
                "r' must not exceed delta eps^2 r");
    require(h.runs >= 1 && h.bound_runs >= 1, "hitting.runs", "must be at least 1");
    require(h.dt > 0.0, "hitting.dt", "must be positive");
    require(h.cap > 0.0, "hitting.cap", "must be positive");
    if (h.K) require(*h.K > 0.0, "hitting.K", "must be positive");
    if (h.T) require(*h.T > 0.0, "hitting.T", "must be positive");

    const auto& k = c.calc;
    require(k.wald_runs >= 2 && k.escape_runs >= 2 && k.tail_runs >= 2, "calc.runs", "must be at least 2");
    require(k.dt > 0.0, "calc.dt", "must be positive");
    require(k.escape_dt > 0.0, "calc.escape_dt", "must be positive");
    require(k.arcsine_runs >= 1 && k.arcsine_n >= 1 && k.long_paths >= 1, "calc.arcsine_runs", "must be at least 1");
    require(k.long_horizon > 1.0, "calc.long_horizon", "must exceed 1");
    const auto& names = check_names();
    for (std::size_t i = 0; i < k.manifest.size(); ++i) {
        const std::string f = "calc.manifest[" + std::to_string(i) + "]";
        require(std::find(names.begin(), names.end(), k.manifest[i].check) != names.end(), f + ".check",
                "unknown check '" + k.manifest[i].check + "'");
        require(k.manifest[i].runs >= 2, f + ".runs", "must be at least 2");
        require(k.manifest[i].dt > 0.0 && k.manifest[i].cap > 0.0, f + ".dt", "dt and cap must be positive");
    }
}

RunConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        parse_fail(e.mark, e.msg);
    }
    RunConfig c;
    if (root.IsNull()) {
        validate_config(c);
        return c;
    }
    only_keys(root, "", {"command", "preset", "model", "seed", "threads", "out", "classify", "simulate", "convergence",
                         "cycle", "hitting", "calc"});
    read(root, "command", c.command, "config");
    read(root, "seed", c.seed, "config");
    read(root, "threads", c.threads, "config");
    read(root, "out", c.out, "config");
    if (root["model"]) parse_model(root["model"], c.model);
    if (root["preset"]) {
        if (!c.model.preset.empty()) throw ValidationError("preset: given twice (top level and model.preset)");
        read(root, "preset", c.model.preset, "config");
    }
    // One-dimensional models start at 1/2 unless told otherwise.
    if (model_dim(c.model) == 1) c.simulate.x0 = c.convergence.x0 = {0.5};
    if (const YAML::Node n = root["classify"]) {
        only_keys(n, "classify", {"tol_hyp"});
        read(n, "tol_hyp", c.classify.tol_hyp, "classify");
    }
    if (const YAML::Node n = root["simulate"]) {
        only_keys(n, "simulate", {"x0", "horizon", "dt", "stride"});
        parse_vec(n, "x0", c.simulate.x0, "simulate");
        read(n, "horizon", c.simulate.horizon, "simulate");
        read(n, "dt", c.simulate.dt, "simulate");
        read(n, "stride", c.simulate.stride, "simulate");
    }
    if (const YAML::Node n = root["convergence"]) {
        const std::string p = "convergence";
        only_keys(n, p, {"x0", "runs", "horizon", "dt", "trap_radius", "depth_threshold", "final_fraction"});
        auto& v = c.convergence;
        parse_vec(n, "x0", v.x0, p);
        read(n, "runs", v.runs, p);
        read(n, "horizon", v.horizon, p);
        read(n, "dt", v.dt, p);
        read(n, "trap_radius", v.trap_radius, p);
        read(n, "depth_threshold", v.depth_threshold, p);
        read(n, "final_fraction", v.final_fraction, p);
    }
    if (const YAML::Node n = root["cycle"]) {
        const std::string p = "cycle";
        only_keys(n, p, {"x0", "horizon", "dt", "stride", "seeds", "r", "r_prime", "r0", "warmup", "tol", "points"});
        auto& y = c.cycle;
        parse_vec(n, "x0", y.x0, p);
        read(n, "horizon", y.horizon, p);
        read(n, "dt", y.dt, p);
        read(n, "stride", y.stride, p);
        read(n, "seeds", y.seeds, p);
        read(n, "r", y.r, p);
        read(n, "r_prime", y.r_prime, p);
        read(n, "r0", y.r0, p);
        read(n, "warmup", y.warmup, p);
        read(n, "tol", y.tol, p);
        read(n, "points", y.points, p);
    }
    if (const YAML::Node n = root["hitting"]) {
        const std::string p = "hitting";
        only_keys(n, p, {"r", "log_eps", "log_delta", "log_r_prime", "runs", "dt", "K", "T", "bound_runs", "cap"});
        auto& h = c.hitting;
        read(n, "r", h.r, p);
        read(n, "log_eps", h.log_eps, p);
        read(n, "log_delta", h.log_delta, p);
        read(n, "log_r_prime", h.log_r_prime, p);
        read(n, "runs", h.runs, p);
        read(n, "dt", h.dt, p);
        read(n, "K", h.K, p);
        read(n, "T", h.T, p);
        read(n, "bound_runs", h.bound_runs, p);
        read(n, "cap", h.cap, p);
    }
    if (const YAML::Node n = root["calc"]) {
        const std::string p = "calc";
        only_keys(n, p, {"wald_runs", "escape_runs", "tail_runs", "dt", "escape_dt", "arcsine_runs", "arcsine_n", "long_paths",
                         "long_horizon", "manifest"});
        auto& k = c.calc;
        read(n, "wald_runs", k.wald_runs, p);
        read(n, "escape_runs", k.escape_runs, p);
        read(n, "tail_runs", k.tail_runs, p);
        read(n, "dt", k.dt, p);
        read(n, "escape_dt", k.escape_dt, p);
        read(n, "arcsine_runs", k.arcsine_runs, p);
        read(n, "arcsine_n", k.arcsine_n, p);
        read(n, "long_paths", k.long_paths, p);
        read(n, "long_horizon", k.long_horizon, p);
        if (const YAML::Node list = n["manifest"]) {
            if (!list.IsSequence()) parse_fail(list.Mark(), "calc.manifest: expected a list");
            for (std::size_t i = 0; i < list.size(); ++i)
                k.manifest.push_back(parse_case(list[i], "calc.manifest[" + std::to_string(i) + "]"));
        }
    }
    validate_config(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string emit_config(const RunConfig& c) {
    YAML::Node root;
    if (!c.command.empty()) root["command"] = c.command;
    YAML::Node m;
    const ModelConfig& mc = c.model;
    if (!mc.preset.empty()) {
        m["preset"] = mc.preset;
        if (mc.noise) m["noise"] = *mc.noise;
    } else {
        m["name"] = mc.name;
        m["dim"] = mc.dim;
        m["form"] = mc.form;
        m["unsafe_model"] = mc.unsafe_model;
        const char* pk[2] = {"p1", "p2"};
        const char* bk[2] = {"b1", "b2"};
        for (int i = 0; i < 2; ++i) {
            if (!mc.p[i].empty()) m[pk[i]] = table_node(mc.p[i]);
            if (!mc.b[i].empty()) m[bk[i]] = table_node(mc.b[i]);
        }
        for (int a = 0; a < 2; ++a)
            for (int i = 0; i < 2; ++i) {
                if (!mc.q[a][i].empty()) m[kQKeys[a][i]] = table_node(mc.q[a][i]);
                if (!mc.sigma[a][i].empty()) m[kSigmaKeys[a][i]] = table_node(mc.sigma[a][i]);
            }
    }
    root["model"] = m;
    root["seed"] = c.seed;
    root["threads"] = c.threads;
    if (!c.out.empty()) root["out"] = c.out;

    root["classify"]["tol_hyp"] = c.classify.tol_hyp;

    YAML::Node s;
    s["x0"] = vec_node(c.simulate.x0);
    s["horizon"] = c.simulate.horizon;
    s["dt"] = c.simulate.dt;
    s["stride"] = c.simulate.stride;
    root["simulate"] = s;

    const auto& v = c.convergence;
    YAML::Node cv;
    cv["x0"] = vec_node(v.x0);
    cv["runs"] = v.runs;
    cv["horizon"] = v.horizon;
    cv["dt"] = v.dt;
    cv["trap_radius"] = v.trap_radius;
    cv["depth_threshold"] = v.depth_threshold;
    cv["final_fraction"] = v.final_fraction;
    root["convergence"] = cv;

    const auto& y = c.cycle;
    YAML::Node cy;
    cy["x0"] = vec_node(y.x0);
    cy["horizon"] = y.horizon;
    cy["dt"] = y.dt;
    cy["stride"] = y.stride;
    cy["seeds"] = y.seeds;
    cy["r"] = y.r;
    cy["r_prime"] = y.r_prime;
    cy["r0"] = y.r0;
    cy["warmup"] = y.warmup;
    cy["tol"] = y.tol;
    cy["points"] = y.points;
    root["cycle"] = cy;

    const auto& h = c.hitting;
    YAML::Node hn;
    hn["r"] = h.r;
    hn["log_eps"] = h.log_eps;
    hn["log_delta"] = h.log_delta;
    if (h.log_r_prime) hn["log_r_prime"] = *h.log_r_prime;
    hn["runs"] = h.runs;
    hn["dt"] = h.dt;
    if (h.K) hn["K"] = *h.K;
    if (h.T) hn["T"] = *h.T;
    hn["bound_runs"] = h.bound_runs;
    hn["cap"] = h.cap;
    root["hitting"] = hn;

    const auto& k = c.calc;
    YAML::Node kn;
    kn["wald_runs"] = k.wald_runs;
    kn["escape_runs"] = k.escape_runs;
    kn["tail_runs"] = k.tail_runs;
    kn["dt"] = k.dt;
    kn["escape_dt"] = k.escape_dt;
    kn["arcsine_runs"] = k.arcsine_runs;
    kn["arcsine_n"] = k.arcsine_n;
    kn["long_paths"] = k.long_paths;
    kn["long_horizon"] = k.long_horizon;
    if (!k.manifest.empty()) {
        YAML::Node list(YAML::NodeType::Sequence);
        for (const auto& e : k.manifest) {
            YAML::Node n;
            n["check"] = e.check;
            n["member"] = to_string(e.member);
            n["nu"] = e.nu;
            n["A"] = e.A;
            n["a"] = e.a;
            n["z_upper"] = e.z_upper;
            n["z_lower"] = e.z_lower;
            n["kappa"] = e.kappa;
            n["b"] = e.b;
            n["L"] = e.L;
            n["r"] = e.r;
            n["runs"] = e.runs;
            n["dt"] = e.dt;
            n["cap"] = e.cap;
            n.SetStyle(YAML::EmitterStyle::Flow);
            list.push_back(n);
        }
        kn["manifest"] = list;
    }
    root["calc"] = kn;

    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << root;
    return std::string(out.c_str()) + "\n";
}

ModelSpec build_model(const ModelConfig& m) {
    if (!m.preset.empty()) return preset_model(m.preset, m.noise ? *m.noise : std::nan(""));
    auto field = [](const CoefTable& t) { return t.empty() ? Field() : Field(Poly2(t)); };
    auto poly = [](const CoefTable& t) { return t.empty() ? Poly2() : Poly2(t); };
    if (m.form == "raw") {
        if (!m.unsafe_model) throw ValidationError("model.unsafe_model: raw fields require unsafe_model: true");
        if (m.dim == 1) return ModelSpec::from_raw_1d(m.name, poly(m.b[0]), poly(m.sigma[0][0]), poly(m.sigma[1][0]));
        return ModelSpec::from_raw(m.name, {poly(m.b[0]), poly(m.b[1])},
                                   {{{poly(m.sigma[0][0]), poly(m.sigma[0][1])}, {poly(m.sigma[1][0]), poly(m.sigma[1][1])}}});
    }
    if (m.dim == 1) return ModelSpec::factored_1d(m.name, field(m.p[0]), field(m.q[0][0]), field(m.q[1][0]));
    ModelSpec::QTable q;
    for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 2; ++i) q[a][i] = field(m.q[a][i]);
    return ModelSpec::factored(m.name, field(m.p[0]), field(m.p[1]), q);
}

} // namespace degenflow
