#include "degenflow/calc_lab.hpp"

#include "degenflow/errors.hpp"
#include "degenflow/parallel.hpp"
#include "degenflow/rng.hpp"
#include "degenflow/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace degenflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Probability that a Brownian bridge with variance v between endpoints below
// the barrier (distances d0, d1 > 0) touches it.
double bridge_cross(double d0, double d1, double v) {
    if (d0 <= 0.0 || d1 <= 0.0) return 1.0;
    if (!(v > 0.0)) return 0.0;
    return std::exp(-2.0 * d0 * d1 / v);
}

struct Moments {
    double mean = 0.0, se = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    const double n = static_cast<double>(v.size());
    if (v.empty()) return m;
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return m;
}

double binomial_se(double p, std::size_t n) {
    const double q = std::max(p, 1.0 / static_cast<double>(n));
    return std::sqrt(q * (1.0 - std::min(q, 1.0)) / static_cast<double>(n));
}

std::string fmt(std::initializer_list<std::pair<const char*, double>> kv) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, v] : kv) {
        if (!first) os << ", ";
        os << k << "=" << v;
        first = false;
    }
    return os.str();
}

// Quadratic variation of M on [0, t].
double qv(const DriftMartingaleLab& lab, double t) {
    if (lab.member == Member::Brownian) return lab.A * t;
    const double full = std::floor(t / lab.period);
    const double pairs = std::floor(full / 2.0);
    double q = pairs * lab.period * (lab.A + lab.a);
    double rest = t - 2.0 * pairs * lab.period;
    const double first = std::min(rest, lab.period);
    q += lab.A * first;
    rest -= first;
    if (rest > 0.0) q += lab.a * rest;
    return q;
}

} // namespace

const char* to_string(Member m) { return m == Member::Brownian ? "brownian" : "alternating"; }

void DriftMartingaleLab::validate() const {
    if (!(A > 0.0) || !(a >= 0.0) || a > A) throw BadParameters("need A >= a >= 0 and A > 0");
    if (!(z_upper > 0.0) || !(z_lower < 0.0)) throw BadParameters("need z_lower < 0 < z_upper");
    if (!(dt > 0.0) || !(cap > 0.0)) throw BadParameters("dt and cap must be positive");
    if (member == Member::Alternating && !(period > 0.0)) throw BadParameters("period must be positive");
    if (runs == 0) throw BadParameters("runs must be positive");
}

double DriftMartingaleLab::rate(double t) const {
    if (member == Member::Brownian) return A;
    return static_cast<long long>(std::floor(t / period)) % 2 == 0 ? A : a;
}

double ExitSamples::fraction(int s, double by) const {
    if (tau.empty()) return 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < tau.size(); ++i)
        if (side[i] == s && (s == 0 || tau[i] <= by)) ++k;
    return static_cast<double>(k) / static_cast<double>(tau.size());
}

ExitSamples exit_statistics(const DriftMartingaleLab& lab) {
    lab.validate();
    ExitSamples out;
    out.tau.assign(lab.runs, kInf);
    out.side.assign(lab.runs, 0);
    out.sup_m.assign(lab.runs, 0.0);
    std::vector<std::uint8_t> capped(lab.runs, 0), drifted(lab.runs, 0);
    const bool lower = std::isfinite(lab.z_lower);
    // exp(-2 |nu| d / A) < exp(-40) beyond this distance below z_upper.
    const double give_up = (!lower && lab.nu < 0.0) ? 20.0 * lab.A / -lab.nu : kInf;
    const auto steps = static_cast<std::uint64_t>(std::ceil(lab.cap / lab.dt - 1e-9));

    parallel_for(
        lab.runs,
        [&](std::size_t i) {
            Rng rng(lab.seed, i);
            double z = 0.0, m = 0.0, sup = 0.0, q0 = 0.0;
            for (std::uint64_t k = 0; k < steps; ++k) {
                const double t0 = static_cast<double>(k) * lab.dt;
                const double t1 = std::min(lab.cap, t0 + lab.dt);
                const double q1 = qv(lab, t1);
                const double v = q1 - q0;
                q0 = q1;
                const double dm = std::sqrt(v) * rng.normal();
                const double z1 = z + lab.nu * (t1 - t0) + dm;
                const double m1 = m + dm;
                const double u_up = rng.uniform(), u_lo = rng.uniform();
                double hit = kInf;
                int s = 0;
                if (z1 >= lab.z_upper) {
                    hit = t0 + (t1 - t0) * (lab.z_upper - z) / (z1 - z);
                    s = 1;
                } else if (u_up < bridge_cross(lab.z_upper - z, lab.z_upper - z1, v)) {
                    hit = 0.5 * (t0 + t1);
                    s = 1;
                }
                if (lower && s == 0) {
                    if (z1 <= lab.z_lower) {
                        hit = t0 + (t1 - t0) * (z - lab.z_lower) / (z - z1);
                        s = -1;
                    } else if (u_lo < bridge_cross(z - lab.z_lower, z1 - lab.z_lower, v)) {
                        hit = 0.5 * (t0 + t1);
                        s = -1;
                    }
                }
                z = z1;
                m = m1;
                sup = std::max(sup, std::abs(m));
                if (s != 0) {
                    out.tau[i] = hit;
                    out.side[i] = s;
                    break;
                }
                if (lab.z_upper - z > give_up) {
                    drifted[i] = 1;
                    break;
                }
                if (k + 1 == steps) capped[i] = 1;
            }
            out.sup_m[i] = sup;
        },
        lab.threads);
    for (std::size_t i = 0; i < lab.runs; ++i) {
        out.capped += capped[i];
        out.drifted += drifted[i];
    }
    return out;
}

OracleRow wald_mean(DriftMartingaleLab lab) {
    if (!(lab.nu > 0.0)) throw BadParameters("wald_mean needs nu > 0");
    lab.z_lower = -kInf;
    const ExitSamples s = exit_statistics(lab);
    std::vector<double> tau;
    tau.reserve(s.tau.size());
    for (double t : s.tau) tau.push_back(std::isfinite(t) ? t : lab.cap);
    const Moments m = moments(tau);
    OracleRow row{"wald_mean", m.mean, m.se, lab.z_upper / lab.nu, false};
    row.pass = std::abs(row.estimate - row.oracle) <= 3.0 * row.se && s.capped == 0;
    return row;
}

std::vector<OracleRow> escape_probability(DriftMartingaleLab lab) {
    if (!(lab.nu < 0.0)) throw BadParameters("escape_probability needs nu < 0");
    lab.z_lower = -kInf;
    const ExitSamples s = exit_statistics(lab);
    const double oracle = std::exp(-2.0 * -lab.nu * lab.z_upper / lab.A);
    std::vector<OracleRow> rows;
    for (double by : {lab.cap, 0.5 * lab.cap}) {
        const double p = s.fraction(1, by);
        OracleRow r{by == lab.cap ? "escape_probability" : "escape_probability_half_cap", p,
                    binomial_se(p, lab.runs), oracle, false};
        r.pass = std::abs(p - oracle) <= 3.0 * r.se;
        rows.push_back(r);
    }
    return rows;
}

OracleRow gamblers_ruin(DriftMartingaleLab lab) {
    if (lab.nu != 0.0 || !std::isfinite(lab.z_lower)) throw BadParameters("gamblers_ruin needs nu = 0 and a finite z_lower");
    const ExitSamples s = exit_statistics(lab);
    const double p = s.fraction(1);
    OracleRow row{"gamblers_ruin", p, binomial_se(p, lab.runs), -lab.z_lower / (lab.z_upper - lab.z_lower), false};
    row.pass = std::abs(p - row.oracle) <= 3.0 * row.se && s.capped == 0;
    return row;
}

double reflection_tail(double A, double t, double z) {
    if (!(z > 0.0)) return 1.0;
    const double sd = std::sqrt(A * t);
    const double a = z / sd;
    if (a < 1.0) {
        // Eigenfunction series of P{sup |B| < z}.
        const double pi = 3.141592653589793;
        double stay = 0.0;
        for (int k = 0; k < 200; ++k) {
            const double j = 2.0 * k + 1.0;
            const double term = 4.0 / pi * std::exp(-j * j * pi * pi / (8.0 * a * a)) / j;
            stay += (k % 2 == 0 ? term : -term);
            if (term < 1e-18) break;
        }
        return 1.0 - stay;
    }
    double tail = 0.0;
    for (int k = 1; k < 200; ++k) {
        const double term = 4.0 * normal_tail((2.0 * k - 1.0) * a);
        tail += (k % 2 == 1 ? term : -term);
        if (term < 1e-300) break;
    }
    return tail;
}

TailCheck check_exponential_martingale(const DriftMartingaleLab& lab, double t, double z, std::size_t steps) {
    lab.validate();
    if (!(t > 0.0) || z < 0.0 || steps == 0) throw BadParameters("need t > 0, z >= 0, steps > 0");
    TailCheck c;
    c.t = t;
    c.z = z;
    c.bound = 2.0 * std::exp(-z * z / (2.0 * lab.A * t));
    c.reflection = lab.member == Member::Brownian ? reflection_tail(lab.A, t, z) : std::nan("");
    std::vector<std::uint8_t> hit(lab.runs, 0);
    const double h = t / static_cast<double>(steps);
    parallel_for(
        lab.runs,
        [&](std::size_t i) {
            Rng rng(lab.seed, i);
            double m = 0.0, q0 = 0.0;
            if (z == 0.0) {
                hit[i] = 1;
                return;
            }
            for (std::size_t k = 0; k < steps; ++k) {
                const double q1 = qv(lab, static_cast<double>(k + 1) * h);
                const double v = q1 - q0;
                q0 = q1;
                const double m1 = m + std::sqrt(v) * rng.normal();
                const double u1 = rng.uniform(), u2 = rng.uniform();
                if (std::abs(m1) > z || u1 < bridge_cross(z - m, z - m1, v) || u2 < bridge_cross(z + m, z + m1, v)) {
                    hit[i] = 1;
                    return;
                }
                m = m1;
            }
        },
        lab.threads);
    std::size_t k = 0;
    for (auto b : hit) k += b;
    c.tail = static_cast<double>(k) / static_cast<double>(lab.runs);
    c.se = binomial_se(c.tail, lab.runs);
    c.pass = c.tail - 3.0 * c.se <= c.bound;
    return c;
}

// ---------------------------------------------------------------------------

std::vector<StripExit> strip_exits(const StripProcess& p, double y0, double x0, double y_lo, double y_hi, double r,
                                   std::size_t runs, double dt, double cap, std::uint64_t seed,
                                   std::uint64_t stream0, int threads) {
    if (!(y_lo < y0 && y0 < y_hi) || !(x0 > 0.0 && x0 < r && r < 1.0) || !(dt > 0.0) || !(cap > 0.0))
        throw BadParameters("strip_exits: need y_lo < y0 < y_hi, 0 < x0 < r < 1, dt > 0, cap > 0");
    std::vector<StripExit> out(runs);
    const double w_r = std::log(r / (1.0 - r));
    const auto steps = static_cast<std::uint64_t>(std::ceil(cap / dt - 1e-9));
    parallel_for(
        runs,
        [&](std::size_t i) {
            Rng rng(seed, stream0 + i);
            double y = y0, w = std::log(x0 / (1.0 - x0));
            StripExit e{kInf, kInf};
            for (std::uint64_t k = 0; k < steps; ++k) {
                const double t0 = static_cast<double>(k) * dt;
                const double x = 1.0 / (1.0 + std::exp(-w));
                const double drift = y < -p.b ? p.nu_left : (y > p.b ? p.nu_right : p.nu_inner);
                const double s = p.s0 + p.s1 * x;
                const double v = s * s * dt;
                const double y1 = y + drift * dt + std::sqrt(v) * rng.normal();
                const double w1 = w + p.mu * dt + p.q * std::sqrt(dt) * rng.normal();
                const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
                if (!std::isfinite(e.eta) &&
                    (w1 >= w_r || u3 < bridge_cross(w_r - w, w_r - w1, p.q * p.q * dt)))
                    e.eta = t0 + 0.5 * dt;
                if (y1 >= y_hi || y1 <= y_lo || u1 < bridge_cross(y_hi - y, y_hi - y1, v) ||
                    u2 < bridge_cross(y - y_lo, y1 - y_lo, v)) {
                    e.tau = t0 + 0.5 * dt;
                    break;
                }
                y = y1;
                w = w1;
            }
            if (!(e.eta < e.tau)) e.eta = kInf;
            out[i] = e;
        },
        threads);
    return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names{"early_hit",   "late_hit",        "exp_moment",
                                                "mean_linear", "upper_first",     "drift_wins",
                                                "escape_right", "strip_tail",     "strip_exp_exit",
                                                "strip_linear_opposed", "strip_linear_same"};
    return names;
}

std::vector<LemmaCase> default_manifest() {
    std::vector<LemmaCase> out;
    for (Member mem : {Member::Brownian, Member::Alternating}) {
        LemmaCase c;
        c.member = mem;
        c.runs = 4000;
        c.dt = 1e-2;

        c.check = "early_hit";
        c.nu = 1.0, c.A = 1.0, c.kappa = 0.5, c.z_upper = 10.0, c.cap = 50.0;
        out.push_back(c);
        c.check = "late_hit";
        out.push_back(c);
        c.check = "mean_linear";
        c.z_upper = 2.0, c.cap = 100.0;
        out.push_back(c);
        c.check = "exp_moment";
        c.z_upper = 2.0, c.cap = 100.0, c.runs = 2000;
        out.push_back(c);
        c.runs = 4000;
        c.check = "upper_first";
        c.nu = 0.5, c.z_upper = 1.0, c.z_lower = -1.0, c.cap = 100.0;
        out.push_back(c);
        c.check = "drift_wins";
        c.nu = -1.0, c.z_upper = 1.0, c.z_lower = -kInf, c.cap = 100.0;
        out.push_back(c);
        c.check = "escape_right";
        c.nu = -1.0, c.z_upper = 1.0, c.z_lower = -1.0, c.cap = 2.0, c.a = mem == Member::Brownian ? 1.0 : 0.25;
        out.push_back(c);
        c.a = 0.25;
    }
    LemmaCase s;
    s.nu = 1.0, s.b = 0.5, s.r = 0.1, s.runs = 2000, s.dt = 1e-2;
    s.check = "strip_tail", s.L = 1.0, s.cap = 400.0;
    out.push_back(s);
    s.check = "strip_exp_exit", s.L = 1.0, s.cap = 200.0;
    out.push_back(s);
    s.check = "strip_linear_opposed", s.L = 2.0, s.cap = 400.0;
    out.push_back(s);
    s.check = "strip_linear_same", s.L = 2.0, s.cap = 400.0;
    out.push_back(s);
    return out;
}

namespace {

DriftMartingaleLab lab_of(const LemmaCase& c, std::uint64_t seed, int threads) {
    DriftMartingaleLab lab;
    lab.nu = c.nu;
    lab.A = c.A;
    lab.a = c.a;
    lab.z_upper = c.z_upper;
    lab.z_lower = c.z_lower;
    lab.member = c.member;
    lab.runs = c.runs;
    lab.dt = c.dt;
    lab.cap = c.cap;
    lab.seed = seed;
    lab.threads = threads;
    return lab;
}

double count_frac(const std::vector<double>& v, double above) {
    std::size_t k = 0;
    for (double x : v)
        if (x > above) ++k;
    return static_cast<double>(k) / static_cast<double>(v.size());
}

// Order-statistic bounds on the p-quantile, 3 SE of the binomial count.
double quantile_at(std::vector<double> v, double p, double shift_sd) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    const double k = n * p + shift_sd * std::sqrt(n * p * (1.0 - p));
    const auto idx = static_cast<std::size_t>(std::clamp(std::floor(k), 0.0, n - 1.0));
    return v[idx];
}

LemmaRow strip_row(const LemmaCase& c, std::uint64_t seed, int threads) {
    LemmaRow row;
    row.check = c.check;
    row.params = fmt({{"nu", c.nu}, {"b", c.b}, {"L", c.L}, {"r", c.r}, {"runs", double(c.runs)}, {"dt", c.dt}});
    StripProcess p;
    p.b = c.b;
    const double x0 = 0.5 * c.r;
    if (c.check == "strip_tail") {
        p.nu_left = c.nu, p.nu_right = -c.nu;
        const auto ex = strip_exits(p, c.b, x0, -(c.b + c.L), c.b + c.L, c.r, c.runs, c.dt, c.cap, seed, 0, threads);
        std::vector<double> tau;
        for (const auto& e : ex) tau.push_back(e.tau);
        const double t1 = quantile_at(tau, 0.5, 0.0);
        std::vector<double> ratio, se;
        for (double t : {t1, 2.0 * t1}) {
            const double p1 = count_frac(tau, t), p2 = count_frac(tau, 2.0 * t);
            const double q = p1 > 0.0 ? p2 / p1 : 1.0;
            ratio.push_back(q);
            se.push_back(p1 > 0.0 ? std::sqrt(q * (1.0 - q) / (p1 * static_cast<double>(c.runs))) : 1.0);
        }
        row.statistic = ratio[1];
        row.bound = ratio[0];
        row.se = std::hypot(se[0], se[1]);
        for (double t : tau) row.capped += std::isfinite(t) ? 0 : 1;
        row.pass = ratio[0] + 3.0 * se[0] < 1.0 && ratio[1] + 3.0 * se[1] < 1.0 && ratio[1] - 3.0 * row.se <= ratio[0];
        std::ostringstream os;
        os << "P(tau>2t)/P(tau>t) at t=" << t1 << " and " << 2 * t1;
        row.note = os.str();
        return row;
    }
    const double m1 = c.b + c.L, m2 = c.b + 2.0 * c.L;
    if (c.check == "strip_exp_exit") {
        p.nu_left = c.nu, p.nu_right = -c.nu;
        std::vector<double> q;
        std::size_t stream = 0;
        for (double m : {m1, m2}) {
            const auto ex = strip_exits(p, c.b, x0, -m, m, c.r, c.runs, c.dt, c.cap, seed, stream, threads);
            stream += c.runs;
            std::vector<double> t;
            for (const auto& e : ex) {
                t.push_back(e.tau < e.eta ? e.tau : kInf);
                row.capped += std::isfinite(e.tau) ? 0 : 1;
            }
            q.push_back(quantile_at(t, 0.25, m == m1 ? 3.0 : -3.0));
        }
        // Linear growth keeps q/m flat or falling; exponential order raises it.
        row.statistic = q[1] / m2;
        row.bound = q[0] / m1;
        row.pass = row.statistic > row.bound;
        row.note = "lower quartile of tau on {tau < eta} over barrier distance; 3-SE order statistics";
        return row;
    }
    if (c.check != "strip_linear_opposed" && c.check != "strip_linear_same")
        throw BadParameters("unknown check: " + c.check);
    if (c.check == "strip_linear_opposed")
        p.nu_left = -c.nu, p.nu_right = c.nu;
    else
        p.nu_left = c.nu, p.nu_right = c.nu;
    // Doubling exponent of E zeta: 1 for linear order, 2 for diffusive order.
    const double d1 = c.b + c.L, d2 = 2.0 * d1;
    std::vector<double> E, rel;
    std::size_t stream = 0;
    for (double m : {d1, d2}) {
        const double lo = c.check == "strip_linear_opposed" ? -4.0 * m : -d1;
        const auto ex = strip_exits(p, -c.b, x0, lo, m, c.r, c.runs, c.dt, c.cap, seed, stream, threads);
        stream += c.runs;
        std::vector<double> z;
        for (const auto& e : ex) {
            const double v = e.zeta();
            row.capped += std::isfinite(v) ? 0 : 1;
            z.push_back(std::isfinite(v) ? v : c.cap);
        }
        const Moments mo = moments(z);
        E.push_back(mo.mean);
        rel.push_back(mo.se / mo.mean);
    }
    row.statistic = std::log2(E[1] / E[0]);
    row.se = std::hypot(rel[0], rel[1]) / std::log(2.0);
    row.bound = 1.5;
    row.pass = row.statistic - 3.0 * row.se <= row.bound && row.capped == 0;
    row.note = "log2 E zeta(2d) / E zeta(d), d = barrier distance";
    return row;
}

} // namespace

LemmaRow run_lemma_case(const LemmaCase& c, std::uint64_t seed, int threads) {
    if (c.check.rfind("strip_", 0) == 0) return strip_row(c, seed, threads);
    LemmaRow row;
    row.check = c.check + "/" + to_string(c.member);
    row.params = fmt({{"nu", c.nu}, {"A", c.A}, {"a", c.a}, {"z*", c.z_upper}, {"z_*", c.z_lower},
                      {"kappa", c.kappa}, {"runs", double(c.runs)}, {"dt", c.dt}, {"cap", c.cap}});
    DriftMartingaleLab lab = lab_of(c, seed, threads);
    if (c.member == Member::Brownian) lab.a = c.A;
    const auto n = static_cast<double>(c.runs);

    if (c.check == "early_hit" || c.check == "late_hit") {
        if (!(c.nu > 0.0) || !(c.kappa > 0.0 && c.kappa < 1.0)) throw BadParameters(c.check + ": need nu > 0, 0 < kappa < 1");
        lab.z_lower = -kInf;
        const bool early = c.check == "early_hit";
        const double t = early ? c.kappa * c.z_upper / c.nu : c.z_upper / (c.kappa * c.nu);
        lab.cap = std::max(lab.cap, 2.0 * t);
        const ExitSamples s = exit_statistics(lab);
        const double p_early = s.fraction(1, t);
        row.statistic = early ? p_early : 1.0 - p_early;
        row.se = binomial_se(row.statistic, c.runs);
        row.bound = 2.0 * std::exp(-c.nu * (1.0 - c.kappa) * (1.0 - c.kappa) * c.z_upper / (2.0 * c.A * c.kappa));
        row.capped = s.capped;
        row.pass = row.statistic - 3.0 * row.se <= row.bound;
        row.note = early ? "P(tau* <= kappa z*/nu)" : "P(tau* > z*/(kappa nu))";
        return row;
    }
    if (c.check == "mean_linear") {
        if (!(c.nu > 0.0)) throw BadParameters("mean_linear: need nu > 0");
        lab.z_lower = -kInf;
        const ExitSamples s = exit_statistics(lab);
        std::vector<double> tau;
        for (double t : s.tau) tau.push_back(std::isfinite(t) ? t : lab.cap);
        const Moments m = moments(tau);
        row.statistic = m.mean;
        row.se = m.se;
        row.bound = c.z_upper / c.nu;
        row.capped = s.capped;
        row.pass = row.statistic - 3.0 * row.se <= row.bound && s.capped == 0;
        row.note = "E tau* against z*/nu";
        return row;
    }
    if (c.check == "exp_moment") {
        if (!(c.nu > 0.0)) throw BadParameters("exp_moment: need nu > 0");
        lab.z_lower = -kInf;
        std::vector<double> zs;
        std::vector<std::vector<double>> taus;
        for (double f : {0.25, 0.5, 1.0, 2.0}) {
            DriftMartingaleLab l = lab;
            l.z_upper = f * c.z_upper;
            l.seed = seed + static_cast<std::uint64_t>(zs.size()) * 7919u;
            const ExitSamples s = exit_statistics(l);
            row.capped += s.capped;
            std::vector<double> t;
            for (double x : s.tau) t.push_back(std::isfinite(x) ? x : l.cap);
            zs.push_back(l.z_upper);
            taus.push_back(std::move(t));
        }
        // Worst margin bound - (mean + 3 SE) of E exp(alpha tau*) over the z* grid.
        auto margin = [&](double alpha) {
            double worst = kInf;
            for (std::size_t j = 0; j < zs.size(); ++j) {
                std::vector<double> e;
                for (double t : taus[j]) e.push_back(std::exp(alpha * t));
                const Moments m = moments(e);
                worst = std::min(worst, std::exp(2.0 * alpha * zs[j] / c.nu) + 2.0 - m.mean - 3.0 * m.se);
            }
            return worst;
        };
        double lo = 0.0, hi = c.nu * c.nu / (4.0 * c.A);
        if (margin(hi) >= 0.0) {
            lo = hi;
        } else {
            for (int it = 0; it < 40; ++it) {
                const double mid = 0.5 * (lo + hi);
                (margin(mid) >= 0.0 ? lo : hi) = mid;
            }
        }
        row.statistic = lo;
        row.bound = 0.0;
        row.pass = lo > 0.0 && row.capped == 0;
        std::ostringstream os;
        os << "alpha from bisection; margin " << margin(lo) << " over z* in {" << zs[0] << ".." << zs.back() << "}";
        row.note = os.str();
        return row;
    }
    if (c.check == "upper_first") {
        if (!(c.nu > 0.0) || !(c.z_lower <= -c.z_upper)) throw BadParameters("upper_first: need nu > 0, z_* <= -z*");
        const ExitSamples s = exit_statistics(lab);
        row.statistic = s.fraction(1);
        row.se = binomial_se(row.statistic, c.runs);
        row.bound = 0.5;
        row.capped = s.capped;
        row.pass = row.statistic - 3.0 * row.se > 0.5;
        row.note = "P(tau = tau*) > 1/2";
        return row;
    }
    if (c.check == "drift_wins") {
        if (!(c.nu < 0.0)) throw BadParameters("drift_wins: need nu < 0");
        lab.z_lower = -kInf;
        const ExitSamples s1 = exit_statistics(lab);
        DriftMartingaleLab l2 = lab;
        l2.z_upper = 2.0 * c.z_upper;
        l2.seed = seed + 104729u;
        const ExitSamples s2 = exit_statistics(l2);
        auto rate = [&](double by) {
            const double p1 = s1.fraction(1, by), p2 = s2.fraction(1, by);
            if (p1 <= 0.0 || p2 <= 0.0) return std::make_pair(kInf, 0.0);
            return std::make_pair(std::log(p1 / p2) / c.z_upper,
                                  std::sqrt((1.0 - p1) / (p1 * n) + (1.0 - p2) / (p2 * n)) / c.z_upper);
        };
        const auto [r, se] = rate(lab.cap);
        row.statistic = r;
        row.se = se;
        row.bound = 0.0;
        row.capped = s1.capped + s2.capped;
        row.cap_sensitivity = std::isfinite(r) ? rate(0.5 * lab.cap).first - r : 0.0;
        row.pass = r - 3.0 * se > 0.0;
        std::ostringstream os;
        os << "decay rate of P(tau* < inf) in z* from two points";
        if (c.member == Member::Brownian) os << "; exact " << 2.0 * -c.nu / c.A;
        row.note = os.str();
        return row;
    }
    if (c.check == "escape_right") {
        if (!std::isfinite(c.z_lower) || !(lab.a > 0.0)) throw BadParameters("escape_right: need finite z_* and a > 0");
        lab.cap = std::max(lab.cap, 1.0);
        const ExitSamples s = exit_statistics(lab);
        row.statistic = s.fraction(1, 1.0);
        row.se = binomial_se(row.statistic, c.runs);
        row.bound = 0.0;
        row.pass = row.statistic - 3.0 * row.se > 0.0;
        row.note = "P(tau = tau* <= 1) > 0";
        return row;
    }
    throw BadParameters("unknown check: " + c.check);
}

std::vector<LemmaRow> check_exit_bounds_suite(const std::vector<LemmaCase>& manifest, std::uint64_t seed, int threads) {
    std::vector<LemmaRow> rows;
    for (std::size_t i = 0; i < manifest.size(); ++i)
        rows.push_back(run_lemma_case(manifest[i], seed + 1000003u * i, threads));
    return rows;
}

// ---------------------------------------------------------------------------

double arcsine_cdf(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return 2.0 / 3.141592653589793 * std::asin(std::sqrt(u));
}

double ks_arcsine(std::vector<double> sample) {
    if (sample.empty()) throw BadParameters("ks_arcsine: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = arcsine_cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

ArcsineReport arcsine_scenario(const ModelSpec& model, const ArcsineOptions& opt) {
    if (opt.runs == 0 || opt.n == 0 || opt.long_paths == 0 || !(opt.long_dt > 0.0) || !(opt.long_horizon > opt.window_start))
        throw BadParameters("arcsine_scenario: bad options");
    ArcsineReport rep;
    rep.h.assign(opt.runs, 0.0);
    const double nn = static_cast<double>(opt.n);
    parallel_for(
        opt.runs,
        [&](std::size_t i) {
            Rng rng(opt.seed, i);
            std::size_t pos = 0;
            if (opt.use_simulator) {
                State s = state_from_x(model, {0.5, 0.0});
                // Scale invariance: H_n does not depend on the step length.
                const double dt = 0.01;
                for (std::size_t k = 0; k < opt.n; ++k) {
                    advance(model, s, dt, rng);
                    if (s.c[0].y > 0.0) ++pos;
                }
            } else {
                double y = 0.0;
                for (std::size_t k = 0; k < opt.n; ++k) {
                    y += rng.normal();
                    if (y > 0.0) ++pos;
                }
            }
            rep.h[i] = static_cast<double>(pos) / nn;
        },
        opt.threads);
    rep.ks = ks_arcsine(rep.h);

    rep.paths.resize(opt.long_paths);
    const auto steps = static_cast<std::uint64_t>(std::ceil(opt.long_horizon / opt.long_dt));
    const double sd = std::sqrt(opt.long_dt);
    parallel_for(
        opt.long_paths,
        [&](std::size_t p) {
            Rng rng(opt.seed, opt.runs + p);
            LongPath lp;
            double y = 0.0, occ = 0.0;
            for (std::uint64_t k = 1; k <= steps; ++k) {
                y += sd * rng.normal();
                if (y > 0.0) occ += opt.long_dt;
                const double t = static_cast<double>(k) * opt.long_dt;
                if (t < opt.window_start) continue;
                const double h = occ / t;
                if (h > lp.max_running) lp.max_running = h, lp.t_max = t;
                if (h < lp.min_running) lp.min_running = h, lp.t_min = t;
            }
            lp.high_seen = lp.max_running > 1.0 - opt.eps;
            lp.low_seen = lp.min_running < opt.eps;
            rep.paths[p] = lp;
        },
        opt.threads);
    for (const auto& lp : rep.paths) rep.both_seen += lp.both();
    return rep;
}

} // namespace degenflow
