#pragma once

#include "degenflow/model_spec.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace degenflow {

/// Martingale part of Z(t) = nu t + M(t). Brownian: <M>' = A throughout.
/// Alternating: <M>' switches between a and A every `period` time units.
enum class Member { Brownian, Alternating };
const char* to_string(Member m);

struct DriftMartingaleLab {
    double nu = 1.0;
    double A = 1.0;
    double a = 0.0;  ///< lower rate of the alternating member
    double z_upper = 1.0;
    double z_lower = -std::numeric_limits<double>::infinity();  ///< -inf: no lower barrier
    Member member = Member::Brownian;
    double period = 0.25;
    std::size_t runs = 10000;
    double dt = 1e-3;
    double cap = 100.0;  ///< hard horizon
    std::uint64_t seed = 1;
    int threads = 0;

    /// Throws BadParameters unless A >= a >= 0, A > 0, z_lower < 0 < z_upper, dt > 0, cap > 0.
    void validate() const;
    /// <M>' at time t.
    double rate(double t) const;
};

/// One record per path. Crossings between grid points are detected with the
/// Brownian-bridge crossing probability, so barrier hits are not missed.
struct ExitSamples {
    std::vector<double> tau;   ///< first exit time; +inf when none before the cap
    std::vector<int> side;     ///< +1 upper, -1 lower, 0 none (capped or drifted away)
    std::vector<double> sup_m; ///< sup |M| over the simulated stretch
    std::size_t capped = 0;    ///< paths stopped by the cap
    /// Paths stopped because the chance of reaching z_upper from their level
    /// fell below exp(-40) (nu < 0 and no lower barrier).
    std::size_t drifted = 0;

    double fraction(int s, double by = std::numeric_limits<double>::infinity()) const;
};

ExitSamples exit_statistics(const DriftMartingaleLab& lab);

struct OracleRow {
    std::string name;
    double estimate = 0.0, se = 0.0;
    double oracle = 0.0;
    bool pass = false;  ///< |estimate - oracle| <= 3 SE (two-sided)
};

/// Wald mean z*/nu (nu > 0, no lower barrier).
OracleRow wald_mean(DriftMartingaleLab lab);
/// P{tau* < inf} = exp(-2 |nu| z* / A) for nu < 0 and no lower barrier.
/// The second row repeats the estimate with the cap halved.
std::vector<OracleRow> escape_probability(DriftMartingaleLab lab);
/// nu = 0: P{upper first} = |z_*| / (z* + |z_*|).
OracleRow gamblers_ruin(DriftMartingaleLab lab);

struct TailCheck {
    double t = 0.0, z = 0.0;
    double tail = 0.0, se = 0.0;  ///< P{M*(t) > z}
    double bound = 0.0;           ///< 2 exp(-z^2 / (2 A t))
    double reflection = 0.0;      ///< exact value for the Brownian member
    bool pass = false;            ///< tail - 3 SE <= bound
};

/// Tail of M*(t) = sup_{s <= t} |M(s)| against the exponential martingale bound.
TailCheck check_exponential_martingale(const DriftMartingaleLab& lab, double t, double z, std::size_t steps = 1000);

/// Two-sided reflection: P{sup_{s<=t} |B(s)| > z} for B with variance rate A,
/// computed from the alternating series.
double reflection_tail(double A, double t, double z);

// ---------------------------------------------------------------------------

/// One entry of the exit-time manifest. Unused fields are ignored by a check.
struct LemmaCase {
    std::string check;  ///< see check_names()
    Member member = Member::Brownian;
    double nu = 1.0, A = 1.0, a = 0.25;
    double z_upper = 1.0, z_lower = -std::numeric_limits<double>::infinity();
    double kappa = 0.5;
    double b = 0.5;      ///< half-width of the inner interval I (strip checks)
    double L = 1.0;      ///< barrier distance scale (strip checks)
    double r = 0.1;      ///< strip height (strip checks)
    std::size_t runs = 4000;
    double dt = 1e-2;
    double cap = 200.0;
    bool operator==(const LemmaCase&) const = default;
};

/// early_hit, late_hit, exp_moment, mean_linear, upper_first, drift_wins,
/// escape_right, strip_tail, strip_exp_exit, strip_linear_opposed, strip_linear_same.
const std::vector<std::string>& check_names();

struct LemmaRow {
    std::string check;
    std::string params;
    double statistic = 0.0, se = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::size_t capped = 0;
    double cap_sensitivity = 0.0;  ///< change of the statistic when the cap is halved
    std::string note;
};

/// Default parameter tables, each 1-d check for both members.
std::vector<LemmaCase> default_manifest();

LemmaRow run_lemma_case(const LemmaCase& c, std::uint64_t seed, int threads = 0);
/// Rows in manifest order; failures are rows with pass = false.
std::vector<LemmaRow> check_exit_bounds_suite(const std::vector<LemmaCase>& manifest, std::uint64_t seed,
                                              int threads = 0);

// ---------------------------------------------------------------------------

/// Chart-form process near an edge: Y1 with drift l1(Y1, X2) and noise s(X2);
/// logit X2 is a Brownian motion with drift mu and rate q^2.
struct StripProcess {
    double b = 0.5;
    double nu_left = 1.0;   ///< drift for y < -b
    double nu_right = 1.0;  ///< drift for y > b
    double nu_inner = 0.0;  ///< drift on [-b, b]
    double s0 = 1.0, s1 = 0.5;  ///< noise of Y1 is s0 + s1 X2
    double mu = -1.0, q = 0.5;
};

struct StripExit {
    double tau = 0.0;   ///< exit of Y1 from (y_lo, y_hi), +inf if capped
    double eta = 0.0;   ///< first time X2 >= r, +inf if not before the exit or cap
    double zeta() const { return tau < eta ? tau : eta; }
};

std::vector<StripExit> strip_exits(const StripProcess& p, double y0, double x0, double y_lo, double y_hi, double r,
                                   std::size_t runs, double dt, double cap, std::uint64_t seed,
                                   std::uint64_t stream0 = 0, int threads = 0);

// ---------------------------------------------------------------------------

/// (2/pi) arcsin(sqrt(u)) on [0, 1].
double arcsine_cdf(double u);
/// Kolmogorov-Smirnov distance of a sample to the arcsine law.
double ks_arcsine(std::vector<double> sample);

struct ArcsineOptions {
    std::size_t runs = 10000;
    std::size_t n = 10000;      ///< steps per run for H_n
    /// Simulate the preset through the integrator; otherwise logit X is drawn
    /// as an exact Brownian motion.
    bool use_simulator = false;
    std::size_t long_paths = 8;  ///< independent single paths for the window check
    double long_horizon = 1e6;
    double long_dt = 0.1;
    double window_start = 1.0;  ///< running fractions are read from this time on
    double eps = 0.05;
    std::uint64_t seed = 1;
    int threads = 0;
};

/// Extremes of the running occupation fraction along one long path.
struct LongPath {
    double max_running = 0.0, min_running = 1.0;
    double t_max = 0.0, t_min = 0.0;           ///< where they occur
    bool high_seen = false, low_seen = false;  ///< > 1 - eps, < eps
    bool both() const { return high_seen && low_seen; }
};

struct ArcsineReport {
    std::vector<double> h;  ///< H_n per run
    double ks = 0.0;
    std::vector<LongPath> paths;
    std::size_t both_seen = 0;  ///< paths showing both kinds of window
};

/// Occupation fraction of {X > 1/2} for the arcsine preset started at 1/2.
ArcsineReport arcsine_scenario(const ModelSpec& arcsine_model, const ArcsineOptions& opt = {});

} // namespace degenflow
