#pragma once

#include "degenflow/classifier.hpp"
#include "degenflow/simulate.hpp"

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace degenflow {

/// Occupation measure of a stretch of trajectory on a regular grid. Time
/// weights are trapezoidal: each step gives half its length to either end.
struct EmpiricalMeasure {
    int dim = 2;
    int bins = 0;           ///< per axis
    double t0 = 0.0, t1 = 0.0;
    double r0 = 0.05;
    std::vector<double> w;  ///< bins^dim weights, row-major in (x1, x2)
    /// Mass of the corner boxes U_{r0}^k (1-d: [0, r0) and (1 - r0, 1]).
    std::array<double, 4> vertex_mass{};
    /// Mass of the edge strips away from the corners, x2^k < r0 < x1^k < 1 - r0.
    std::array<double, 4> edge_mass{};

    double span() const { return t1 - t0; }
    double total() const;
    double& at(int i, int j = 0) { return w[static_cast<std::size_t>(i * (dim == 2 ? bins : 1) + j)]; }
    double at(int i, int j = 0) const { return w[static_cast<std::size_t>(i * (dim == 2 ? bins : 1) + j)]; }
    double l1(const EmpiricalMeasure& o) const;
    /// Time-weighted average of two measures on the same grid.
    static EmpiricalMeasure combine(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
};

/// Measure of samples [begin, end) of the trajectory.
EmpiricalMeasure empirical_measure(const Trajectory& tr, int bins, double r0 = 0.05, std::size_t begin = 0,
                                   std::size_t end = std::numeric_limits<std::size_t>::max());

// ---------------------------------------------------------------------------

struct ConvergenceOptions {
    std::size_t runs = 2000;
    double horizon = 100.0;
    double dt = 0.01;
    double trap_radius = 0.05;
    /// The run must also end with log-depth below this (in the trap's chart).
    double depth_threshold = -8.0;
    double final_fraction = 0.1;
    std::uint64_t seed = 1;
    int threads = 0;
};

struct ConvergenceEstimate {
    std::vector<std::string> names;  ///< attractor names ("O0", "E1", or "0", "1" in 1-d)
    std::vector<std::size_t> counts;
    std::vector<double> p, se;
    std::size_t runs = 0;
    std::size_t unresolved = 0;
    double unresolved_fraction = 0.0;
    ConvergenceOptions options;
    /// Per run: index into names, or -1 when unresolved.
    std::vector<int> outcome;
    /// Per run: time fraction spent within trap_radius of the outcome's target (corner boxes only).
    std::vector<double> near_fraction;
    double probability(const std::string& name) const;
    double std_error(const std::string& name) const;
};

/// Scenario I only (ScenarioMismatch otherwise).
ConvergenceEstimate estimate_convergence(const ModelSpec& m, const Vec2& x0, const Scenario& s,
                                         const ConvergenceOptions& opt = {});
/// One-dimensional models with at least one sink.
ConvergenceEstimate estimate_convergence(const ModelSpec& m, double x0, const Scenario1d& s,
                                         const ConvergenceOptions& opt = {});

// ---------------------------------------------------------------------------

struct CyclingRecord {
    double r = 0.05, r_prime = 0.01;
    int orientation = 1;
    double eta0 = std::numeric_limits<double>::quiet_NaN();  ///< first entry into the r' strips
    std::vector<double> eta;
    std::vector<int> label;
    std::vector<double> depth;        ///< Y_2^{K_n}(eta_n) (negative)
    std::vector<double> corner_time;  ///< time in U_r^{K_n + 1} during [eta_n, eta_{n+1}]
    std::size_t size() const { return eta.size(); }
};

/// Epoch times at crossings of gamma_{2,r}^k = {x1^k = r, x2^k < r}, switching
/// label at each crossing of a different segment. Negative orientation is
/// handled by swapping the axes (which reverses the direction of the cycle).
CyclingRecord detect_cycling(const Trajectory& tr, double r, double r_prime, int orientation = 1);

struct CyclingStats {
    std::size_t epochs = 0, late = 0;
    double advance_exceptions = 0.0;  ///< fraction of late steps with K_{n+1} != K_n + 1
    double ratio_ok = 0.0;            ///< fraction of late epochs with depth ratio within tol of rho
    std::vector<double> ratios;       ///< |Y(eta_{n+1})| / |Y(eta_n)|, all epochs
};

/// Statistics after dropping the first warmup fraction of epochs. rho is by vertex.
CyclingStats cycling_stats(const CyclingRecord& rec, const std::array<double, 4>& rho, double warmup = 0.5,
                           double tol = 0.2);

// ---------------------------------------------------------------------------

struct OccupationSeries {
    std::vector<double> t, fraction;
};

/// Running fraction of time in the union of the corner boxes U_{r0}^k.
OccupationSeries corner_occupation(const Trajectory& tr, double r0, std::size_t points = 200);
/// Fraction of time in the corner boxes over the last `window` fraction of the run.
double window_corner_fraction(const Trajectory& tr, double r0, double window = 0.1);

struct GammaSeries {
    std::vector<double> t, distance, non_corner;
    std::vector<std::array<double, 4>> vertex_mass;  ///< renormalized
};

/// l1 distance of a probability 4-vector to the union of the four segments.
double gamma_distance(const std::array<double, 4>& v, const LimitQuadrilateral& q);
/// Distance of the running vertex-mass vector to Gamma at `points` log-spaced times.
GammaSeries gamma_distance(const Trajectory& tr, const LimitQuadrilateral& q, double r0 = 0.05, std::size_t points = 200);
/// Whether the running median (window w) of the series decreases from its first to its last value.
bool running_median_decreases(const std::vector<double>& v, std::size_t window = 21);

// ---------------------------------------------------------------------------

struct CycleRunOptions {
    Vec2 x0{0.5, 0.5};
    double horizon = 2e4;
    double dt = 0.02;
    std::size_t stride = 5;
    double r = 0.05, r_prime = 0.01;
    double r0 = 0.05;     ///< corner boxes for occupation and vertex mass
    double warmup = 0.5;  ///< fraction of epochs dropped by cycling_stats
    double tol = 0.2;
    double window = 0.1;  ///< final window for the corner fraction
    std::size_t points = 200;
    std::size_t median_window = 21;
};

/// One long run of a stable cycle and every statistic of its epochs.
struct CycleRun {
    std::uint64_t seed = 0;
    CyclingRecord record;
    CyclingStats stats;
    double window_fraction = 0.0;
    GammaSeries gamma;
    bool median_decreases = false;
    double final_distance = 0.0;
};

/// Throws ScenarioMismatch unless s is a stable cycle.
CycleRun analyze_cycle_run(const ModelSpec& m, const Scenario& s, const CycleRunOptions& opt, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct InvarianceDefect {
    double defect = 0.0;       ///< distance between nu and its push-forward sample
    double noise_floor = 0.0;  ///< same distance for a fresh sample of nu itself
    std::size_t samples = 0;
};

/// Pushes `samples` draws of nu forward by time s and compares histograms by
/// the largest marginal 1-Wasserstein distance (a lower bound on W1, which in
/// turn bounds the bounded-Lipschitz distance).
InvarianceDefect invariance_defect(const EmpiricalMeasure& nu, const ModelSpec& m, double s, std::size_t samples = 20000,
                                   double dt = 1e-3, std::uint64_t seed = 1);

/// max over axes of the marginal W1 distance between two measures on the same grid.
double marginal_w1(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

} // namespace degenflow
