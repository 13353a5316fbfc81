#pragma once

#include "degenflow/classifier.hpp"
#include "degenflow/lyapunov.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace degenflow {

/// Size parameters of the region construction. eps, delta and r' are given by
/// their logarithms since useful values underflow doubles.
struct GeometryParams {
    double r = 0.05;
    double log_eps = -2.0;
    double log_delta = -20.0;
    /// NaN selects the largest admissible value, ln(delta eps^2 r).
    double log_r_prime = std::numeric_limits<double>::quiet_NaN();
};

enum class EdgeRole { Direct, Indirect, Attracting };
const char* to_string(EdgeRole e);

enum class Region { R, Inner, Outer, Q };  ///< Outer means Sigma_o minus Sigma_i
const char* to_string(Region r);

/// Sets R, Sigma_i within Sigma_o, and Q around the boundary of the square,
/// described in chart coordinates. Corner boxes and edge boxes are given in
/// the local chart of their vertex or edge.
struct RegionGeometry {
    double r = 0.05, log_r = 0.0, log_eps = 0.0, log_delta = 0.0, log_r_prime = 0.0;
    std::array<bool, 4> vertex_attracting{};
    std::array<EdgeRole, 4> edge{};
    std::array<std::array<double, 2>, 4> vertex_rates{};  ///< (lambda1, lambda2) by vertex
    /// Log extents of the outer and inner corner boxes along E^k and E^{k-1}.
    std::array<std::array<double, 2>, 4> outer{}, inner{};

    bool in_R(const Vec2& y) const;
    bool in_outer(const Vec2& y) const;  ///< Sigma_o
    bool in_inner(const Vec2& y) const;  ///< Sigma_i
    bool in_Q(const Vec2& y) const { return !in_R(y) && !in_outer(y); }
    /// Exclusive label on the open square: R first, then Sigma_i, Sigma_o, Q.
    Region classify(const Vec2& y) const;

    /// Transition in the edge coordinate u: 1 on (0, r], 0 on [1 - r, 1).
    /// Value and derivatives with respect to the chart coordinate of u.
    void xi(double y1, double& v, double& d1, double& d2) const;
    /// Transition in the chart coordinate: 1 below ln(eps^2 r), 0 above ln(eps r).
    void chi(double y1, double& v, double& d1, double& d2) const;
    std::string describe() const;
};

/// Scenario I or III only (ScenarioMismatch otherwise). Throws BadParameters
/// unless 0 < r < 1/4, 0 < eps < 1, 0 < delta <= 1 and r' <= delta eps^2 r.
RegionGeometry build_geometry(const Scenario& s, const GeometryParams& p);

using CorrectorSet = std::array<std::shared_ptr<const Corrector>, 4>;

/// Glued Lyapunov function on Sigma_o and Q (NaN elsewhere), plus a constant
/// shift. Throws MissingCorrector when an indirect edge has none.
LyapunovFn extended_lyapunov(const BetaAssignment& b, const CorrectorSet& psi, const RegionGeometry& g,
                             double shift = 0.0);
/// Lower bound of the unshifted function on Sigma_o and Q.
double extended_lower_bound(const BetaAssignment& b, const CorrectorSet& psi, const RegionGeometry& g);

struct HittingSpec {
    RegionGeometry geometry;
    BetaAssignment betas;
    CorrectorSet correctors;
    LyapunovFn phi;
    double shift = 0.0;  ///< added so that phi >= 1
    double K = 1.0;
    double T = 1.0;
};

/// Geometry, correctors for indirect edges and the shifted Lyapunov function.
/// K and T are left at 1; see verify_conditions.
HittingSpec make_hitting_spec(const ModelSpec& m, const Scenario& s, const GeometryParams& p);

struct ConditionOptions {
    double depth_span = 40.0;      ///< log depth covered by the grids
    int along = 160, across = 24;  ///< grid points per component
    std::size_t runs = 100;        ///< paths per Monte-Carlo start
    double dt = 0.01;
    double cap_factor = 20.0;      ///< hard horizon for (c) in units of T
    /// K and T are chosen from a pilot run when NaN: K = max(1, 1.25 max_Q L phi + 0.25),
    /// T = 1.5 x the largest pilot mean of (c).
    double K = std::numeric_limits<double>::quiet_NaN();
    double T = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 1;
    int threads = 0;
};

struct ConditionRow {
    std::string name;     ///< "a" .. "d"
    double value = 0.0;   ///< measured quantity
    double se = 0.0;
    double bound = 0.0;   ///< what it is compared with
    double margin = 0.0;  ///< positive when satisfied
    bool pass = false;
    bool conditional = false;  ///< satisfied, but not by 3 SE
    std::size_t points = 0;
    Vec2 worst{0.0, 0.0};      ///< chart coordinates of the worst point
};

struct ConditionReport {
    std::array<ConditionRow, 4> rows;
    double K = 1.0, T = 1.0;
    std::size_t capped = 0;
    bool all_pass() const;
};

/// Checks (a) L phi <= -1 on Sigma_o and (b) L phi <= K on Q on grids, and by
/// Monte Carlo (c) E zeta(Sigma_i u R) <= T from Q and (d) E zeta(Sigma_o^c)
/// >= T(2K + 1) from Sigma_i. Writes the chosen K and T back into spec.
ConditionReport verify_conditions(HittingSpec& spec, const ModelSpec& m, const ConditionOptions& opt = {});

/// Only (d), for the given K and T; the mean is truncated at 2 T (2K + 1).
ConditionRow check_exit_condition(const HittingSpec& spec, const ModelSpec& m, const ConditionOptions& opt);

struct DeltaSearch {
    double log_delta = 0.0;
    std::vector<std::pair<double, double>> trials;  ///< (log delta, margin of (d))
};

/// Doubles |ln delta| until (d) holds, then bisects between the last failing
/// and first passing value. K and T stay fixed (they do not depend on delta).
DeltaSearch tune_delta(const ModelSpec& m, const Scenario& s, GeometryParams p, double K, double T,
                       const ConditionOptions& opt, int bisections = 3, int max_doublings = 8);

struct BoundRow {
    Vec2 y{0.0, 0.0};
    double phi = 0.0;
    double mean = 0.0, se = 0.0;
    double bound = 0.0;  ///< 3 phi + 2 K T, or phi in the classical form
    std::size_t runs = 0, capped = 0;
    bool pass = false;
};

struct BoundOptions {
    std::size_t runs = 200;
    double dt = 0.01;
    double cap = 1e4;
    double max_capped_fraction = 0.01;  ///< HorizonExceeded beyond this
    std::uint64_t seed = 1;
    int threads = 0;
};

/// Monte-Carlo E zeta_R at each start against 3 phi + 2 K T (+ 3 SE).
std::vector<BoundRow> validate_bound(const HittingSpec& spec, const ModelSpec& m, const std::vector<Vec2>& starts_y,
                                     const BoundOptions& opt = {});
/// Starts in the middle of the first non-attracting edge strip at increasing depth below r'.
std::vector<Vec2> boundary_starts(const RegionGeometry& g, const std::vector<double>& depths = {0.5, 2, 8, 32, 128});

/// Classical form: phi >= 0 with L phi <= -1 on the whole complement of R,
/// here the open corner box of side r at vertex k; E zeta_R <= phi (+ 3 SE).
struct ClassicalReport {
    double max_generator = 0.0;  ///< over a grid of the box
    double min_phi = 0.0;
    bool conditions = false;
    std::vector<BoundRow> rows;
};
ClassicalReport validate_classical(const ModelSpec& m, const LyapunovFn& phi, int k, double r,
                                   const std::vector<Vec2>& starts_y, const BoundOptions& opt = {},
                                   double depth_span = 40.0);

/// Mean of phi(X_tau) - phi(x) - int_0^tau L phi(X_s) ds over paths stopped at
/// tau = min(horizon, exit from the set where `inside` holds).
McEstimate dynkin_check(const ModelSpec& m, const LyapunovFn& phi, const Vec2& y0,
                        const std::function<bool(const Vec2&)>& inside, double horizon, std::size_t runs,
                        double dt, std::uint64_t seed);

} // namespace degenflow
