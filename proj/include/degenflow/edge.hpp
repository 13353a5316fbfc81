#pragma once

#include "degenflow/model_spec.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace degenflow {

// Quadrature and truncation settings for StationaryDensity.
struct DensityOptions {
    int panels = 32;             ///< composite Gauss-Legendre panels, 16 nodes each
    double knot_step = 0.25;     ///< spacing of the cumulative potential table
    double tail_drop = 40.0;     ///< truncate where the log-density is this far below its max
    double const_tol = 1e-6;     ///< relative closeness of l, S to their limits at truncation
    double y_cap = 5000.0;
    double tol = 1e-12;          ///< adaptive quadrature tolerance for the table
};

/// Stationary density of a one-dimensional diffusion dY = l(Y) dt + sqrt(S(Y)) dW,
/// p(y) proportional to exp(int_0^y 2 l/S) / S. Either on a fixed interval with
/// reflecting ends, or on the whole line in the log chart of an edge model.
class StationaryDensity {
public:
    using Coefs = std::function<void(double y, double& ell, double& S)>;

    using Options = DensityOptions;

    static StationaryDensity on_interval(Coefs c, double lo, double hi, std::vector<double> breaks = {},
                                         const Options& opt = {});
    /// Density of a one-dimensional edge model in its log chart. Throws NotInS
    /// unless both endpoints repel (p(0) > 0 > p(1)), AssumptionViolated if the
    /// noise degenerates.
    static StationaryDensity for_edge(const ModelSpec& edge, const Options& opt = {});

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    bool whole_line() const { return whole_line_; }
    const Coefs& coefs() const { return coefs_; }
    const std::vector<double>& breaks() const { return breaks_; }

    double log_pdf_y(double y) const;
    double pdf_y(double y) const;
    /// Density in x = x(y) for the edge chart.
    double pdf_x(double x) const;
    /// Probability of [a, b] in y (adaptive quadrature).
    double mass(double a, double b) const;
    double mode() const { return mode_; }
    /// Composite Gauss-Legendre expectation of f(y).
    double expect(const std::function<double(double)>& f) const;
    /// Same expectation by adaptive Gauss-Kronrod on the chart segments.
    double expect_adaptive(const std::function<double(double)>& f) const;
    const std::vector<double>& nodes() const { return qy_; }
    const std::vector<double>& weights() const { return qw_; }

    /// Smallest nonzero rate of the generator (reflecting at lo and hi),
    /// from a symmetric tridiagonal finite-volume discretization.
    double spectral_gap(int cells = 1500) const;

    /// Asymptotic l and S at -inf / +inf (whole-line densities only).
    double ell_lo() const { return ell_lo_; }
    double ell_hi() const { return ell_hi_; }

private:
    Coefs coefs_;
    double lo_ = 0.0, hi_ = 0.0;
    bool whole_line_ = false;
    std::vector<double> breaks_;
    std::vector<double> knots_, A_;  // A(y) = int_0^y 2l/S at the knots, ascending
    std::size_t zero_ = 0;           // index of y = 0 in knots_
    double slope_lo_ = 0.0, slope_hi_ = 0.0, ell_lo_ = 0.0, ell_hi_ = 0.0, S_lo_ = 0.0, S_hi_ = 0.0;
    double log_z_ = 0.0;
    double mode_ = 0.0;
    std::vector<double> qy_, qw_;

    double potential(double y) const;
    void finish(const Options& opt);
};

/// Lambda_2 at (x1, 0) of the model seen from edge k:
/// d2 b2 + (1/2) sum_m sigma_m1 d12 sigma_m2, from the full fields.
double lambda2_pointwise(const ModelSpec& m, int k, double x1);
/// Same quantity from the reduced fields, as the transversal log-chart drift
/// l_2(y1, -inf); valid at any chart depth. `local` is m.rotated(k).
double lambda2_chart(const ModelSpec& local, const Coord& c1);

struct McOptions {
    std::uint64_t seed = 1;
    int paths = 16;
    double horizon = 400.0;  ///< per path, after burn-in
    double burn_in = 20.0;
    double dt = 0.005;
};

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
};

/// Long-run time average of f along independent paths of a one-dimensional
/// model started at x = 1/2; the standard error comes from the spread of the path means.
McEstimate mc_time_average(const ModelSpec& model1d, const std::function<double(const Coord&)>& f,
                           const McOptions& opt);
/// L1 distance between the occupation histogram (bins in x) and the density.
double mc_histogram_l1(const ModelSpec& model1d, const StationaryDensity& d, int bins, const McOptions& opt);
/// E_x int_0^T f(X_t) dt over opt.paths independent paths.
McEstimate mc_path_integral(const ModelSpec& model1d, const std::function<double(const Coord&)>& f, double x0,
                            double T, const McOptions& opt);

struct EdgeOptions {
    StationaryDensity::Options quad;
    double tol_hyp = 1e-6;
    bool monte_carlo = false;
    McOptions mc;
    int grid_points = 201;
};

struct EdgeSpectrum {
    int k = 0;
    bool in_S = false;
    /// Tangential rates at the start and the end of the edge: p(0) and -p(1)
    /// of the restriction; the edge carries an invariant measure iff both are positive.
    std::array<double, 2> endpoint_rates{0.0, 0.0};
    std::shared_ptr<const StationaryDensity> density;
    double lambda2_bar = 0.0;
    double quad_error = 0.0;  ///< |composite GL - adaptive| for lambda2_bar
    std::optional<McEstimate> lambda2_mc;
    // Grid in x1 (uniform in the log chart).
    std::vector<double> grid_y, grid_x, density_x, lambda2;
};

/// Throws NonHyperbolicEdge when |lambda2_bar| is below tol_hyp plus the
/// quadrature error (plus 3 SE when the Monte-Carlo estimate is requested).
EdgeSpectrum edge_spectrum(const ModelSpec& m, int k, const EdgeOptions& opt = {});
/// Spectrum without the hyperbolicity check; in_S false leaves the density empty.
EdgeSpectrum edge_spectrum_unchecked(const ModelSpec& m, int k, const EdgeOptions& opt = {});
/// Lambda2_bar; throws NotInS and NonHyperbolicEdge.
double transversal_exponent(const ModelSpec& m, int k, const EdgeOptions& opt = {});

struct CorrectorOptions {
    int cells = 3000;
};

/// Solution psi of the Poisson equation L psi = -g, g = f - E_pi f, for a
/// one-dimensional density, with psi centered (E_pi psi = 0) plus an optional shift.
class Corrector {
public:
    using Options = CorrectorOptions;

    static Corrector solve(std::shared_ptr<const StationaryDensity> d, std::function<double(double)> f,
                           const Options& opt);
    static Corrector solve(std::shared_ptr<const StationaryDensity> d, std::function<double(double)> f) {
        return solve(std::move(d), std::move(f), Options{});
    }

    double psi(double y) const;
    double psi_y(double y) const;
    double psi_yy(double y) const;
    double g(double y) const { return f_(y) - mean_; }
    double mean() const { return mean_; }
    const StationaryDensity& density() const { return *d_; }

    /// Additive constant on top of the centered solution.
    double shift() const { return shift_; }
    double shift_se() const { return shift_se_; }
    void set_shift(double s, double se = 0.0) {
        shift_ = s;
        shift_se_ = se;
    }

    double residual_norm() const { return residual_; }
    /// Diagnostic residual of the cubic interpolant at cell midpoints.
    double spline_residual() const { return spline_residual_; }
    double g_centering() const { return g_centering_; }
    /// max |x(1-x) psi'(x)| and max |(x(1-x))^2 psi''(x)| over the grid (edge chart).
    double max_h_dpsi() const { return max_h_dpsi_; }
    double max_h2_d2psi() const { return max_h2_d2psi_; }
    /// max |d psi / dy| over the grid.
    double max_psi_y() const { return max_psi_y_; }

    const std::vector<double>& grid() const { return y_; }
    const std::vector<double>& values() const { return psi_; }
    std::vector<double> g_values() const;

private:
    std::shared_ptr<const StationaryDensity> d_;
    std::function<double(double)> f_;
    double mean_ = 0.0;
    double shift_ = 0.0, shift_se_ = 0.0;
    double dy_ = 0.0;
    std::vector<double> y_, psi_, flux_;
    struct Interp;
    std::shared_ptr<const Interp> spline_;
    std::size_t mode_cell_ = 0;
    double residual_ = 0.0, spline_residual_ = 0.0, g_centering_ = 0.0;
    double max_h_dpsi_ = 0.0, max_h2_d2psi_ = 0.0, max_psi_y_ = 0.0;

    double flux(double y) const;
    double spline_value(double y) const;
};

struct CorrectorReport {
    Corrector corrector;
    double gap = 0.0;
    double horizon = 0.0;  ///< T = 50 / gap used by the Monte-Carlo oracle
    McEstimate at_mode;    ///< oracle value at the density mode (defines the shift)
};

/// Corrector for Lambda_2 on edge k. Throws NotInS, SolverFailure (residual
/// above 1e-6).
Corrector solve_corrector(const ModelSpec& m, int k, const Corrector::Options& opt = {});
/// Same, then shifted so psi matches the truncated Monte-Carlo oracle
/// E int_0^T g dt at the density mode.
CorrectorReport solve_corrector_shifted(const ModelSpec& m, int k, const McOptions& mc,
                                        const Corrector::Options& opt = {});

/// Columns x1, y1, psi, lambda2, density.
void write_edge_csv(std::ostream& os, const EdgeSpectrum& s, const Corrector* c);

} // namespace degenflow
