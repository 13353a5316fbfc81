#pragma once

#include "degenflow/edge.hpp"
#include "degenflow/spectrum.hpp"

#include <memory>
#include <string>
#include <vector>

namespace degenflow {

enum class LyapunovKind { Corner, Edge, Extended };
const char* to_string(LyapunovKind k);

/// Maps global chart coordinates to those of the chart seen from vertex k
/// (quarter turns: (y1, y2) -> (y2, -y1)).
Vec2 to_local_y(const Vec2& y, int k);
Vec2 from_local_y(const Vec2& yk, int k);
/// Pulls a jet in local chart coordinates back to global ones.
Jet2 pull_back(const Jet2& local, int k);

/// ln x as a function of the chart coordinate: value, first and second derivative.
void log_x_jet(double y, double& v, double& d1, double& d2);

/// A Lyapunov function given in chart coordinates y, with exact first and
/// second derivatives, so that L Phi can be evaluated at any depth.
class LyapunovFn {
public:
    using Eval = std::function<Jet2(const Vec2& y)>;

    /// Phi = -alpha ln x1^k - beta ln x2^k.
    static LyapunovFn corner(double alpha, double beta, int k = 0);
    /// Phi = theta (ln x2^k + psi(y1^k)); a null corrector means psi = 0.
    static LyapunovFn edge(double theta, std::shared_ptr<const Corrector> psi, int k = 0);
    static LyapunovFn extended(Eval f, std::string description);

    LyapunovKind kind() const { return kind_; }
    int index() const { return k_; }
    double alpha() const { return a_; }
    double beta() const { return b_; }
    double theta() const { return a_; }
    const std::string& description() const { return desc_; }

    Jet2 eval_y(const Vec2& y) const { return f_(y); }
    /// Value and derivatives with respect to x.
    Jet2 eval_x(const Vec2& x) const;
    double operator()(const Vec2& x) const { return f_({chart::y_of_x(x[0]), chart::y_of_x(x[1])}).v; }
    /// (L Phi) at the point with chart coordinates y.
    double generator(const ModelSpec& m, const Vec2& y) const;

private:
    LyapunovKind kind_ = LyapunovKind::Corner;
    int k_ = 0;
    double a_ = 0.0, b_ = 0.0;
    std::string desc_;
    Eval f_;
};

struct BandRegion {
    enum class Kind { Edge, Corner };
    Kind kind = Kind::Edge;
    int k = 0;            ///< edge E^k or vertex O^k
    double r_max = 0.1;   ///< outer distance of the sampled band
};

struct BandReport {
    double target = 0.0;
    double halfwidth = 0.0;
    double max_deviation = 0.0;  ///< over all samples with distance < r_max
    double r_found = 0.0;        ///< band radius free of violations on the grid
    bool satisfied = false;      ///< no violation up to r_max
    std::size_t samples = 0;
    std::size_t violations = 0;
    /// Max deviation per sampled distance level, closest level first.
    std::vector<double> levels, level_deviation;
};

/// Samples L Phi over {d(x, E^k) < r_max} or {d(x, O^k) < r_max} on a grid of
/// about `samples` points (distances log-spaced down to 1e-12) and compares
/// with target +- halfwidth.
BandReport verify_generator_band(const ModelSpec& m, const LyapunovFn& phi, const BandRegion& region, double target,
                                 double halfwidth, int samples = 4096);

/// Target and halfwidth near vertex k for Phi = -alpha ln x1 - beta ln x2.
void corner_band(const VertexSpectrum& v, double alpha, double beta, double& target, double& halfwidth);
/// Target and halfwidth near an edge for Phi = theta (ln x2 + psi).
void edge_band(double theta, double lambda2_bar, double& target, double& halfwidth);

} // namespace degenflow
