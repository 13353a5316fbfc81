#pragma once

#include "degenflow/edge.hpp"
#include "degenflow/rng.hpp"
#include "degenflow/spectrum.hpp"

#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace degenflow {

struct AttractorMember {
    enum class Type { Vertex, Edge };
    Type type = Type::Vertex;
    int k = 0;
    /// Vertex: (lambda1, lambda2). Edge: (lambda2_bar, quadrature error).
    std::array<double, 2> evidence{0.0, 0.0};
    std::string name() const;
};

struct AttractingSet {
    std::vector<AttractorMember> members;
    bool empty() const { return members.empty(); }
    bool has_vertex(int k) const;
    bool has_edge(int k) const;
};

/// Sinks among the vertices and edges of S with negative transversal exponent.
AttractingSet attracting_set(const std::array<VertexSpectrum, 4>& v, const std::array<EdgeSpectrum, 4>& e);
/// Computes the spectra first; propagates NonHyperbolic and NonHyperbolicEdge.
AttractingSet attracting_set(const ModelSpec& m, double tol_hyp = 1e-6, const EdgeOptions& eopt = {});

/// Limit set of the empirical measures for a stable cycle. Positions p = 0..3
/// follow the direction of the cycle starting at O^0; vertex[p] is the vertex
/// visited at position p.
struct LimitQuadrilateral {
    std::array<int, 4> vertex{0, 1, 2, 3};
    double pi = 0.0;
    /// f[k][i] = f_{k,j} with j = k - 3 + i (positions mod 4).
    std::array<std::array<double, 4>, 4> f{};
    /// mu[k][v]: weight of vertex v in the k-th limit measure.
    std::array<std::array<double, 4>, 4> mu{};
    std::array<double, 4> rho{};          ///< by position
    std::array<double, 4> lambda_plus{};  ///< by position

    double weight(int k, int j) const;
    /// Max relative defect of rho^{k-3} f_{k+1,j} = f_{k,j} (times Pi when j = k+1).
    double consistency_defect() const;
    /// Point of the segment [mu_k, mu_{k+1}] at parameter s in [0, 1].
    std::array<double, 4> segment_point(int k, double s) const;
};

/// Throws BadParameters unless the cycle is stable.
LimitQuadrilateral limit_quadrilateral(const CycleInfo& cycle, const std::array<double, 4>& lambdas_plus);

struct BetaOptions {
    double slack_factor = 1.5;
    double min_slack = 1e-3;
    /// Cycle branch only: NaN picks eps by bisection so that the wraparound
    /// product lands at sqrt(Pi).
    double eps = std::numeric_limits<double>::quiet_NaN();
};

struct BetaConstraint {
    std::string label;  ///< "O2" or "E1"
    double value = 0.0; ///< alpha lambda1 + beta lambda2, or gamma Lambda2_bar, after scaling
    double slack = 0.0; ///< value - 2
};

struct BetaAssignment {
    std::string method;  ///< "graph" or "cycle"
    std::array<double, 4> beta_tilde{};
    double scale = 1.0;  ///< M
    std::array<double, 4> beta{}, alpha{}, gamma{};
    double eps = std::numeric_limits<double>::quiet_NaN();
    double wraparound = std::numeric_limits<double>::quiet_NaN();  ///< cycle branch product, must be < 1
    std::vector<BetaConstraint> constraints;
    double min_slack() const;
};

/// Weights beta_k for the local Lyapunov functions of scenarios I and III.
/// lambda2_bar[k] is set for edges in S. Throws Infeasible for a stable cycle.
BetaAssignment choose_betas(const std::array<VertexSpectrum, 4>& v, const std::array<std::optional<double>, 4>& lambda2_bar,
                            const BetaOptions& opt = {});

enum class ScenarioCase { AttractorSet, StableCycle, InteriorRecurrent };
const char* to_string(ScenarioCase c);

struct Scenario {
    ScenarioCase kind = ScenarioCase::InteriorRecurrent;
    std::string label() const;   ///< "I", "II" or "III"
    std::string detail;          ///< "attractor", "stable cycle", "unstable cycle", "acyclic"
    AttractingSet attractors;
    std::array<VertexSpectrum, 4> vertices;
    std::array<EdgeSpectrum, 4> edges;
    std::optional<CycleInfo> cycle;
    std::optional<LimitQuadrilateral> quadrilateral;
    std::optional<BetaAssignment> betas;
};

struct ClassifierOptions {
    double tol_hyp = 1e-6;
    double tol_pi = 1e-6;
    EdgeOptions edge;
    BetaOptions betas;
    bool check_hormander = true;
};

/// Trichotomy for planar models. Hypothesis failures are rethrown as
/// AssumptionViolated whose message starts with the assumption tag.
Scenario classify(const ModelSpec& m, const ClassifierOptions& opt = {});

struct Scenario1d {
    double lambda0 = 0.0, lambda1 = 0.0;
    std::vector<int> sinks;  ///< endpoints 0 and/or 1
    bool interior = false;
    std::shared_ptr<const StationaryDensity> density;
    std::string label() const { return interior ? "II" : "I"; }
};

Scenario1d classify_1d(const ModelSpec& m, double tol_hyp = 1e-6, const DensityOptions& dopt = {});

struct RandomModelOptions {
    double coef = 3.0;               ///< reduced drift coefficients uniform on [-coef, coef]
    double noise_lo = 0.3, noise_hi = 1.0;
    double cross = 0.3;              ///< off-diagonal noise uniform on [-cross, cross]
    /// Rejection margins: |vertex rates|, |Pi - 1| and |Lambda2_bar| at least this.
    double margin = 0.05;
    int max_tries = 200;
};

/// Random planar model: p_i bilinear (quartic drift), constant reduced noise.
ModelSpec random_model(Rng& rng, const RandomModelOptions& opt = {});
/// Draws until classify succeeds with all margins met; returns the model and its scenario.
std::pair<ModelSpec, Scenario> random_hyperbolic_model(Rng& rng, const RandomModelOptions& opt = {},
                                                       const ClassifierOptions& copt = {});

} // namespace degenflow
