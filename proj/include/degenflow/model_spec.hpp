#pragma once

#include "degenflow/chart.hpp"
#include "degenflow/field.hpp"

#include <functional>
#include <string>

namespace degenflow {

/// Value, gradient and Hessian of a test function at a point.
struct Jet2 {
    double v = 0.0;
    Vec2 g{0.0, 0.0};
    Sym2 h;
};
using TestFn = std::function<Jet2(const Vec2&)>;

/// Reduced coefficients at a point: b_i = h_i p_i, sigma_mi = h_i q_mi with
/// h_i = x_i(1 - x_i), and the reduced Ito drift B_i (Ito drift = h_i B_i).
struct Reduced {
    Vec2 h{0.0, 0.0};
    Vec2 p{0.0, 0.0};
    double q[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    Vec2 B{0.0, 0.0};
};

/// Ito coefficients of the log-chart process y(x): dy_i = l_i dt + sum_m s_mi dW_m.
struct ChartCoeffs {
    Vec2 ell{0.0, 0.0};
    double s[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
};

/// Stratonovich SDE dX = b(X) dt + sum_m sigma_m(X) o dW_m on [0,1]^d, d = 1 or 2.
/// Fields are held in factored form b_i = x_i(1-x_i) p_i, sigma_mi = x_i(1-x_i) q_mi,
/// which makes every face invariant. Noise column m has components sigma_mi.
/// One-dimensional models use the first coordinate and may have two noise columns.
class ModelSpec {
public:
    using QTable = std::array<std::array<Field, 2>, 2>;  // q[m][i]

    ModelSpec() = default;
    static ModelSpec factored(std::string name, Field p1, Field p2, QTable q);
    static ModelSpec factored_1d(std::string name, Field p, Field q1, Field q2 = Field());
    /// Unfactored polynomial fields; each component is divided exactly by
    /// x_i(1-x_i). Throws TangencyViolated if a normal component does not vanish on a face.
    static ModelSpec from_raw(std::string name, const std::array<Poly2, 2>& b,
                              const std::array<std::array<Poly2, 2>, 2>& sigma);
    static ModelSpec from_raw_1d(std::string name, const Poly2& b, const Poly2& s1, const Poly2& s2 = Poly2());

    int dim() const { return dim_; }
    const std::string& name() const { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }
    const Field& p(int i) const { return p_[static_cast<std::size_t>(i)]; }
    const Field& q(int m, int i) const { return q_[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)]; }
    /// Whether noise column m is identically zero (cheap check on polynomials only).
    bool column_zero(int m) const { return col_zero_[static_cast<std::size_t>(m)]; }
    /// True when any derivative is obtained by finite differences.
    bool approximate() const;

    // Full (Stratonovich) fields and their derivatives.
    Vec2 drift(const Vec2& x) const;
    Mat2 drift_jacobian(const Vec2& x) const;  // J[i][j] = d_j b_i
    Vec2 noise(int m, const Vec2& x) const;
    Mat2 noise_jacobian(int m, const Vec2& x) const;
    /// d_1 d_2 sigma_mi.
    double noise_mixed_second(int m, int i, const Vec2& x) const;

    /// (1/2) sum_m sum_j sigma_mj d_j sigma_mi, from the full Jacobians.
    Vec2 ito_correction(const Vec2& x) const;
    Vec2 ito_drift(const Vec2& x) const;
    /// (L f)(x) = sum_i btilde_i d_i f + 1/2 sum_ij (sum_m sigma_mi sigma_mj) d_ij f.
    double generator_apply(const TestFn& f, const Vec2& x) const;
    /// Same operator applied to a function given in log-chart coordinates y.
    double generator_apply_y(const TestFn& f_of_y, const Vec2& y) const;

    /// Reduced coefficients at a point given per coordinate.
    void reduced(const Coord* c, Reduced& r) const;
    /// Log-chart coefficients (chain rule on the reduced fields, no division).
    void chart_coeffs(const Coord* c, ChartCoeffs& out) const;
    void chart_coeffs(const Coord* c, const Reduced& r, ChartCoeffs& out) const;

    /// The model seen from vertex k: coordinates x^k with O^k at the origin and
    /// edge E^k along the first axis (quarter-turn rotation applied k times).
    ModelSpec rotated(int k) const;
    ModelSpec scaled_drift(double c) const;
    /// Tangential part on edge E^k as a 1-d model in x_1^k.
    ModelSpec edge_restriction(int k) const;

    /// Max |normal component| of b and sigma_m over sampled boundary points.
    double tangency_defect(int samples = 64) const;
    /// Max |supplied - central FD| over Jacobian entries at random interior points
    /// (FD step 1e-5), relative to 1 + |entry|.
    double jacobian_defect(int points, std::uint64_t seed) const;

private:
    int dim_ = 2;
    std::string name_ = "model";
    std::array<Field, 2> p_;
    QTable q_;
    std::array<bool, 2> col_zero_{false, false};

    void refresh();
    Vec2 full(const Field& r, int i, const Vec2& x, Vec2* grad) const;
};

/// Log-chart dynamics seen from vertex k: evaluators for (l_1, l_2, s_mi) as
/// functions of y^k. Values at y = -inf are the face limits.
class ChartDynamics {
public:
    ChartDynamics(const ModelSpec& m, int k) : model_(m.dim() == 2 ? m.rotated(k) : m), k_(k) {}
    ChartCoeffs operator()(const Vec2& y) const;
    int index() const { return k_; }
    const ModelSpec& model() const { return model_; }

private:
    ModelSpec model_;
    int k_;
};

inline double hfun(double x) { return x * (1.0 - x); }

} // namespace degenflow
