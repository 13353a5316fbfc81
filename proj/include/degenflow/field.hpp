#pragma once

#include "degenflow/poly.hpp"

#include <functional>
#include <string>

namespace degenflow {

using Mat2 = std::array<std::array<double, 2>, 2>;

/// Affine change of variables x_old = m * x_new + c.
struct Affine2 {
    Mat2 m{{{1.0, 0.0}, {0.0, 1.0}}};
    Vec2 c{0.0, 0.0};
    Vec2 apply(const Vec2& x) const {
        return {m[0][0] * x[0] + m[0][1] * x[1] + c[0], m[1][0] * x[0] + m[1][1] * x[1] + c[1]};
    }
};

/// Smooth scalar field on the square: a polynomial, or a callable with
/// optional analytic derivatives. Missing derivatives fall back to central
/// differences (h = 1e-5) when allowed; such fields report approximate().
class Field {
public:
    using Fn = std::function<double(const Vec2&)>;
    using GradFn = std::function<Vec2(const Vec2&)>;
    using HessFn = std::function<Sym2(const Vec2&)>;

    static constexpr double kFdStep = 1e-5;

    Field() = default;
    explicit Field(Poly2 p) : poly_(std::move(p)) {}
    static Field constant(double v) { return Field(Poly2::constant(v)); }
    static Field function(Fn f, GradFn g = {}, HessFn h = {}, bool allow_fd = true, std::string name = "f");

    bool is_poly() const { return !fn_; }
    const Poly2& poly() const { return poly_; }
    const std::string& name() const { return name_; }

    double value(const Vec2& x) const { return fn_ ? fn_(x) : poly_.value(x); }
    /// Value plus requested derivatives; throws MissingDerivative if a
    /// derivative is unavailable and finite differences are disallowed.
    void eval(const Vec2& x, double& v, Vec2* grad, Sym2* hess) const;

    /// True if any derivative is computed by finite differences.
    bool approximate() const { return fn_ && allow_fd_ && (!grad_ || !hess_); }
    bool has_analytic_grad() const { return !fn_ || static_cast<bool>(grad_); }
    bool has_analytic_hess() const { return !fn_ || static_cast<bool>(hess_); }
    bool is_zero() const { return !fn_ && poly_.is_zero(); }

    /// The field g(x_new) = f(a.apply(x_new)).
    Field transformed(const Affine2& a) const;
    Field scaled(double s) const;

private:
    Poly2 poly_;
    Fn fn_;
    GradFn grad_;
    HessFn hess_;
    bool allow_fd_ = true;
    std::string name_ = "poly";
};

} // namespace degenflow
