#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace degenflow {

using Vec2 = std::array<double, 2>;

/// Symmetric 2x2 matrix stored as (h11, h12, h22).
struct Sym2 {
    double h11 = 0.0, h12 = 0.0, h22 = 0.0;
};

/// Dense bivariate polynomial  sum_{i,j} c_ij x1^i x2^j.
class Poly2 {
public:
    Poly2() : n1_(0), n2_(0), c_(1, 0.0) {}
    /// rows index the power of x1, columns the power of x2; ragged rows are zero-padded.
    explicit Poly2(const std::vector<std::vector<double>>& table);

    static Poly2 constant(double v);
    static Poly2 x1();
    static Poly2 x2();
    /// Univariate polynomial in x1 with coefficients c[k] for x1^k.
    static Poly2 univariate(const std::vector<double>& c);

    int deg1() const { return n1_; }
    int deg2() const { return n2_; }
    double coeff(int i, int j) const;
    std::vector<std::vector<double>> table() const;

    double operator()(double x1, double x2 = 0.0) const;
    double value(const Vec2& x) const { return (*this)(x[0], x[1]); }
    void eval(const Vec2& x, double& v, Vec2* grad, Sym2* hess) const;
    /// Batched evaluation (dispatches to the SIMD kernel when available).
    void eval_batch(std::size_t n, const double* x1, const double* x2, double* out) const;

    Poly2 d1() const;
    Poly2 d2() const;
    Poly2 derivative(int axis) const { return axis == 0 ? d1() : d2(); }

    Poly2 operator+(const Poly2& o) const;
    Poly2 operator-(const Poly2& o) const;
    Poly2 operator*(const Poly2& o) const;
    Poly2 operator*(double s) const;
    Poly2 operator-() const { return (*this) * -1.0; }
    bool operator==(const Poly2& o) const;

    /// Substitute x1 -> a[0] + a[1] y1 + a[2] y2 and x2 -> b[0] + b[1] y1 + b[2] y2.
    Poly2 compose_affine(const std::array<double, 3>& a, const std::array<double, 3>& b) const;

    /// Exact division by x_axis (1 - x_axis). Returns false (and leaves q untouched)
    /// if the remainder exceeds tol relative to the coefficient scale.
    bool divide_by_h(int axis, Poly2& q, double tol = 1e-12) const;
    /// Multiply by x_axis (1 - x_axis).
    Poly2 times_h(int axis) const;

    double max_abs_coeff() const;
    bool is_zero(double tol = 0.0) const { return max_abs_coeff() <= tol; }
    Poly2 trimmed(double tol = 0.0) const;
    std::string to_string() const;

private:
    struct Shape {};
    Poly2(Shape, int n1, int n2) : n1_(n1), n2_(n2), c_(static_cast<std::size_t>((n1 + 1) * (n2 + 1)), 0.0) {}
    double& at(int i, int j) { return c_[static_cast<std::size_t>(i * (n2_ + 1) + j)]; }
    double at(int i, int j) const { return c_[static_cast<std::size_t>(i * (n2_ + 1) + j)]; }

    int n1_, n2_;
    std::vector<double> c_;
};

inline Poly2 operator*(double s, const Poly2& p) { return p * s; }

} // namespace degenflow
