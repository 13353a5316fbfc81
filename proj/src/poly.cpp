#include "degenflow/poly.hpp"

#include "degenflow/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace degenflow {

Poly2::Poly2(const std::vector<std::vector<double>>& table) : n1_(0), n2_(0) {
    if (table.empty()) {
        c_.assign(1, 0.0);
        return;
    }
    n1_ = static_cast<int>(table.size()) - 1;
    std::size_t w = 1;
    for (const auto& row : table) w = std::max(w, row.size());
    n2_ = static_cast<int>(w) - 1;
    c_.assign(static_cast<std::size_t>((n1_ + 1) * (n2_ + 1)), 0.0);
    for (int i = 0; i <= n1_; ++i)
        for (std::size_t j = 0; j < table[static_cast<std::size_t>(i)].size(); ++j)
            at(i, static_cast<int>(j)) = table[static_cast<std::size_t>(i)][j];
}

Poly2 Poly2::constant(double v) {
    Poly2 p;
    p.c_[0] = v;
    return p;
}

Poly2 Poly2::x1() { return Poly2({{0.0}, {1.0}}); }
Poly2 Poly2::x2() { return Poly2({{0.0, 1.0}}); }

Poly2 Poly2::univariate(const std::vector<double>& c) {
    std::vector<std::vector<double>> t;
    for (double v : c) t.push_back({v});
    return Poly2(t);
}

double Poly2::coeff(int i, int j) const {
    if (i < 0 || j < 0 || i > n1_ || j > n2_) return 0.0;
    return at(i, j);
}

std::vector<std::vector<double>> Poly2::table() const {
    std::vector<std::vector<double>> t(static_cast<std::size_t>(n1_ + 1), std::vector<double>(static_cast<std::size_t>(n2_ + 1)));
    for (int i = 0; i <= n1_; ++i)
        for (int j = 0; j <= n2_; ++j) t[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = at(i, j);
    return t;
}

double Poly2::operator()(double x1, double x2) const {
    double acc = 0.0;
    for (int i = n1_; i >= 0; --i) {
        double inner = at(i, n2_);
        for (int j = n2_ - 1; j >= 0; --j) inner = inner * x2 + at(i, j);
        acc = acc * x1 + inner;
    }
    return acc;
}

void Poly2::eval(const Vec2& x, double& v, Vec2* grad, Sym2* hess) const {
    // Powers up to degree; polynomials here are small, so the direct sum is cheap.
    double s1[16], s2[16];
    std::vector<double> big1, big2;
    double* w1 = s1;
    double* w2 = s2;
    if (n1_ >= 16) { big1.resize(static_cast<std::size_t>(n1_ + 1)); w1 = big1.data(); }
    if (n2_ >= 16) { big2.resize(static_cast<std::size_t>(n2_ + 1)); w2 = big2.data(); }
    w1[0] = 1.0;
    for (int i = 1; i <= n1_; ++i) w1[i] = w1[i - 1] * x[0];
    w2[0] = 1.0;
    for (int j = 1; j <= n2_; ++j) w2[j] = w2[j - 1] * x[1];

    double val = 0.0, g1 = 0.0, g2 = 0.0, h11 = 0.0, h12 = 0.0, h22 = 0.0;
    for (int i = 0; i <= n1_; ++i) {
        for (int j = 0; j <= n2_; ++j) {
            const double c = at(i, j);
            if (c == 0.0) continue;
            val += c * w1[i] * w2[j];
            if (grad || hess) {
                if (i >= 1) g1 += c * i * w1[i - 1] * w2[j];
                if (j >= 1) g2 += c * j * w1[i] * w2[j - 1];
            }
            if (hess) {
                if (i >= 2) h11 += c * i * (i - 1) * w1[i - 2] * w2[j];
                if (i >= 1 && j >= 1) h12 += c * i * j * w1[i - 1] * w2[j - 1];
                if (j >= 2) h22 += c * j * (j - 1) * w1[i] * w2[j - 2];
            }
        }
    }
    v = val;
    if (grad) *grad = {g1, g2};
    if (hess) *hess = {h11, h12, h22};
}

void Poly2::eval_batch(std::size_t n, const double* x1, const double* x2, double* out) const {
    kernels::horner2(c_.data(), n1_, n2_, n, x1, x2, out);
}

Poly2 Poly2::d1() const {
    if (n1_ == 0) return Poly2(Shape{}, 0, n2_);
    Poly2 r(Shape{}, n1_ - 1, n2_);
    for (int i = 1; i <= n1_; ++i)
        for (int j = 0; j <= n2_; ++j) r.at(i - 1, j) = i * at(i, j);
    return r;
}

Poly2 Poly2::d2() const {
    if (n2_ == 0) return Poly2(Shape{}, n1_, 0);
    Poly2 r(Shape{}, n1_, n2_ - 1);
    for (int i = 0; i <= n1_; ++i)
        for (int j = 1; j <= n2_; ++j) r.at(i, j - 1) = j * at(i, j);
    return r;
}

Poly2 Poly2::operator+(const Poly2& o) const {
    Poly2 r(Shape{}, std::max(n1_, o.n1_), std::max(n2_, o.n2_));
    for (int i = 0; i <= r.n1_; ++i)
        for (int j = 0; j <= r.n2_; ++j) r.at(i, j) = coeff(i, j) + o.coeff(i, j);
    return r;
}

Poly2 Poly2::operator-(const Poly2& o) const { return *this + o * -1.0; }

Poly2 Poly2::operator*(const Poly2& o) const {
    Poly2 r(Shape{}, n1_ + o.n1_, n2_ + o.n2_);
    for (int i = 0; i <= n1_; ++i)
        for (int j = 0; j <= n2_; ++j) {
            const double a = at(i, j);
            if (a == 0.0) continue;
            for (int k = 0; k <= o.n1_; ++k)
                for (int l = 0; l <= o.n2_; ++l) r.at(i + k, j + l) += a * o.at(k, l);
        }
    return r;
}

Poly2 Poly2::operator*(double s) const {
    Poly2 r = *this;
    for (double& v : r.c_) v *= s;
    return r;
}

bool Poly2::operator==(const Poly2& o) const {
    const int m1 = std::max(n1_, o.n1_), m2 = std::max(n2_, o.n2_);
    for (int i = 0; i <= m1; ++i)
        for (int j = 0; j <= m2; ++j)
            if (coeff(i, j) != o.coeff(i, j)) return false;
    return true;
}

Poly2 Poly2::compose_affine(const std::array<double, 3>& a, const std::array<double, 3>& b) const {
    const Poly2 u = Poly2({{a[0], a[2]}, {a[1], 0.0}});
    const Poly2 w = Poly2({{b[0], b[2]}, {b[1], 0.0}});
    std::vector<Poly2> upow{Poly2::constant(1.0)}, wpow{Poly2::constant(1.0)};
    for (int i = 1; i <= n1_; ++i) upow.push_back(upow.back() * u);
    for (int j = 1; j <= n2_; ++j) wpow.push_back(wpow.back() * w);
    Poly2 r;
    for (int i = 0; i <= n1_; ++i)
        for (int j = 0; j <= n2_; ++j) {
            const double c = at(i, j);
            if (c == 0.0) continue;
            r = r + upow[static_cast<std::size_t>(i)] * wpow[static_cast<std::size_t>(j)] * c;
        }
    return r.trimmed();
}

bool Poly2::divide_by_h(int axis, Poly2& q, double tol) const {
    // View the polynomial as sum_k a_k(x') t^k with t = x_axis.
    const int n = axis == 0 ? n1_ : n2_;
    const int m = axis == 0 ? n2_ : n1_;
    auto get = [&](int k, int l) { return axis == 0 ? at(k, l) : at(l, k); };
    const double scale = std::max(1.0, max_abs_coeff());
    for (int l = 0; l <= m; ++l)
        if (std::abs(get(0, l)) > tol * scale) return false;
    if (n == 0) {
        // a_0 vanished: the polynomial is zero.
        q = Poly2();
        return true;
    }
    // Divide by t, then synthetic division of sum_{k<n} c_k t^k by (t - 1).
    std::vector<std::vector<double>> b(static_cast<std::size_t>(std::max(n - 1, 1)), std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
    for (int l = 0; l <= m; ++l) {
        double rem = 0.0;
        if (n == 1) {
            rem = get(1, l);
        } else {
            b[static_cast<std::size_t>(n - 2)][static_cast<std::size_t>(l)] = get(n, l);
            for (int k = n - 2; k >= 1; --k)
                b[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(l)] = get(k + 1, l) + b[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
            rem = get(1, l) + b[0][static_cast<std::size_t>(l)];
        }
        if (std::abs(rem) > tol * scale) return false;
    }
    const int qn = std::max(n - 2, 0);
    Poly2 r = axis == 0 ? Poly2(Shape{}, qn, m) : Poly2(Shape{}, m, qn);
    for (int k = 0; k <= qn; ++k)
        for (int l = 0; l <= m; ++l) {
            const double v = (n >= 2) ? -b[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] : 0.0;
            if (axis == 0) r.at(k, l) = v; else r.at(l, k) = v;
        }
    q = r.trimmed();
    return true;
}

Poly2 Poly2::times_h(int axis) const {
    const Poly2 t = axis == 0 ? x1() : x2();
    return (*this) * (t - t * t);
}

double Poly2::max_abs_coeff() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
}

Poly2 Poly2::trimmed(double tol) const {
    int m1 = 0, m2 = 0;
    for (int i = 0; i <= n1_; ++i)
        for (int j = 0; j <= n2_; ++j)
            if (std::abs(at(i, j)) > tol) {
                m1 = std::max(m1, i);
                m2 = std::max(m2, j);
            }
    Poly2 r(Shape{}, m1, m2);
    for (int i = 0; i <= m1; ++i)
        for (int j = 0; j <= m2; ++j) r.at(i, j) = std::abs(at(i, j)) > tol ? at(i, j) : 0.0;
    return r;
}

std::string Poly2::to_string() const {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (int i = 0; i <= n1_; ++i)
        for (int j = 0; j <= n2_; ++j) {
            const double c = at(i, j);
            if (c == 0.0) continue;
            if (!first) os << " + ";
            first = false;
            os << c;
            if (i > 0) os << "*x1^" << i;
            if (j > 0) os << "*x2^" << j;
        }
    if (first) os << "0";
    return os.str();
}

} // namespace degenflow
