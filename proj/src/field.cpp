#include "degenflow/field.hpp"

#include "degenflow/errors.hpp"

namespace degenflow {

Field Field::function(Fn f, GradFn g, HessFn h, bool allow_fd, std::string name) {
    Field r;
    r.fn_ = std::move(f);
    r.grad_ = std::move(g);
    r.hess_ = std::move(h);
    r.allow_fd_ = allow_fd;
    r.name_ = std::move(name);
    return r;
}

void Field::eval(const Vec2& x, double& v, Vec2* grad, Sym2* hess) const {
    if (!fn_) {
        poly_.eval(x, v, grad, hess);
        return;
    }
    v = fn_(x);
    const double h = kFdStep;
    auto shifted = [&](double d1, double d2) { return fn_({x[0] + d1, x[1] + d2}); };
    if (grad) {
        if (grad_) {
            *grad = grad_(x);
        } else if (allow_fd_) {
            *grad = {(shifted(h, 0) - shifted(-h, 0)) / (2 * h), (shifted(0, h) - shifted(0, -h)) / (2 * h)};
        } else {
            throw MissingDerivative("gradient of field '" + name_ + "'");
        }
    }
    if (hess) {
        if (hess_) {
            *hess = hess_(x);
        } else if (allow_fd_ && grad_) {
            const Vec2 a = grad_({x[0] + h, x[1]}), b = grad_({x[0] - h, x[1]});
            const Vec2 c = grad_({x[0], x[1] + h}), d = grad_({x[0], x[1] - h});
            *hess = {(a[0] - b[0]) / (2 * h), 0.5 * ((a[1] - b[1]) + (c[0] - d[0])) / (2 * h), (c[1] - d[1]) / (2 * h)};
        } else if (allow_fd_) {
            // Second differences need a larger step to stay above roundoff.
            const double s = 1e-4;
            auto f = [&](double d1, double d2) { return fn_({x[0] + d1, x[1] + d2}); };
            hess->h11 = (f(s, 0) - 2 * v + f(-s, 0)) / (s * s);
            hess->h22 = (f(0, s) - 2 * v + f(0, -s)) / (s * s);
            hess->h12 = (f(s, s) - f(s, -s) - f(-s, s) + f(-s, -s)) / (4 * s * s);
        } else {
            throw MissingDerivative("Hessian of field '" + name_ + "'");
        }
    }
}

Field Field::transformed(const Affine2& a) const {
    if (!fn_) {
        return Field(poly_.compose_affine({a.c[0], a.m[0][0], a.m[0][1]}, {a.c[1], a.m[1][0], a.m[1][1]}));
    }
    Field r;
    r.allow_fd_ = allow_fd_;
    r.name_ = name_;
    auto f = fn_;
    r.fn_ = [f, a](const Vec2& x) { return f(a.apply(x)); };
    if (grad_) {
        auto g = grad_;
        r.grad_ = [g, a](const Vec2& x) {
            const Vec2 v = g(a.apply(x));
            return Vec2{a.m[0][0] * v[0] + a.m[1][0] * v[1], a.m[0][1] * v[0] + a.m[1][1] * v[1]};
        };
    }
    if (hess_) {
        auto hf = hess_;
        r.hess_ = [hf, a](const Vec2& x) {
            const Sym2 s = hf(a.apply(x));
            const Mat2 h{{{s.h11, s.h12}, {s.h12, s.h22}}};
            double out[2][2] = {};
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int k = 0; k < 2; ++k)
                        for (int l = 0; l < 2; ++l) out[i][j] += a.m[k][i] * h[k][l] * a.m[l][j];
            return Sym2{out[0][0], out[0][1], out[1][1]};
        };
    }
    return r;
}

Field Field::scaled(double s) const {
    if (!fn_) return Field(poly_ * s);
    Field r = *this;
    auto f = fn_;
    r.fn_ = [f, s](const Vec2& x) { return s * f(x); };
    if (grad_) {
        auto g = grad_;
        r.grad_ = [g, s](const Vec2& x) {
            const Vec2 v = g(x);
            return Vec2{s * v[0], s * v[1]};
        };
    }
    if (hess_) {
        auto h = hess_;
        r.hess_ = [h, s](const Vec2& x) {
            const Sym2 v = h(x);
            return Sym2{s * v.h11, s * v.h12, s * v.h22};
        };
    }
    return r;
}

} // namespace degenflow
