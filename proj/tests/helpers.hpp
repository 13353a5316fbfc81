#pragma once

#include "degenflow/model_spec.hpp"

namespace testing_helpers {

using degenflow::Field;
using degenflow::ModelSpec;
using degenflow::Poly2;

// b_i = lam_i x_i(1-x_i), sigma_ii = eps x_i(1-x_i), no cross noise.
inline ModelSpec diagonal_model(double lam1, double lam2, double eps) {
    ModelSpec::QTable q;
    q[0][0] = Field::constant(eps);
    q[1][1] = Field::constant(eps);
    return ModelSpec::factored("diag", Field::constant(lam1), Field::constant(lam2), q);
}

inline ModelSpec diagonal_model_poly(const Poly2& p1, const Poly2& p2, double eps) {
    ModelSpec::QTable q;
    q[0][0] = Field::constant(eps);
    q[1][1] = Field::constant(eps);
    return ModelSpec::factored("diag", Field(p1), Field(p2), q);
}

} // namespace testing_helpers
