#include "degenflow/presets.hpp"

#include "degenflow/errors.hpp"

#include <cmath>

namespace degenflow {

const std::vector<PresetInfo>& presets() {
    static const std::vector<PresetInfo> list = {
        {"double_sink_1d", 1, 0.5, "b = x(1-x)(2x-1): both endpoints attract"},
        {"double_source_1d", 1, 1.0, "b = x(1-x)(1-2x): both endpoints repel, Beta(2,2) stationary law at noise 1"},
        {"case_study", 2, 0.5, "sink at O0, attracting edge E1, repelling edge E2"},
        {"stable_cycle_rho2", 2, 0.3, "four saddles, lambda+ = 1, lambda- = -2, Pi = 16"},
        {"unstable_cycle_rho_half", 2, 0.3, "four saddles, lambda+ = 2, lambda- = -1, Pi = 1/16"},
        {"acyclic_scenario3", 2, 0.5, "mixed saddles and repelling edges, no attractor"},
        {"arcsine", 1, 1.0, "b = 0, sigma = x(1-x): logit is a Brownian motion"},
    };
    return list;
}

const PresetInfo& preset_info(const std::string& name) {
    for (const PresetInfo& p : presets())
        if (p.name == name) return p;
    throw ValidationError("unknown preset '" + name + "'");
}

namespace {

ModelSpec planar(const std::string& name, Poly2 p1, Poly2 p2, double eps) {
    ModelSpec::QTable q;
    q[0][0] = Field::constant(eps);
    q[1][1] = Field::constant(eps);
    return ModelSpec::factored(name, Field(std::move(p1)), Field(std::move(p2)), q);
}

} // namespace

ModelSpec preset_model(const std::string& name, double noise) {
    const PresetInfo& info = preset_info(name);
    const double e = std::isnan(noise) ? info.noise : noise;
    if (!(e >= 0.0) || !std::isfinite(e)) throw ValidationError("noise: must be finite and nonnegative");
    // Poly2 tables hold the coefficient of x1^i x2^j at [i][j].
    if (name == "double_sink_1d") return ModelSpec::factored_1d(name, Field(Poly2({{-1.0}, {2.0}})), Field::constant(e));
    if (name == "double_source_1d") return ModelSpec::factored_1d(name, Field(Poly2({{1.0}, {-2.0}})), Field::constant(e));
    if (name == "arcsine") return ModelSpec::factored_1d(name, Field::constant(0.0), Field::constant(e));
    if (name == "case_study")
        return planar(name, Poly2({{-1.0, 2.0}, {2.0, -4.0}}), Poly2({{-1.0, 1.5}, {2.0, -5.5}}), e);
    if (name == "stable_cycle_rho2")
        return planar(name, Poly2({{1.0, -3.0}, {1.0, 0.0}}), Poly2({{-2.0, 1.0}, {3.0, 0.0}}), e);
    if (name == "unstable_cycle_rho_half")
        return planar(name, Poly2({{2.0, -3.0}, {-1.0, 0.0}}), Poly2({{-1.0, -1.0}, {3.0, 0.0}}), e);
    return planar(name, Poly2({{1.0, 0.5}, {0.0, -3.0}}), Poly2({{1.0, 0.0}, {0.5, -3.0}}), e);
}

} // namespace degenflow
