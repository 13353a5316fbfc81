#pragma once

#include "degenflow/calc_lab.hpp"
#include "degenflow/model_spec.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace degenflow {

using CoefTable = std::vector<std::vector<double>>;  ///< [i][j]: coefficient of x1^i x2^j

/// Either a named preset, or explicit polynomial tables. The factored form
/// gives b_i = x_i(1-x_i) p_i and sigma_mi = x_i(1-x_i) q_mi; the raw form gives
/// b_i and sigma_mi directly and needs unsafe_model = true.
struct ModelConfig {
    std::string preset;
    std::optional<double> noise;  ///< preset noise override
    std::string name = "custom";
    int dim = 2;
    std::string form = "factored";  ///< "factored" or "raw"
    std::array<CoefTable, 2> p;
    std::array<std::array<CoefTable, 2>, 2> q;  ///< q[m][i]
    std::array<CoefTable, 2> b;
    std::array<std::array<CoefTable, 2>, 2> sigma;  ///< sigma[m][i]
    bool unsafe_model = false;
    bool operator==(const ModelConfig&) const = default;
};

struct ClassifySection {
    double tol_hyp = 1e-6;
    bool operator==(const ClassifySection&) const = default;
};

struct SimulateSection {
    std::vector<double> x0{0.5, 0.5};
    double horizon = 100.0;
    double dt = 0.01;
    std::size_t stride = 10;
    bool operator==(const SimulateSection&) const = default;
};

struct ConvergenceSection {
    std::vector<double> x0{0.5, 0.5};
    std::size_t runs = 200;
    double horizon = 200.0;
    double dt = 0.02;
    double trap_radius = 0.05;
    double depth_threshold = -8.0;
    double final_fraction = 0.1;
    bool operator==(const ConvergenceSection&) const = default;
};

struct CycleSection {
    std::vector<double> x0{0.5, 0.5};
    double horizon = 20000.0;
    double dt = 0.02;
    std::size_t stride = 5;
    std::size_t seeds = 1;
    double r = 0.05;
    double r_prime = 0.01;
    double r0 = 0.05;
    double warmup = 0.5;
    double tol = 0.2;
    std::size_t points = 200;
    bool operator==(const CycleSection&) const = default;
};

struct HittingSection {
    double r = 0.02;
    double log_eps = -2.0;
    double log_delta = -120.0;
    std::optional<double> log_r_prime;
    std::size_t runs = 40;
    double dt = 0.01;
    std::optional<double> K, T;
    std::size_t bound_runs = 100;
    double cap = 1e4;
    bool operator==(const HittingSection&) const = default;
};

struct CalcSection {
    std::size_t wald_runs = 10000;
    std::size_t escape_runs = 100000;
    std::size_t tail_runs = 100000;
    double dt = 1e-3;         ///< Wald and ruin runs
    double escape_dt = 1e-2;  ///< escape runs; the bridge correction keeps coarse steps exact
    std::size_t arcsine_runs = 10000;
    std::size_t arcsine_n = 10000;
    std::size_t long_paths = 8;
    double long_horizon = 1e6;
    std::vector<LemmaCase> manifest;  ///< empty: built-in tables
    bool operator==(const CalcSection&) const = default;
};

struct RunConfig {
    std::string command;  ///< optional; the CLI command must match when set
    ModelConfig model;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out;
    ClassifySection classify;
    SimulateSection simulate;
    ConvergenceSection convergence;
    CycleSection cycle;
    HittingSection hitting;
    CalcSection calc;
    bool operator==(const RunConfig&) const = default;
};

/// YAML text to config with defaults filled. Throws ParseError (line and
/// column, 1-based) for malformed text or values of the wrong type, and
/// ValidationError naming the field for unknown keys or inconsistent values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Full config, every default written out; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& c);
/// Field checks shared by parse_config and the CLI overrides.
void validate_config(const RunConfig& c);

/// Throws TangencyViolated (raw form) or ValidationError.
ModelSpec build_model(const ModelConfig& m);

} // namespace degenflow
