#include "degenflow/config.hpp"
#include "degenflow/errors.hpp"

#include <doctest.h>

using namespace degenflow;

TEST_CASE("defaults and preset shorthand") {
    const RunConfig c = parse_config("preset: case_study\n");
    CHECK(c.model.preset == "case_study");
    CHECK(c.seed == 1);
    CHECK(c.cycle.r_prime < c.cycle.r);
    CHECK(c.simulate.x0.size() == 2);
    CHECK(build_model(c.model).dim() == 2);

    const RunConfig d = parse_config("model:\n  preset: double_sink_1d\n");
    CHECK(d.simulate.x0 == std::vector<double>{0.5});
    CHECK(d.convergence.x0 == std::vector<double>{0.5});
    CHECK(build_model(d.model).dim() == 1);
}

TEST_CASE("emit and parse round trip") {
    RunConfig c = parse_config("preset: stable_cycle_rho2\nseed: 42\ncycle:\n  seeds: 3\n  r: 0.04\n");
    c.model.noise = 0.3;
    c.hitting.log_r_prime = -130.0;
    c.hitting.K = 2.5;
    LemmaCase lc;
    lc.check = "drift_wins";
    lc.nu = -0.7;
    lc.member = Member::Alternating;
    c.calc.manifest = {lc};
    const RunConfig back = parse_config(emit_config(c));
    CHECK(back == c);
    CHECK(emit_config(back) == emit_config(c));

    RunConfig m;
    m.model.preset.clear();
    m.model.dim = 2;
    m.model.p[0] = {{1.0, -0.5}, {-2.0, 0.0}};
    m.model.p[1] = {{-1.0}};
    m.model.q[0][0] = {{0.7}};
    m.model.q[1][1] = {{0.7}};
    validate_config(m);
    CHECK(parse_config(emit_config(m)) == m);
}

TEST_CASE("parse errors carry line and column") {
    try {
        parse_config("seed: 1\ncycle:\n  r: [0.1\n");
        FAIL("no exception");
    } catch (const ParseError& e) {
        CHECK(e.line() >= 3);
        CHECK(e.column() >= 1);
    }
    try {
        parse_config("preset: case_study\nconvergence:\n  runs: many\n");
        FAIL("no exception");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("convergence.runs") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("preset: case_study\nseed: -3\n"), ParseError);
}

TEST_CASE("inconsistent values name the field") {
    try {
        parse_config("preset: case_study\ncycle:\n  r: 0.05\n  r_prime: 0.08\n");
        FAIL("no exception");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("cycle.r_prime") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("preset: case_study\ncycle:\n  radius: 1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("preset: case_study\nhitting:\n  log_r_prime: -10\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("preset: case_study\nsimulate:\n  x0: [0.5]\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("preset: case_study\nsimulate:\n  x0: [0.0, 0.5]\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("calc:\n  manifest:\n    - check: nope\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("model:\n  preset: case_study\n  p1: 1\n"), ValidationError);
}

TEST_CASE("raw models need the unsafe flag and tangency") {
    const char* raw = "model:\n  form: raw\n  dim: 1\n  b1: [[0], [1], [-1]]\n  s11: [[0], [0.3], [-0.3]]\n";
    CHECK_THROWS_AS(parse_config(raw), ValidationError);
    const RunConfig ok = parse_config(std::string(raw) + "  unsafe_model: true\n");
    CHECK(build_model(ok.model).dim() == 1);
    const RunConfig bad = parse_config("model:\n  form: raw\n  dim: 1\n  b1: 1\n  s11: 0.1\n  unsafe_model: true\n");
    CHECK_THROWS_AS(build_model(bad.model), TangencyViolated);
}
