#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace degenflow {

// Base of every error raised by the library. `assumption()` separates
// violations of the model hypotheses (exit status 2 in the CLI) from
// numerical or internal failures (exit status 1).
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what, bool assumption = false)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)), assumption_(assumption) {}
    const std::string& kind() const noexcept { return kind_; }
    bool assumption() const noexcept { return assumption_; }

private:
    std::string kind_;
    bool assumption_;
};

#define DEGENFLOW_ERROR(Name, IsAssumption)                                   \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name, what, IsAssumption) {} \
    };

DEGENFLOW_ERROR(MissingDerivative, false)
DEGENFLOW_ERROR(TangencyViolated, true)
DEGENFLOW_ERROR(StepRejected, false)
DEGENFLOW_ERROR(AdaptiveFailure, false)
DEGENFLOW_ERROR(NonHyperbolic, true)
DEGENFLOW_ERROR(NonHyperbolicCycle, true)
DEGENFLOW_ERROR(NonHyperbolicEdge, true)
DEGENFLOW_ERROR(NotInS, true)
DEGENFLOW_ERROR(QuadratureFailure, false)
DEGENFLOW_ERROR(SolverFailure, false)
DEGENFLOW_ERROR(AssumptionViolated, true)
DEGENFLOW_ERROR(Infeasible, true)
DEGENFLOW_ERROR(ScenarioMismatch, true)
DEGENFLOW_ERROR(BadParameters, false)
DEGENFLOW_ERROR(MissingCorrector, false)
DEGENFLOW_ERROR(HorizonExceeded, false)
DEGENFLOW_ERROR(ValidationError, false)

#undef DEGENFLOW_ERROR

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error("ParseError", "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

} // namespace degenflow
