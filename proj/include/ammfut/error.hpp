#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ammfut {

/// Base class for domain failures raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A fixed-quantity futures delivery exceeds the realized renewable output.
class InfeasibleDelivery : public Error {
public:
    InfeasibleDelivery(std::size_t period, double requested, double available);
    std::size_t period() const { return period_; }

private:
    std::size_t period_;
};

/// A producer program has no feasible point; `period` names the first
/// offending period when one can be identified.
class InfeasibleProgram : public Error {
public:
    InfeasibleProgram(const std::string& what, std::ptrdiff_t period = -1)
        : Error(what), period_(period) {}
    std::ptrdiff_t period() const { return period_; }

private:
    std::ptrdiff_t period_;
};

/// The LP solver could not certify a result within its iteration budget.
class SolverFailure : public Error {
public:
    using Error::Error;
};

/// A fixed-point or bargaining loop ran out of iterations.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::vector<double> residual_trace)
        : Error(what), trace_(std::move(residual_trace)) {}
    const std::vector<double>& residual_trace() const { return trace_; }

private:
    std::vector<double> trace_;
};

/// Configuration parse or validation failure. `line`/`column` are 1-based and
/// zero when unknown.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& message, int line = 0, int column = 0);
    const std::string& field() const { return field_; }
    int line() const { return line_; }
    int column() const { return column_; }

private:
    std::string field_;
    int line_;
    int column_;
};

/// A file could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ammfut
