#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace randfact {

using idx = std::int64_t;

// Base class for every error the library raises on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed external input (matrix files, report paths). CLI exit code 2.
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Caller violated a documented precondition. CLI exit code 3.
struct ParameterError : Error {
    explicit ParameterError(const std::string& msg) : Error(msg) {}
};

// Computation failed numerically. CLI exit code 4.
struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Iterative kernel exhausted its sweep budget.
struct ConvergenceError : NumericalError {
    explicit ConvergenceError(const std::string& msg) : NumericalError(msg) {}
};

// Cholesky pivot failure: input is not numerically positive definite.
struct NotPositiveDefiniteError : NumericalError {
    explicit NotPositiveDefiniteError(const std::string& msg) : NumericalError(msg) {}
};

// A one-shot matrix stream was accessed after its single pass was consumed.
struct StreamContractError : Error {
    explicit StreamContractError(const std::string& msg) : Error(msg) {}
};

} // namespace randfact
