#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace xdl {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// Bad input data or parameters: non-finite fields, p <= 0, malformed grids.
/// The CLI maps this family to exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "validation"; }
};

/// Model-level validation failure (negative cross function, bad coefficients).
class ModelError : public ValidationError {
public:
    using ValidationError::ValidationError;
    const char* kind() const noexcept override { return "model"; }
};

/// Configuration problems, carrying one message per offending key.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const noexcept { return issues_; }
    const char* kind() const noexcept override { return "config"; }

private:
    std::vector<std::string> issues_;
};

/// Runtime failure of a time step or linear solve. CLI exit code 2.
class SolverError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "solver"; }
};

class PositivityError : public SolverError {
public:
    using SolverError::SolverError;
    const char* kind() const noexcept override { return "positivity"; }
};

/// Histories or reports that cannot be compared or evaluated.
class ComparisonError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "comparison"; }
};

} // namespace xdl
