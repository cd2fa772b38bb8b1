#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bsee {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or indices that do not line up (dimension mismatch, wrong time index, misaligned grids).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// An argument outside the mathematical domain of an operation (negative time, gamma outside [0,1]).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A solver precondition that the caller violated, e.g. a step size above a stability bound.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// An iterative solve that failed to reach its tolerance. Carries the residual history.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> residuals)
        : Error(what), residuals_(std::move(residuals)) {}

    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

/// Failure inside a conditional-expectation backend (singular regression, unsupported time).
class BackendError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace bsee
