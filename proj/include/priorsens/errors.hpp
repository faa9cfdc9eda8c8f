#pragma once

#include <stdexcept>
#include <string>

namespace priorsens {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes (see cli.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Two density grids that must share a support do not.
class AlignmentError : public Error {
public:
    using Error::Error;
};

// No parameter point at the requested distance exists in a direction.
class ContourUnreachableError : public Error {
public:
    ContourUnreachableError(const std::string& what, double angle)
        : Error(what), angle_(angle) {}

    [[nodiscard]] double angle() const noexcept { return angle_; }

private:
    double angle_;
};

// Reweighting a posterior by a prior ratio is numerically meaningless.
class ReweightError : public Error {
public:
    using Error::Error;
};

// Quadrature or root finding produced a non-finite or unconverged result.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Malformed or degenerate input files.
class IngestionError : public Error {
public:
    using Error::Error;
};

}  // namespace priorsens
