#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ospde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for malformed arguments: bad dimensions, mismatched shapes, out of range parameters.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// A sampled coefficient matrix left the declared ellipticity band.
class EllipticityViolation : public Error {
public:
    EllipticityViolation(const std::string& what, double t, std::array<double, 2> x,
                         std::array<double, 2> eta, double quotient)
        : Error(what), t(t), x(x), eta(eta), quotient(quotient) {}

    double t;
    std::array<double, 2> x;
    std::array<double, 2> eta;
    double quotient;
};

class KernelNotPsd : public Error {
public:
    using Error::Error;
};

/// Linear or complementarity solve did not converge.
class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, double residual)
        : Error(what), residual(residual) {}

    double residual;
};

/// Step failure with the failing time index attached.
class StepFailure : public Error {
public:
    StepFailure(const std::string& what, std::size_t step) : Error(what), step(step) {}

    std::size_t step;
};

class NotAPotential : public Error {
public:
    using Error::Error;
};

/// Configuration problems are collected and reported together.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> messages);

    const std::vector<std::string>& messages() const { return messages_; }

private:
    std::vector<std::string> messages_;
};

}  // namespace ospde
