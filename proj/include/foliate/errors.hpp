#pragma once

#include <stdexcept>
#include <string>

namespace foliate {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimensions of two operands do not chain.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An input violates an operation's precondition (bad fixed point, unstable spectrum, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A divisor of a homological equation (or a spectral gap) fell below the resonance tolerance.
class ResonanceError : public Error {
public:
    ResonanceError(const std::string& what, int degree, int weight)
        : Error(what), degree_(degree), weight_(weight) {}

    int degree() const noexcept { return degree_; }
    /// Number of X1 slots of the offending block (the j of the (n, j) pair).
    int weight() const noexcept { return weight_; }

private:
    int degree_;
    int weight_;
};

/// An iterative procedure (integrator, Newton, fixed-point, series) failed to converge.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or artifact file.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace foliate
