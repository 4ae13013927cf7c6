#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ergoid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on caller-supplied parameters does not hold.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// An orbit left the unit interval.
class DynamicsError : public Error {
public:
    DynamicsError(std::size_t step, double value);

    std::size_t step() const noexcept { return step_; }
    double value() const noexcept { return value_; }

private:
    std::size_t step_;
    double value_;
};

/// A factorization or eigen-decomposition could not be carried out.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Restricted design matrix is rank deficient.
class NumericalRankError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Identification pipeline could not produce a usable instance.
class ExperimentError : public Error {
public:
    using Error::Error;
};

/// Log-log regression could not be performed.
class FitError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration file or command line.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace ergoid
