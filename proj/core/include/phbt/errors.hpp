#pragma once

#include <stdexcept>
#include <string>

namespace phbt {

/// Base of all library errors. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: out-of-range parameters, malformed configs.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not deliver a result within its contract.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Weight reached the highest retained Fock level.
class TruncationError : public NumericError {
public:
    using NumericError::NumericError;
};

/// A ratio or conditional state is undefined (zero denominator, zero-probability event).
class UndefinedError : public NumericError {
public:
    using NumericError::NumericError;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace phbt
